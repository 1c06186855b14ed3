#include <doctest.h>

#include "occdepth/errors.hpp"
#include "occdepth/gradcheck.hpp"

using namespace occdepth;

TEST_CASE("every registered target passes the finite-difference check") {
  for (const std::string& target : grad_check_targets()) {
    CAPTURE(target);
    const GradCheckReport r = grad_check(target, 0, 20);
    CHECK(r.instances == 20);
    CHECK(r.entries_checked > 0);
    CHECK(r.max_rel_error < kGradCheckTolerance);
    CHECK(r.masked_gradients_zero);
    CHECK(r.passed);
  }
}

TEST_CASE("checks are deterministic per seed") {
  const GradCheckReport a = grad_check("smoothness_loss", 4, 5);
  const GradCheckReport b = grad_check("smoothness_loss", 4, 5);
  CHECK(a.max_rel_error == b.max_rel_error);
  CHECK(a.entries_checked == b.entries_checked);
}

TEST_CASE("unknown target is rejected") {
  CHECK_THROWS_AS(grad_check("no_such_loss", 0), DomainError);
}

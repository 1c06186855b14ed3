#include <doctest.h>

#include "occdepth/errors.hpp"
#include "occdepth/grid.hpp"

using namespace occdepth;

TEST_CASE("grid indexing is row-major with channels last") {
  Grid g(2, 3, 2);
  g(1, 2, 1) = 7.0;
  CHECK(g.size() == 12);
  CHECK(g[g.size() - 1] == 7.0);
  CHECK(g.index(1, 0, 0) == 6);
  CHECK(g.pixel_count() == 6);
}

TEST_CASE("channel mean averages channels") {
  Grid g(1, 2, 3);
  g(0, 0, 0) = 0.0;
  g(0, 0, 1) = 0.3;
  g(0, 0, 2) = 0.6;
  const Grid m = channel_mean(g);
  CHECK(m.channels() == 1);
  CHECK(m(0, 0) == doctest::Approx(0.3));
  CHECK(m(0, 1) == 0.0);
}

TEST_CASE("mask algebra") {
  Mask a(2, 2), b(2, 2);
  a.set(0, 0, true);
  a.set(0, 1, true);
  b.set(0, 1, true);
  b.set(1, 1, true);
  CHECK(mask_and(a, b).count() == 1);
  CHECK(mask_not(a).count() == 2);
  CHECK(mask_and(a, b)(0, 1));
}

TEST_CASE("shape checks throw ShapeError") {
  CHECK_THROWS_AS(require_same_shape(Grid(2, 2, 1), Grid(2, 3, 1), "t"), ShapeError);
  CHECK_THROWS_AS(require_same_spatial(Grid(2, 2, 1), Mask(3, 2), "t"), ShapeError);
  CHECK_NOTHROW(require_same_spatial(Grid(2, 2, 3), Grid(2, 2, 1), "t"));
}

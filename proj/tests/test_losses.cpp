#include <doctest.h>

#include <cmath>
#include <random>

#include "occdepth/errors.hpp"
#include "occdepth/losses.hpp"

using namespace occdepth;

namespace {

SampledGrid all_valid(const Grid& g) { return {g, Mask(g.height(), g.width(), true)}; }

Grid random_grid(int h, int w, int c, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Grid g(h, w, c);
  for (double& v : g.data()) v = dist(rng);
  return g;
}

Mask left_half(int h, int w) {
  Mask m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w / 2; ++x) m.set(y, x, true);
  return m;
}

Grid random_probs(int h, int w, int k, std::uint64_t seed) {
  Grid g = random_grid(h, w, k, seed, 0.05, 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int c = 0; c < k; ++c) s += g(y, x, c);
      for (int c = 0; c < k; ++c) g(y, x, c) /= s;
    }
  }
  return g;
}

}  // namespace

TEST_CASE("photometric loss examples") {
  const Grid t = random_grid(6, 6, 3, 1);
  CHECK(photometric_loss(t, all_valid(t)).value == 0.0);
  const LossValue l = photometric_loss(Grid(4, 4, 3, 1.0), all_valid(Grid(4, 4, 3, 0.5)));
  CHECK(l.value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(l.grad("recon")(0, 0, 0) == doctest::Approx(-1.0 / 48.0));
}

TEST_CASE("photometric loss ignores invalid pixels and needs support") {
  SampledGrid r = all_valid(Grid(2, 2, 1, 0.0));
  r.valid.set(0, 0, false);
  Grid t(2, 2, 1, 1.0);
  t(0, 0) = 100.0;
  CHECK(photometric_loss(t, r).value == doctest::Approx(1.0));
  CHECK_THROWS_AS(photometric_loss(t, {Grid(2, 2, 1), Mask(2, 2)}), EmptySupportError);
  CHECK_THROWS_AS(photometric_loss(Grid(2, 3, 1), r), ShapeError);
}

TEST_CASE("depth loss examples") {
  const Grid d = random_grid(8, 8, 1, 2, 1.0, 100.0);
  CHECK(depth_loss(d, d, Mask(8, 8, true)).value == 0.0);
  const LossValue l = depth_loss(Grid(8, 8, 1, 12.0), Grid(8, 8, 1, 10.0), left_half(8, 8));
  CHECK(l.value == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(l.grad("depth_target")(0, 0) == doctest::Approx(1.0 / 32.0));
  CHECK(l.grad("depth_target")(0, 7) == 0.0);
  CHECK(l.grad("depth_source")(0, 0) == doctest::Approx(-1.0 / 32.0));
  CHECK_THROWS_AS(depth_loss(d, d, Mask(8, 8)), EmptySupportError);
}

TEST_CASE("depth loss is symmetric and blind outside the mask") {
  const Grid a = random_grid(8, 8, 1, 3, 1.0, 100.0);
  const Grid b = random_grid(8, 8, 1, 4, 1.0, 100.0);
  const Mask m = left_half(8, 8);
  const double base = depth_loss(a, b, m).value;
  CHECK(depth_loss(b, a, m).value == base);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  for (int trial = 0; trial < 20; ++trial) {
    Grid pa = a, pb = b;
    for (int y = 0; y < 8; ++y) {
      for (int x = 4; x < 8; ++x) {
        pa(y, x) = dist(rng);
        pb(y, x) = std::nan("");
      }
    }
    CHECK(depth_loss(pa, pb, m).value == base);
  }
}

TEST_CASE("smoothness loss examples") {
  const Grid img = random_grid(8, 8, 3, 5);
  CHECK(smoothness_loss(Grid(8, 8, 1, 3.0), img).value == 0.0);

  Grid ramp(8, 10, 1);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x) ramp(y, x) = x;
  const double flat = smoothness_loss(ramp, Grid(8, 10, 3, 0.5)).value;
  CHECK(flat == doctest::Approx(9.0 / 10.0).epsilon(1e-15));

  Grid edge(8, 10, 3, 0.0);
  for (int y = 0; y < 8; ++y)
    for (int x = 5; x < 10; ++x)
      for (int c = 0; c < 3; ++c) edge(y, x, c) = 1.0;
  CHECK(smoothness_loss(ramp, edge).value < flat);
}

TEST_CASE("normalized smoothness is scale invariant") {
  const Grid d = random_grid(8, 8, 1, 6, 10.0, 50.0);
  Grid d3 = d;
  for (double& v : d3.data()) v *= 3.0;
  const Grid img = random_grid(8, 8, 3, 7);
  const SmoothnessOptions opt{true};
  CHECK(smoothness_loss(d3, img, opt).value ==
        doctest::Approx(smoothness_loss(d, img, opt).value).epsilon(1e-12));
  CHECK(smoothness_loss(d3, img).value ==
        doctest::Approx(3.0 * smoothness_loss(d, img).value).epsilon(1e-12));
}

TEST_CASE("semantic consistency examples") {
  Grid oh(4, 4, 4, 0.0);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) oh(y, x, (x + y) % 4) = 1.0;
  const Mask all(4, 4, true);
  CHECK(semantic_consistency_loss(oh, oh, oh, all, all).value == 0.0);

  const Grid uniform(4, 4, 4, 0.25);
  const LossValue u = semantic_consistency_loss(oh, uniform, uniform, all, all);
  CHECK(u.value == doctest::Approx(2.0 * std::log(4.0)).epsilon(1e-12));
  CHECK(u.value == doctest::Approx(2.7726).epsilon(1e-4));
  CHECK(semantic_consistency_loss(oh, uniform, uniform, all).value == doctest::Approx(u.value));
  CHECK_THROWS_AS(semantic_consistency_loss(oh, uniform, uniform, Mask(4, 4), all),
                  EmptySupportError);
}

TEST_CASE("semantic consistency clamps log and is blind outside the mask") {
  const Grid s0 = random_probs(6, 6, 3, 1);
  Grid zeros(6, 6, 3, 0.0);
  const Mask all(6, 6, true);
  CHECK(semantic_consistency_loss(s0, zeros, zeros, all).value ==
        doctest::Approx(-2.0 * std::log(kLogEpsilon)));

  const Grid a = random_probs(6, 6, 3, 2);
  const Grid b = random_probs(6, 6, 3, 3);
  const Mask m = left_half(6, 6);
  const double base = semantic_consistency_loss(s0, a, b, m, m).value;
  Grid pa = a, pb = b;
  for (int y = 0; y < 6; ++y)
    for (int x = 3; x < 6; ++x)
      for (int c = 0; c < 3; ++c) {
        pa(y, x, c) = 0.0;
        pb(y, x, c) = 5.0;
      }
  const LossValue l = semantic_consistency_loss(s0, pa, pb, m, m);
  CHECK(l.value == base);
  CHECK(l.grad("warped_prev")(0, 5, 0) == 0.0);
}

TEST_CASE("semantic ties resolve to the lowest class") {
  Grid s0(1, 1, 2, 0.5);
  Grid w(1, 1, 2);
  w(0, 0, 0) = 1.0;
  w(0, 0, 1) = 0.0;
  CHECK(semantic_consistency_loss(s0, w, w, Mask(1, 1, true)).value == 0.0);
}

TEST_CASE("total loss weights and accumulates") {
  LossValue a{0.5, {{"x", Grid(1, 1, 1, 1.0)}}};
  LossValue b{0.25, {{"x", Grid(1, 1, 1, 2.0)}, {"y", Grid(1, 1, 1, 3.0)}}};
  LossWeights w;
  w.photometric = 2.0;
  w.smoothness = 4.0;
  const LossValue t =
      total_loss(w, {{LossTerm::photometric, a}, {LossTerm::smoothness, b}});
  CHECK(t.value == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(t.grad("x")(0, 0) == doctest::Approx(10.0));
  CHECK(t.grad("y")(0, 0) == doctest::Approx(12.0));

  LossWeights zero{0.0, 0.0, 0.0, 0.0};
  CHECK(total_loss(zero, {{LossTerm::photometric, a}, {LossTerm::smoothness, b}}).value == 0.0);
  LossWeights one;
  one.photometric = 1.0;
  CHECK(total_loss(one, {{LossTerm::photometric, a}}).value == 0.5);
  CHECK(total_loss(one, {{LossTerm::photometric, a, 0.5}}).value == 0.25);
}

TEST_CASE("losses are non-negative and finite on random inputs") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Grid a = random_grid(6, 6, 3, s);
    const Grid b = random_grid(6, 6, 3, s + 100);
    const Grid d = random_grid(6, 6, 1, s + 200, 1.0, 150.0);
    const double p = photometric_loss(a, all_valid(b)).value;
    const double sm = smoothness_loss(d, a).value;
    CHECK(p >= 0.0);
    CHECK(std::isfinite(p));
    CHECK(sm >= 0.0);
    CHECK(std::isfinite(sm));
  }
}

#include <doctest.h>

#include <random>

#include "occdepth/errors.hpp"
#include "occdepth/sampler.hpp"

using namespace occdepth;

namespace {

Grid coords_of(std::initializer_list<std::pair<double, double>> uv) {
  Grid c(1, static_cast<int>(uv.size()), 2);
  int i = 0;
  for (const auto& [u, v] : uv) {
    c(0, i, 0) = u;
    c(0, i, 1) = v;
    ++i;
  }
  return c;
}

Grid random_grid(int h, int w, int ch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Grid g(h, w, ch);
  for (double& v : g.data()) v = dist(rng);
  return g;
}

}  // namespace

TEST_CASE("sampling at integer nodes returns the node values exactly") {
  const Grid g = random_grid(5, 6, 3, 1);
  const SampledGrid s = sample_bilinear(g, identity_warp(5, 6).coords);
  CHECK(s.values == g);
  CHECK(s.valid.count() == 30);
}

TEST_CASE("sampling at the cell midpoint averages the four corners") {
  Grid g(2, 2, 1);
  g(0, 0) = 0.0;
  g(0, 1) = 1.0;
  g(1, 0) = 2.0;
  g(1, 1) = 3.0;
  const SampledGrid s = sample_bilinear(g, coords_of({{0.5, 0.5}, {0.25, 0.0}}));
  CHECK(s.values(0, 0) == doctest::Approx(1.5));
  CHECK(s.values(0, 1) == doctest::Approx(0.25));
}

TEST_CASE("out-of-bounds samples are zero and invalid") {
  const Grid g(4, 4, 2, 0.7);
  const SampledGrid s =
      sample_bilinear(g, coords_of({{-0.01, 1.0}, {3.01, 1.0}, {1.0, 3.5}, {3.0, 3.0}}));
  for (int i = 0; i < 3; ++i) {
    CHECK_FALSE(s.valid(0, i));
    CHECK(s.values(0, i, 0) == 0.0);
    CHECK(s.values(0, i, 1) == 0.0);
  }
  CHECK(s.valid(0, 3));
  CHECK(s.values(0, 3, 1) == doctest::Approx(0.7));
}

TEST_CASE("samples stay within neighbor bounds and constants are preserved") {
  const Grid g = random_grid(8, 8, 1, 9);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(0.0, 7.0);
  Grid c(1, 500, 2);
  for (double& v : c.data()) v = dist(rng);
  const SampledGrid s = sample_bilinear(g, c);
  for (int i = 0; i < 500; ++i) {
    const int x0 = static_cast<int>(c(0, i, 0)), y0 = static_cast<int>(c(0, i, 1));
    const int x1 = std::min(x0 + 1, 7), y1 = std::min(y0 + 1, 7);
    const double lo = std::min({g(y0, x0), g(y0, x1), g(y1, x0), g(y1, x1)});
    const double hi = std::max({g(y0, x0), g(y0, x1), g(y1, x0), g(y1, x1)});
    CHECK(s.values(0, i) >= lo - 1e-12);
    CHECK(s.values(0, i) <= hi + 1e-12);
  }
  const SampledGrid k = sample_bilinear(Grid(8, 8, 1, 0.42), c);
  for (double v : k.values.data()) CHECK(v == doctest::Approx(0.42).epsilon(1e-14));
}

TEST_CASE("sampler gradient is zero at invalid pixels") {
  const Grid g = random_grid(4, 4, 1, 3);
  const Grid c = coords_of({{-2.0, 1.0}, {1.5, 1.5}});
  const BilinearGradients gr = sample_bilinear_grad(g, c, Grid(1, 2, 1, 1.0));
  CHECK(gr.coords(0, 0, 0) == 0.0);
  CHECK(gr.coords(0, 0, 1) == 0.0);
  double total = 0.0;
  for (double v : gr.grid.data()) total += v;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("synthesize_view intersects warp validity") {
  const Grid g(4, 4, 1, 0.5);
  WarpField w = identity_warp(4, 4);
  w.valid.set(1, 1, false);
  const SampledGrid s = synthesize_view(g, w);
  CHECK(s.valid.count() == 15);
  CHECK(s.values(1, 1) == 0.0);
}

TEST_CASE("sampler rejects malformed coordinates") {
  CHECK_THROWS_AS(sample_bilinear(Grid(4, 4, 1), Grid(2, 2, 3)), ShapeError);
}

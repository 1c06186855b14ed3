#include <doctest.h>

#include <cmath>

#include "occdepth/errors.hpp"
#include "occdepth/sampler.hpp"
#include "occdepth/synth.hpp"

using namespace occdepth;

namespace {

const CameraIntrinsics kDesk = CameraIntrinsics::desk_default();

Scene plane_at(double z, std::uint64_t seed = 1) {
  return Scene::plane(Eigen::Vector3d::UnitZ(), z, Texture::seeded(seed));
}

// Camera inside a tube whose axis is tilted away from the optical axis, so
// every pixel ray meets the wall.
Scene oblique_tube() {
  return Scene::tube(Eigen::Vector3d::Zero(), Eigen::Vector3d(0.6, 0.0, 1.0).normalized(), 20.0,
                     Texture::seeded(2));
}

struct SynthesisError {
  double photometric = 0.0;
  double depth_rel = 0.0;
  std::size_t valid = 0;
};

SynthesisError synthesis_error(const Scene& scene, const PoseSE3& world_to_source) {
  const ViewPair p = make_pair(scene, kDesk, PoseSE3::identity(), world_to_source);
  const WarpField w = warp_field(p.target_depth, kDesk, p.target_to_source);
  const SampledGrid img = synthesize_view(p.source_image, w);
  const SampledGrid dep = synthesize_view(p.source_depth, w);
  SynthesisError e;
  double photo = 0.0, depth = 0.0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (!img.valid(y, x)) continue;
      ++e.valid;
      for (int c = 0; c < 3; ++c) photo += std::abs(img.values(y, x, c) - p.target_image(y, x, c));
      depth = std::max(depth, std::abs(dep.values(y, x) - w.src_depth(y, x)) / w.src_depth(y, x));
    }
  }
  e.photometric = photo / (3.0 * static_cast<double>(e.valid));
  e.depth_rel = depth;
  return e;
}

}  // namespace

TEST_CASE("fronto-parallel plane renders constant depth") {
  const RenderedView v = render_view(plane_at(50.0), kDesk, PoseSE3::identity());
  for (double d : v.depth.data()) CHECK(std::abs(d - 50.0) < 1e-9);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      CHECK(v.image(y, x, 0) >= 0.2);
      CHECK(v.image(y, x, 0) <= 0.8);
      CHECK(v.image(y, x, 1) == doctest::Approx(0.75 * v.image(y, x, 0)));
      CHECK(v.image(y, x, 2) == doctest::Approx(0.6 * v.image(y, x, 0)));
    }
  }
  const RenderedView closer =
      render_view(plane_at(50.0), kDesk, PoseSE3::from_translation({0.0, 0.0, -10.0}));
  for (double d : closer.depth.data()) CHECK(std::abs(d - 40.0) < 1e-9);
}

TEST_CASE("rendered depth matches the closed-form plane intersection") {
  const Eigen::Vector3d n = Eigen::Vector3d(0.2, -0.1, 1.0).normalized();
  const Scene s = Scene::plane(n, 45.0, Texture::seeded(3));
  const RenderedView v = render_view(s, kDesk, PoseSE3::identity());
  for (int y = 0; y < 64; y += 7) {
    for (int x = 0; x < 64; x += 5) {
      const Eigen::Vector3d ray((x - kDesk.cx) / kDesk.fx, (y - kDesk.cy) / kDesk.fy, 1.0);
      CHECK(std::abs(v.depth(y, x) - 45.0 / n.dot(ray)) < 1e-9);
    }
  }
}

TEST_CASE("tube seen from outside deepens away from the axis along each row") {
  const Scene s = Scene::tube({0.0, 0.0, 60.0}, Eigen::Vector3d::UnitY(), 40.0, Texture::seeded(4));
  const RenderedView v = render_view(s, kDesk, PoseSE3::identity());
  for (int y = 0; y < 64; ++y) {
    for (int x = 32; x < 63; ++x) {
      CHECK(v.depth(y, x + 1) > v.depth(y, x));
      CHECK(v.depth(y, 63 - x - 1) > v.depth(y, 63 - x));
    }
    const double u = (32.0 - kDesk.cx) / kDesk.fx;
    const double a = 1.0 + u * u;
    const double t = (60.0 - std::sqrt(60.0 * 60.0 - a * (60.0 * 60.0 - 40.0 * 40.0))) / a;
    CHECK(std::abs(v.depth(y, 32) - t) < 1e-9);
  }
}

TEST_CASE("camera inside a tube sees the wall at finite depth") {
  const RenderedView v = render_view(oblique_tube(), kDesk, PoseSE3::identity());
  for (double d : v.depth.data()) {
    CHECK(d > 0.0);
    CHECK(std::isfinite(d));
  }
}

TEST_CASE("identical poses give identical views and identity relative pose") {
  const PoseSE3 pose = PoseSE3::from_axis_angle({0.01, 0.02, 0.0}, {1.0, 0.0, 0.0});
  const ViewPair p = make_pair(plane_at(50.0), kDesk, pose, pose);
  CHECK(p.target_image == p.source_image);
  CHECK((p.target_to_source.matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-12);
}

TEST_CASE("rendering is deterministic") {
  const RenderedView a = render_view(oblique_tube(), kDesk, PoseSE3::identity());
  const RenderedView b = render_view(oblique_tube(), kDesk, PoseSE3::identity());
  CHECK(a.image == b.image);
  CHECK(a.depth == b.depth);
}

TEST_CASE("uncovered frustum is reported") {
  const Scene s = Scene::tube({0.0, 0.0, 60.0}, Eigen::Vector3d::UnitY(), 5.0, Texture::seeded(4));
  CHECK_THROWS_AS(render_view(s, kDesk, PoseSE3::identity()), SceneCoverageError);
  CHECK_THROWS_AS(Scene::plane(Eigen::Vector3d::UnitZ(), -1.0, Texture::seeded(0)).validate(),
                  DomainError);
}

TEST_CASE("view synthesis reproduces the target on a plane") {
  const SynthesisError e = synthesis_error(
      plane_at(50.0), PoseSE3::from_axis_angle({0.01, -0.02, 0.015}, {3.0, -2.0, 2.0}));
  CHECK(e.valid > 2000);
  CHECK(e.photometric < 0.02);
  CHECK(e.depth_rel < 0.01);
}

TEST_CASE("view synthesis reproduces the target inside a tube") {
  const SynthesisError e = synthesis_error(
      oblique_tube(), PoseSE3::from_axis_angle({0.01, 0.01, -0.02}, {0.5, -0.5, -2.0}));
  CHECK(e.valid > 2000);
  CHECK(e.photometric < 0.02);
  CHECK(e.depth_rel < 0.01);
}

TEST_CASE("weak texture has low contrast") {
  const Scene s = Scene::plane(Eigen::Vector3d::UnitZ(), 50.0,
                               Texture::seeded(1, 32.0, Texture::kWeakContrast));
  const RenderedView v = render_view(s, kDesk, PoseSE3::identity());
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) CHECK(std::abs(v.image(y, x, 0) - 0.5) <= 0.03 + 1e-12);
}

#include <doctest.h>

#include <cmath>

#include "occdepth/errors.hpp"
#include "occdepth/toy.hpp"

using namespace occdepth;

namespace {

RunConfig short_run(int steps) {
  RunConfig c;
  c.steps = steps;
  return c;
}

}  // namespace

TEST_CASE("zero learning rate leaves parameters unchanged") {
  RunConfig c = short_run(5);
  c.learning_rate = 0.0;
  const ToyModel init = initial_model(make_toy_problem(c));
  const TrainReport r = train_toy(c);
  CHECK(r.model.depth_params == init.depth_params);
  CHECK(r.steps_run == 5);
}

TEST_CASE("training with augmentation and segmentation is deterministic") {
  RunConfig c = short_run(15);
  c.augmentation = true;
  c.segmentation = true;
  c.mask_seed = 3;
  const TrainReport a = train_toy(c);
  const TrainReport b = train_toy(c);
  CHECK(a.loss_curve == b.loss_curve);
  CHECK(a.final_depth == b.final_depth);
  REQUIRE(a.occluded_metrics.has_value());
}

// The augmentation term's pseudo-label is detached, so only configurations
// without it have a total derivative equal to the analytic gradient.
TEST_CASE("objective gradient matches finite differences") {
  RunConfig c;
  c.segmentation = true;
  const ToyProblem problem = make_toy_problem(c);
  ToyModel model = initial_model(problem);
  for (std::size_t i = 0; i < model.depth_params.size(); ++i) {
    model.depth_params[i] += 0.01 * std::sin(static_cast<double>(i));
  }
  const ToyObjective obj = evaluate_objective(problem, model);
  for (std::size_t i : {100u, 1000u, 2080u, 3000u}) {
    const double h = 1e-5;
    ToyModel lo = model, hi = model;
    lo.depth_params[i] -= h;
    hi.depth_params[i] += h;
    const double num =
        (evaluate_objective(problem, hi).value - evaluate_objective(problem, lo).value) / (2 * h);
    CHECK(std::abs(obj.grad_depth_params[i] - num) <=
          1e-4 * std::max(std::abs(num), 1e-8) + 1e-10);
  }
}

TEST_CASE("pose gradient matches finite differences when pose is learned") {
  RunConfig c;
  c.known_pose = false;
  const ToyProblem problem = make_toy_problem(c);
  ToyModel model = initial_model(problem);
  for (std::size_t i = 0; i < model.depth_params.size(); ++i) {
    model.depth_params[i] += 0.05 * std::cos(0.3 * static_cast<double>(i));
  }
  const ToyObjective obj = evaluate_objective(problem, model);
  REQUIRE(obj.grad_pose.size() == 2);
  for (int k = 0; k < 6; ++k) {
    const double h = 1e-6;
    ToyModel lo = model, hi = model;
    lo.pose_params[0][k] -= h;
    hi.pose_params[0][k] += h;
    const double num =
        (evaluate_objective(problem, hi).value - evaluate_objective(problem, lo).value) / (2 * h);
    CHECK(std::abs(obj.grad_pose[0][k] - num) <= 1e-4 * std::abs(num) + 1e-7);
  }
}

TEST_CASE("sigmoid depth parameterization") {
  ToyModel m;
  m.depth_params = Grid(1, 1, 1, m.param_for_depth(50.0));
  CHECK(m.depth()(0, 0) == doctest::Approx(50.0).epsilon(1e-12));
  const double s = (50.0 - 1.0) / 149.0;
  CHECK(m.depth_jacobian()(0, 0) == doctest::Approx(149.0 * s * (1.0 - s)).epsilon(1e-12));
}

TEST_CASE("pose vector round trip") {
  PoseVector v;
  v << 0.1, -0.2, 0.05, 1.0, 2.0, -3.0;
  CHECK((pose_to_vector(pose_from_vector(v)) - v).norm() < 1e-12);
}

TEST_CASE("run config JSON round trip and validation") {
  RunConfig c;
  c.steps = 123;
  c.augmentation = true;
  c.semantic_masks = SemanticMaskMode::shared;
  const RunConfig back = run_config_from_json(run_config_to_json(c));
  CHECK(back.steps == 123);
  CHECK(back.augmentation);
  CHECK(back.semantic_masks == SemanticMaskMode::shared);
  CHECK(run_config_to_json(back) == run_config_to_json(c));
  RunConfig bad;
  bad.learning_rate = -1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json{{"steps", -5}}), DomainError);
}

TEST_CASE("windowed monotonicity helper") {
  CHECK(windowed_non_increasing({5, 6, 4, 5, 3}, 2));
  CHECK_FALSE(windowed_non_increasing({5, 6, 4, 7, 3}, 2));
  CHECK(windowed_non_increasing({1, 2}, 5));
}

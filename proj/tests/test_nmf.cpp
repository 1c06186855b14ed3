#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "occdepth/errors.hpp"
#include "occdepth/nmf.hpp"

using namespace occdepth;

namespace {

Eigen::MatrixXd random_nonneg(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Eigen::MatrixXd block_matrix(int blocks, int rows_per_block, int cols_per_block,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.5, 1.0);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(blocks * rows_per_block, blocks * cols_per_block);
  for (int b = 0; b < blocks; ++b)
    for (int r = 0; r < rows_per_block; ++r)
      for (int c = 0; c < cols_per_block; ++c)
        v(b * rows_per_block + r, b * cols_per_block + c) = dist(rng);
  return v;
}

int argmax_row(const Eigen::MatrixXd& p, Eigen::Index r) {
  Eigen::Index best = 0;
  p.row(r).maxCoeff(&best);
  return static_cast<int>(best);
}

// Fraction of rows whose cluster agrees with the majority cluster of their block,
// requiring distinct clusters per block (purity up to label permutation).
double block_purity(const Eigen::MatrixXd& p, int blocks, int rows_per_block) {
  std::vector<int> used;
  int agree = 0;
  for (int b = 0; b < blocks; ++b) {
    std::vector<int> counts(static_cast<std::size_t>(p.cols()), 0);
    for (int r = 0; r < rows_per_block; ++r) ++counts[argmax_row(p, b * rows_per_block + r)];
    const auto it = std::max_element(counts.begin(), counts.end());
    const int label = static_cast<int>(it - counts.begin());
    if (std::find(used.begin(), used.end(), label) != used.end()) return 0.0;
    used.push_back(label);
    agree += *it;
  }
  return static_cast<double>(agree) / (blocks * rows_per_block);
}

}  // namespace

TEST_CASE("feature matrix shape and determinism") {
  std::vector<Image> views(2, Image(8, 8, 3));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (double& v : views[0].data()) v = dist(rng);
  views[1] = views[0];
  const FeatureMatrix f = extract_features(views, FilterBank::seeded(0));
  CHECK(f.data.rows() == 128);
  CHECK(f.data.cols() == 16);
  CHECK((f.data.array() >= 0.0).all());
  CHECK(f.data.topRows(64) == f.data.bottomRows(64));
  CHECK(extract_features(views, FilterBank::seeded(0)).data == f.data);
}

TEST_CASE("features of zero images are zero") {
  std::vector<Image> views(1, Image(8, 8, 3));
  CHECK(extract_features(views, FilterBank::seeded(4)).data.isZero(0.0));
}

TEST_CASE("feature extraction rejects mismatched views") {
  std::vector<Image> views{Image(8, 8, 3), Image(8, 9, 3)};
  CHECK_THROWS_AS(extract_features(views, FilterBank::seeded(0)), ShapeError);
}

TEST_CASE("filter bank kernels are zero-mean and unit-norm") {
  const FilterBank bank = FilterBank::seeded(9);
  CHECK(bank.channels() == 16);
  for (const Eigen::MatrixXd& k : bank.kernels) {
    CHECK(k.rows() == 5);
    CHECK(std::abs(k.sum()) < 1e-12);
    CHECK(k.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("error trace is non-increasing and factors stay non-negative") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Eigen::MatrixXd v = random_nonneg(128, 16, s);
    const int k = 2 + static_cast<int>(s % 3);
    NmfOptions opt;
    opt.seed = s;
    const NmfResult r = nmf_factorize(v, k, opt);
    CHECK(r.P.rows() == 128);
    CHECK(r.P.cols() == k);
    CHECK(r.Q.rows() == k);
    CHECK(r.Q.cols() == 16);
    CHECK((r.P.array() >= 0.0).all());
    CHECK((r.Q.array() >= 0.0).all());
    CHECK(static_cast<int>(r.error_trace.size()) == r.iterations_run);
    for (std::size_t i = 1; i < r.error_trace.size(); ++i) {
      CHECK(r.error_trace[i] <= r.error_trace[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("exact-rank matrices are recovered") {
  for (int k : {2, 3, 4}) {
    const Eigen::MatrixXd v =
        random_nonneg(128, k, 10 + k) * random_nonneg(k, 16, 20 + k);
    NmfOptions opt;
    opt.max_iters = 500;
    opt.tol = 0.0;
    opt.seed = 1;
    const NmfResult r = nmf_factorize(v, k, opt);
    CHECK(r.iterations_run <= 500);
    CHECK((v - r.P * r.Q).norm() / v.norm() < 1e-3);
  }
}

TEST_CASE("exact-rank recovery converges given a larger budget") {
  const Eigen::MatrixXd v = random_nonneg(128, 3, 13) * random_nonneg(3, 16, 23);
  NmfOptions opt;
  opt.max_iters = 20000;
  opt.tol = 0.0;
  opt.seed = 1;
  const NmfResult r = nmf_factorize(v, 3, opt);
  CHECK((v - r.P * r.Q).norm() / v.norm() < 1e-3);
}

TEST_CASE("disjoint column blocks cluster with full purity") {
  for (int m : {2, 3, 4}) {
    const Eigen::MatrixXd v = block_matrix(m, 30, 4, 40 + m);
    NmfOptions opt;
    opt.seed = 2;
    const NmfResult r = nmf_factorize(v, m, opt);
    CHECK(block_purity(r.P, m, 30) == 1.0);
  }
}

TEST_CASE("factorization is deterministic") {
  const Eigen::MatrixXd v = random_nonneg(64, 8, 3);
  const NmfResult a = nmf_factorize(v, 3);
  const NmfResult b = nmf_factorize(v, 3);
  CHECK(a.P == b.P);
  CHECK(a.Q == b.Q);
  CHECK(a.error_trace == b.error_trace);
}

TEST_CASE("factorization validates its inputs") {
  Eigen::MatrixXd v = random_nonneg(10, 4, 1);
  CHECK_THROWS_AS(nmf_factorize(v, 0), DomainError);
  CHECK_THROWS_AS(nmf_factorize(v, 5), DomainError);
  v(2, 2) = -0.1;
  CHECK_THROWS_AS(nmf_factorize(v, 2), DomainError);
}

TEST_CASE("orthogonality defect") {
  CHECK(orthogonality_defect(Eigen::MatrixXd::Identity(3, 5)) == 0.0);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2, 2);
  q(0, 0) = 2.0;
  CHECK(orthogonality_defect(q) == doctest::Approx(std::sqrt(10.0)));
}

TEST_CASE("segmentation softmax examples") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 4);
  p(0, 0) = 10.0;
  p.row(1) = p.row(0).array() + 3.0;
  const std::vector<SegmentationMap> s = build_segmentations(p, 2, 1, 1);
  REQUIRE(s.size() == 2);
  const double expected = std::exp(10.0) / (std::exp(10.0) + 3.0);
  CHECK(s[0](0, 0, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(s[0](0, 0, 0) == doctest::Approx(0.99986).epsilon(1e-5));
  for (int c = 0; c < 4; ++c) CHECK(s[1](0, 0, c) == doctest::Approx(s[0](0, 0, c)).epsilon(1e-14));
  CHECK(argmax_class(s[0], 0, 0) == 0);
  CHECK_THROWS_AS(build_segmentations(p, 3, 1, 1), ShapeError);
}

TEST_CASE("segmentation rows sum to one") {
  const Eigen::MatrixXd p = random_nonneg(2 * 6 * 5, 3, 7) * 20.0;
  for (double t : {0.1, 1.0, 4.0}) {
    for (const SegmentationMap& s : build_segmentations(p, 2, 6, 5, t)) {
      for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 5; ++x) {
          double sum = 0.0;
          for (int c = 0; c < 3; ++c) sum += s(y, x, c);
          CHECK(std::abs(sum - 1.0) < 1e-9);
        }
    }
  }
}

TEST_CASE("one-hot encoding") {
  Grid s(1, 3, 3, 0.0);
  s(0, 0, 0) = 0.1;
  s(0, 0, 1) = 0.7;
  s(0, 0, 2) = 0.2;
  s(0, 1, 0) = 0.5;
  s(0, 1, 1) = 0.5;
  s(0, 2, 2) = 1.0;
  const Grid oh = one_hot(s);
  CHECK(oh(0, 0, 1) == 1.0);
  CHECK(oh(0, 0, 0) == 0.0);
  CHECK(oh(0, 1, 0) == 1.0);
  CHECK(oh(0, 1, 1) == 0.0);
  CHECK(one_hot(oh) == oh);
  CHECK(argmax_labels(s)(0, 0) == 1.0);
}

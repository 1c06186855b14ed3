#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "occdepth/grid.hpp"

namespace occdepth {

/// Fixed bank of square convolution kernels, each zero-mean with unit L2
/// norm, drawn from a seeded Gaussian. Stands in for a pretrained feature
/// extractor.
struct FilterBank {
  int kernel_size = 5;
  /// Half-width of the box average applied to rectified responses; 0 disables.
  int pool_radius = 3;
  std::vector<Eigen::MatrixXd> kernels;

  int channels() const { return static_cast<int>(kernels.size()); }

  static FilterBank seeded(std::uint64_t seed, int count = 16, int kernel_size = 5);
};

/// Stacked non-negative activations, one row per pixel of each view in
/// stacking order (view-major, then row-major pixels).
struct FeatureMatrix {
  Eigen::MatrixXd data;
  int views = 0;
  int height = 0;
  int width = 0;

  int channels() const { return static_cast<int>(data.cols()); }
};

/// Convolves the channel-mean of each image with every kernel (replicated
/// borders), applies max(., 0), box-averages over the pooling window and
/// stacks the views row-wise.
FeatureMatrix extract_features(std::span<const Image> images, const FilterBank& bank);

struct NmfOptions {
  int max_iters = 200;
  /// Stop once |e_{k-1} - e_k| / e_{k-1} falls below this.
  double tol = 1e-5;
  std::uint64_t seed = 0;
};

inline constexpr double kNmfDenominatorEpsilon = 1e-9;

struct NmfResult {
  Eigen::MatrixXd P;  // rows x K
  Eigen::MatrixXd Q;  // K x C
  /// ||V - PQ||_F after each iteration.
  std::vector<double> error_trace;
  int iterations_run = 0;
};

/// Lee-Seung multiplicative updates for min ||V - PQ||_F with P, Q >= 0,
/// from a seeded uniform (0, 1] initialization. Throws DomainError for a
/// negative entry in V or K outside [1, min(rows, cols)].
NmfResult nmf_factorize(const Eigen::MatrixXd& V, int k, const NmfOptions& options = {});

/// ||Q Q^T - I||_F.
double orthogonality_defect(const Eigen::MatrixXd& Q);

/// Splits P into `views` blocks of height * width rows and applies a
/// temperature softmax to every row.
std::vector<SegmentationMap> build_segmentations(const Eigen::MatrixXd& P, int views,
                                                 int height, int width,
                                                 double temperature = 1.0);

/// Arg-max class at one pixel, lowest index on ties.
int argmax_class(const SegmentationMap& seg, int y, int x);

/// Probability 1 on the arg-max class of every pixel.
SegmentationMap one_hot(const SegmentationMap& seg);

/// Arg-max labels as an H x W grid of class indices.
Grid argmax_labels(const SegmentationMap& seg);

}  // namespace occdepth

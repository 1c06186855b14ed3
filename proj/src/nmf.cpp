#include "occdepth/nmf.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "occdepth/errors.hpp"

namespace occdepth {

FilterBank FilterBank::seeded(std::uint64_t seed, int count, int kernel_size) {
  if (count < 1 || kernel_size < 1 || kernel_size % 2 == 0) {
    throw DomainError("filter bank needs count >= 1 and an odd kernel size");
  }
  FilterBank bank;
  bank.kernel_size = kernel_size;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < count; ++k) {
    Eigen::MatrixXd kernel(kernel_size, kernel_size);
    for (int i = 0; i < kernel.size(); ++i) kernel(i) = normal(rng);
    kernel.array() -= kernel.mean();
    const double norm = kernel.norm();
    kernel /= norm > 0.0 ? norm : 1.0;
    bank.kernels.push_back(std::move(kernel));
  }
  return bank;
}

FeatureMatrix extract_features(std::span<const Image> images, const FilterBank& bank) {
  if (images.empty()) throw ShapeError("extract_features: no images");
  if (bank.kernels.empty()) throw ShapeError("extract_features: empty filter bank");
  const int h = images.front().height();
  const int w = images.front().width();
  for (const Image& image : images) {
    if (image.height() != h || image.width() != w) {
      throw ShapeError("extract_features: image " + image.shape_string() +
                       " does not match " + images.front().shape_string());
    }
  }

  FeatureMatrix out;
  out.views = static_cast<int>(images.size());
  out.height = h;
  out.width = w;
  out.data.setZero(static_cast<Eigen::Index>(images.size()) * h * w, bank.channels());
  const int radius = bank.kernel_size / 2;

  const int pool = std::max(bank.pool_radius, 0);
  Eigen::MatrixXd rectified(static_cast<Eigen::Index>(h) * w, bank.channels());

  Eigen::Index base = 0;
  for (const Image& image : images) {
    const Grid gray = channel_mean(image);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < bank.channels(); ++c) {
          const Eigen::MatrixXd& kernel = bank.kernels[static_cast<std::size_t>(c)];
          double response = 0.0;
          for (int dy = -radius; dy <= radius; ++dy) {
            const int sy = std::clamp(y + dy, 0, h - 1);
            for (int dx = -radius; dx <= radius; ++dx) {
              const int sx = std::clamp(x + dx, 0, w - 1);
              response += kernel(dy + radius, dx + radius) * gray(sy, sx);
            }
          }
          rectified(static_cast<Eigen::Index>(y) * w + x, c) = std::max(response, 0.0);
        }
      }
    }
    const double norm = 1.0 / static_cast<double>((2 * pool + 1) * (2 * pool + 1));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        auto dst = out.data.row(base + static_cast<Eigen::Index>(y) * w + x);
        for (int dy = -pool; dy <= pool; ++dy) {
          const int sy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -pool; dx <= pool; ++dx) {
            const int sx = std::clamp(x + dx, 0, w - 1);
            dst += rectified.row(static_cast<Eigen::Index>(sy) * w + sx);
          }
        }
        dst *= norm;
      }
    }
    base += static_cast<Eigen::Index>(h) * w;
  }
  return out;
}

NmfResult nmf_factorize(const Eigen::MatrixXd& V, int k, const NmfOptions& options) {
  const Eigen::Index rows = V.rows();
  const Eigen::Index cols = V.cols();
  if (k < 1 || k > std::min(rows, cols)) {
    throw DomainError("nmf_factorize: K = " + std::to_string(k) + " outside [1, " +
                      std::to_string(std::min(rows, cols)) + "]");
  }
  if (!V.allFinite() || (V.array() < 0.0).any()) {
    throw DomainError("nmf_factorize: V must be finite and non-negative");
  }
  if (options.max_iters < 1) throw DomainError("nmf_factorize: max_iters must be >= 1");

  NmfResult out;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  // 1 - U[0, 1) lies in (0, 1].
  out.P = Eigen::MatrixXd::NullaryExpr(rows, k, [&] { return 1.0 - uniform(rng); });
  out.Q = Eigen::MatrixXd::NullaryExpr(k, cols, [&] { return 1.0 - uniform(rng); });

  double previous = (V - out.P * out.Q).norm();
  for (int iter = 0; iter < options.max_iters; ++iter) {
    const Eigen::MatrixXd p_num = V * out.Q.transpose();
    const Eigen::MatrixXd p_den = out.P * (out.Q * out.Q.transpose());
    out.P.array() *= p_num.array() / (p_den.array() + kNmfDenominatorEpsilon);

    const Eigen::MatrixXd q_num = out.P.transpose() * V;
    const Eigen::MatrixXd q_den = (out.P.transpose() * out.P) * out.Q;
    out.Q.array() *= q_num.array() / (q_den.array() + kNmfDenominatorEpsilon);

    const double error = (V - out.P * out.Q).norm();
    out.error_trace.push_back(error);
    out.iterations_run = iter + 1;
    if (error == 0.0 || std::abs(previous - error) < options.tol * previous) break;
    previous = error;
  }
  return out;
}

double orthogonality_defect(const Eigen::MatrixXd& Q) {
  return (Q * Q.transpose() - Eigen::MatrixXd::Identity(Q.rows(), Q.rows())).norm();
}

std::vector<SegmentationMap> build_segmentations(const Eigen::MatrixXd& P, int views,
                                                 int height, int width, double temperature) {
  if (views < 1 || height < 1 || width < 1) {
    throw ShapeError("build_segmentations: views, height and width must be positive");
  }
  if (P.rows() != static_cast<Eigen::Index>(views) * height * width) {
    throw ShapeError("build_segmentations: P has " + std::to_string(P.rows()) +
                     " rows, expected " + std::to_string(views * height * width));
  }
  if (!(temperature > 0.0)) throw DomainError("build_segmentations: temperature must be > 0");
  const int classes = static_cast<int>(P.cols());
  std::vector<SegmentationMap> out;
  out.reserve(static_cast<std::size_t>(views));
  Eigen::Index row = 0;
  for (int v = 0; v < views; ++v) {
    SegmentationMap seg(height, width, classes);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x, ++row) {
        const double peak = P.row(row).maxCoeff();
        double total = 0.0;
        for (int c = 0; c < classes; ++c) {
          seg(y, x, c) = std::exp((P(row, c) - peak) / temperature);
          total += seg(y, x, c);
        }
        for (int c = 0; c < classes; ++c) seg(y, x, c) /= total;
      }
    }
    out.push_back(std::move(seg));
  }
  return out;
}

int argmax_class(const SegmentationMap& seg, int y, int x) {
  int best = 0;
  for (int c = 1; c < seg.channels(); ++c) {
    if (seg(y, x, c) > seg(y, x, best)) best = c;
  }
  return best;
}

SegmentationMap one_hot(const SegmentationMap& seg) {
  SegmentationMap out(seg.height(), seg.width(), seg.channels());
  for (int y = 0; y < seg.height(); ++y) {
    for (int x = 0; x < seg.width(); ++x) out(y, x, argmax_class(seg, y, x)) = 1.0;
  }
  return out;
}

Grid argmax_labels(const SegmentationMap& seg) {
  Grid out(seg.height(), seg.width(), 1);
  for (int y = 0; y < seg.height(); ++y) {
    for (int x = 0; x < seg.width(); ++x) out(y, x) = argmax_class(seg, y, x);
  }
  return out;
}

}  // namespace occdepth

#pragma once

#include <stdexcept>
#include <string>

namespace occdepth {

/// Input outside an operation's mathematical domain (non-positive depth,
/// negative NMF entry, out-of-range cluster count, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operand shapes disagree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A masked mean or metric was asked to average over zero pixels.
class EmptySupportError : public DomainError {
 public:
  explicit EmptySupportError(const std::string& what)
      : DomainError("empty support: " + what) {}
};

/// A rendered ray failed to hit the scene surface in front of the camera.
class SceneCoverageError : public DomainError {
 public:
  explicit SceneCoverageError(const std::string& what)
      : DomainError("scene not covering frustum: " + what) {}
};

/// Training produced a non-finite loss.
class DivergenceError : public DomainError {
 public:
  using DomainError::DomainError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace occdepth

#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace ckg {

/// Largest ambient dimension handled by the small fixed-capacity vectors
/// (base dimension n <= 2, ambient n + 1 <= 3).
inline constexpr int kMaxDim = 3;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A point or parameter lies outside the domain of an evaluator
/// (t outside the flow interval, inverse outside the range of r, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller supplied an invalid parameter (B <= diam, tau outside [0,1], ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mesh input is malformed (non-conforming, misoriented, no boundary).
class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ckg

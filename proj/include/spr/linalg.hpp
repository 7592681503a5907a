#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace spr {

using Cx = std::complex<double>;
using CxVector = Eigen::VectorXcd;
using CxMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

/// Value reported for 20·log10(0) and similar exact-zero cases.
inline constexpr double kMinusInfDb = -300.0;

/// Raised when a Hermitian system cannot be factorized or its condition
/// estimate exceeds what double precision can resolve.
class IllConditionedError : public std::runtime_error {
 public:
  IllConditionedError(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}

  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

inline double to_db_amplitude(double magnitude) {
  if (!(magnitude > 0.0)) return kMinusInfDb;
  return std::max(20.0 * std::log10(magnitude), kMinusInfDb);
}

inline double to_db_power(double power) {
  if (!(power > 0.0)) return kMinusInfDb;
  return std::max(10.0 * std::log10(power), kMinusInfDb);
}

}  // namespace spr

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>

namespace setti {

// Batches are row-per-sample matrices; a single sample is a row vector.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using IntVector = Eigen::VectorXi;

/// Elementwise sign with sign(0) = 0, so a zero gradient leaves a
/// feature untouched.
template <typename Derived>
auto sign(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  return v.unaryExpr([](Scalar x) -> Scalar {
    return x > Scalar(0) ? Scalar(1) : (x < Scalar(0) ? Scalar(-1) : Scalar(0));
  });
}

template <typename Derived>
auto clip(const Eigen::MatrixBase<Derived>& v, double lo, double hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

inline constexpr double kProbFloor = 1e-12;

}  // namespace setti

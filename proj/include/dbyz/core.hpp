#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbyz {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Parameters, gradients and momenta all live in this type.
using ParamVector = Vector<double>;

/// Index of a client in [0, n).
using ClientId = int;

/// Raised when an aggregation cannot produce a meaningful output.
class AggregationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

template <typename Derived>
typename Derived::Scalar l2_norm_sq(const Eigen::MatrixBase<Derived>& v) {
  if (!v.allFinite()) throw std::domain_error("non-finite input");
  return v.squaredNorm();
}

template <typename Scalar>
void check_same_dim(std::span<const Vector<Scalar>> vs) {
  for (const auto& v : vs) {
    if (v.size() != vs.front().size()) throw std::invalid_argument("dimension mismatch");
  }
}

/// Coordinate-wise arithmetic mean. Summation runs in list order, then divides once.
template <typename Scalar>
Vector<Scalar> mean(std::span<const Vector<Scalar>> vs) {
  if (vs.empty()) throw AggregationError("empty aggregation input");
  Vector<Scalar> acc = vs.front();
  for (std::size_t i = 1; i < vs.size(); ++i) {
    if (vs[i].size() != acc.size()) throw std::invalid_argument("dimension mismatch");
    acc += vs[i];
  }
  return acc / static_cast<Scalar>(vs.size());
}

inline ParamVector mean(const std::vector<ParamVector>& vs) {
  return mean<double>(std::span<const ParamVector>(vs));
}

/// Bitwise equality, used for cache-freeze and indistinguishability checks.
inline bool bitwise_equal(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace dbyz

#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "rqhj/errors.hpp"

namespace rqhj {

/// Cubic spline with not-a-knot end conditions.
///
/// The interpolant is C2 everywhere and reproduces any cubic polynomial
/// exactly, which lets tabulated potentials stand in for polynomial ones.
template <typename Scalar>
class CubicSpline {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Sample {
    Scalar value;
    Scalar d1;
    Scalar d2;
  };

  CubicSpline() = default;

  CubicSpline(std::vector<Scalar> knots, std::vector<Scalar> values)
      : x_(std::move(knots)), y_(std::move(values)) {
    const auto n = static_cast<Eigen::Index>(x_.size());
    if (n < 4 || y_.size() != x_.size()) {
      throw DomainError("tabulated potential needs at least 4 (x, V) samples of equal length");
    }
    for (Eigen::Index i = 1; i < n; ++i) {
      if (!(x_[i] > x_[i - 1])) {
        throw DomainError("tabulated potential abscissae must be strictly increasing");
      }
    }
    second_ = solve_second_derivatives();
  }

  Scalar front() const { return x_.front(); }
  Scalar back() const { return x_.back(); }
  const std::vector<Scalar>& knots() const { return x_; }
  const std::vector<Scalar>& values() const { return y_; }

  bool contains(Scalar x) const { return !x_.empty() && x >= x_.front() && x <= x_.back(); }

  Sample operator()(Scalar x) const {
    if (!contains(x)) {
      throw DomainError("x outside tabulated potential range");
    }
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    auto i = static_cast<std::size_t>(std::distance(x_.begin(), it));
    i = std::clamp<std::size_t>(i, 1, x_.size() - 1) - 1;

    const Scalar h = x_[i + 1] - x_[i];
    const Scalar left = x_[i + 1] - x;
    const Scalar right = x - x_[i];
    const Scalar m0 = second_[static_cast<Eigen::Index>(i)];
    const Scalar m1 = second_[static_cast<Eigen::Index>(i + 1)];
    const Scalar c0 = y_[i] / h - m0 * h / 6;
    const Scalar c1 = y_[i + 1] / h - m1 * h / 6;

    Sample s;
    s.value = m0 * left * left * left / (6 * h) + m1 * right * right * right / (6 * h) + c0 * left + c1 * right;
    s.d1 = -m0 * left * left / (2 * h) + m1 * right * right / (2 * h) - c0 + c1;
    s.d2 = (m0 * left + m1 * right) / h;
    return s;
  }

 private:
  // Unknowns are the knot second derivatives M_i. Interior rows enforce C1,
  // the two end rows enforce continuity of the third derivative at x_1 and x_{n-2}.
  Vector solve_second_derivatives() const {
    const auto n = static_cast<Eigen::Index>(x_.size());
    std::vector<Eigen::Triplet<Scalar>> entries;
    Vector rhs = Vector::Zero(n);
    auto h = [&](Eigen::Index i) { return x_[i + 1] - x_[i]; };

    entries.emplace_back(0, 0, h(1));
    entries.emplace_back(0, 1, -(h(0) + h(1)));
    entries.emplace_back(0, 2, h(0));
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
      entries.emplace_back(i, i - 1, h(i - 1));
      entries.emplace_back(i, i, 2 * (h(i - 1) + h(i)));
      entries.emplace_back(i, i + 1, h(i));
      rhs[i] = 6 * ((y_[i + 1] - y_[i]) / h(i) - (y_[i] - y_[i - 1]) / h(i - 1));
    }
    entries.emplace_back(n - 1, n - 3, h(n - 2));
    entries.emplace_back(n - 1, n - 2, -(h(n - 3) + h(n - 2)));
    entries.emplace_back(n - 1, n - 1, h(n - 3));

    Eigen::SparseMatrix<Scalar> system(n, n);
    system.setFromTriplets(entries.begin(), entries.end());
    Eigen::SparseLU<Eigen::SparseMatrix<Scalar>> lu;
    lu.compute(system);
    if (lu.info() != Eigen::Success) {
      throw DomainError("tabulated potential spline system is singular");
    }
    return lu.solve(rhs);
  }

  std::vector<Scalar> x_;
  std::vector<Scalar> y_;
  Vector second_;
};

}  // namespace rqhj

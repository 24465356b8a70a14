#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "pheno/error.hpp"
#include "pheno/types.hpp"

namespace pheno {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Smoothing strength: a fixed lambda, or chosen by generalized cross-validation.
struct SmoothingParameter {
  bool automatic = true;
  double lambda = 0.0;

  static SmoothingParameter Auto() { return {}; }
  static SmoothingParameter Fixed(double lambda) { return {false, lambda}; }
};

template <typename Scalar>
struct SmoothingResult {
  Vector<Scalar> fitted;
  Scalar lambda = 0;
  Scalar gcv = 0;  // criterion at `lambda`; NaN when not computed
};

namespace detail {

/// Reinsch band matrices for a natural cubic spline with knots at `x`:
/// Q is n x (n-2) second-difference, R is (n-2) x (n-2) tridiagonal, and the roughness
/// penalty of the interpolant through f is f' Q R^-1 Q' f.
template <typename Scalar>
void reinsch_matrices(const Vector<Scalar>& x, Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& Q,
                      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& R) {
  const Eigen::Index n = x.size();
  Q.setZero(n, n - 2);
  R.setZero(n - 2, n - 2);
  for (Eigen::Index j = 1; j + 1 < n; ++j) {
    const Scalar h0 = x(j) - x(j - 1), h1 = x(j + 1) - x(j);
    Q(j - 1, j - 1) = 1 / h0;
    Q(j, j - 1) = -1 / h0 - 1 / h1;
    Q(j + 1, j - 1) = 1 / h1;
    R(j - 1, j - 1) = (h0 + h1) / 3;
    if (j + 2 < n) {
      R(j - 1, j) = h1 / 6;
      R(j, j - 1) = h1 / 6;
    }
  }
}

/// Fitted values and GCV score for one lambda > 0, solving (R/lambda + Q'Q) g = Q'y.
template <typename Scalar>
SmoothingResult<Scalar> fit_lambda(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& Q,
                                   const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& R,
                                   const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& QtQ,
                                   const Vector<Scalar>& y, Scalar lambda, bool with_gcv) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Matrix A = R / lambda + QtQ;
  Eigen::LDLT<Matrix> ldlt(A);
  const Vector<Scalar> g = ldlt.solve(Q.transpose() * y);
  SmoothingResult<Scalar> out;
  out.fitted = y - Q * g;
  out.lambda = lambda;
  out.gcv = std::numeric_limits<Scalar>::quiet_NaN();
  if (with_gcv) {
    const auto n = static_cast<Scalar>(y.size());
    const Scalar trace_hat = n - ldlt.solve(QtQ).trace();
    const Scalar denom = n - trace_hat;
    out.gcv = n * (y - out.fitted).squaredNorm() / (denom * denom);
  }
  return out;
}

}  // namespace detail

/// Log-spaced GCV grid, in units of the mean knot spacing cubed.
inline constexpr double kGcvLogLambdaMin = -4.0;
inline constexpr double kGcvLogLambdaMax = 6.0;
inline constexpr int kGcvGridPoints = 101;

/// Natural cubic smoothing spline evaluated at the knots `days`.
///
/// Minimizes sum (v_i - f(d_i))^2 + lambda * integral f''^2. lambda = 0 interpolates;
/// lambda -> infinity tends to the least-squares line.
template <typename DerivedD, typename DerivedV>
SmoothingResult<typename DerivedV::Scalar> smooth_series(const Eigen::MatrixBase<DerivedD>& days,
                                                         const Eigen::MatrixBase<DerivedV>& values,
                                                         SmoothingParameter param = SmoothingParameter::Auto()) {
  using Scalar = typename DerivedV::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = values.size();
  if (days.size() != n) throw Error(ErrorKind::LengthMismatch, "days and values differ in length");
  if (n < 4) throw Error(ErrorKind::TooFewPoints, std::to_string(n) + " points, smoothing needs at least 4");
  const Vector<Scalar> x = days.template cast<Scalar>();
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(x(i) > x(i - 1))) {
      throw Error(ErrorKind::NonIncreasingDays, "day " + std::to_string(static_cast<double>(x(i))) +
                                                    " does not exceed the previous day");
    }
  }
  if (!param.automatic && param.lambda < 0) throw Error(ErrorKind::ConfigInvalid, "negative smoothing lambda");
  const Vector<Scalar> y = values;

  if (!param.automatic && param.lambda == 0) {
    return {y, Scalar(0), std::numeric_limits<Scalar>::quiet_NaN()};
  }

  Matrix Q, R;
  detail::reinsch_matrices<Scalar>(x, Q, R);
  const Matrix QtQ = Q.transpose() * Q;

  if (!param.automatic) return detail::fit_lambda<Scalar>(Q, R, QtQ, y, Scalar(param.lambda), true);

  const Scalar h = (x(n - 1) - x(0)) / static_cast<Scalar>(n - 1);
  SmoothingResult<Scalar> best;
  bool have = false;
  for (int k = 0; k < kGcvGridPoints; ++k) {
    const double e = kGcvLogLambdaMin + (kGcvLogLambdaMax - kGcvLogLambdaMin) * k / (kGcvGridPoints - 1);
    const Scalar lambda = static_cast<Scalar>(std::pow(10.0, e)) * h * h * h;
    auto cand = detail::fit_lambda<Scalar>(Q, R, QtQ, y, lambda, true);
    if (std::isfinite(static_cast<double>(cand.gcv)) && (!have || cand.gcv < best.gcv)) {
      best = std::move(cand);
      have = true;
    }
  }
  if (!have) return detail::fit_lambda<Scalar>(Q, R, QtQ, y, h * h * h, false);
  return best;
}

/// L2 projection onto non-decreasing sequences (pool adjacent violators), unweighted.
template <typename Derived>
Vector<typename Derived::Scalar> isotonic_regression(const Eigen::MatrixBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = values.size();
  std::vector<Scalar> level;
  std::vector<Scalar> weight;
  std::vector<Eigen::Index> count;
  level.reserve(static_cast<std::size_t>(n));
  weight.reserve(static_cast<std::size_t>(n));
  count.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar sum = values(i), w = 1;
    Eigen::Index c = 1;
    while (!level.empty() && level.back() > sum / w) {
      sum += level.back() * weight.back();
      w += weight.back();
      c += count.back();
      level.pop_back();
      weight.pop_back();
      count.pop_back();
    }
    level.push_back(sum / w);
    weight.push_back(w);
    count.push_back(c);
  }
  Vector<Scalar> out(n);
  Eigen::Index pos = 0;
  for (std::size_t b = 0; b < level.size(); ++b) {
    out.segment(pos, count[b]).setConstant(level[b]);
    pos += count[b];
  }
  return out;
}

/// Closest non-decreasing sequence, then negative values clamped to zero.
template <typename Derived>
Vector<typename Derived::Scalar> enforce_monotone(const Eigen::MatrixBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(static_cast<double>(values(i)))) {
      throw Error(ErrorKind::InvalidValue, "non-finite value at index " + std::to_string(i));
    }
  }
  return isotonic_regression(values).cwiseMax(Scalar(0));
}

/// Daily leaf-area trajectory of one plant after post-processing.
struct GrowthCurve {
  PlantId plant;
  std::vector<double> days;
  std::vector<double> raw;
  std::vector<double> smoothed;
  std::vector<double> monotone;
  std::vector<double> expansion_rate;  // mm^2/day, one per interval
  double lambda = 0.0;
};

/// smoothing spline -> isotonic projection -> zero clamp -> first differences.
GrowthCurve build_growth_curve(const PlantId& plant, const std::vector<double>& days,
                               const std::vector<double>& raw,
                               SmoothingParameter param = SmoothingParameter::Auto());

}  // namespace pheno

#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

/// Solves A x = b by Gaussian elimination with partial pivoting in long double.
inline std::vector<long double> gauss_solve(std::vector<std::vector<long double>> a, std::vector<long double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const long double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<long double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    long double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

/// OLS with intercept via (X'X)^-1 X'y on the design [1 X]. Returns {intercept, beta...}.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const std::size_t n = static_cast<std::size_t>(X.rows()), p = static_cast<std::size_t>(X.cols()) + 1;
  auto design = [&](std::size_t i, std::size_t j) -> long double {
    return j == 0 ? 1.0L : static_cast<long double>(X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)));
  };
  std::vector<std::vector<long double>> xtx(p, std::vector<long double>(p, 0.0L));
  std::vector<long double> xty(p, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      xty[j] += design(i, j) * y(static_cast<Eigen::Index>(i));
      for (std::size_t k = 0; k < p; ++k) xtx[j][k] += design(i, j) * design(i, k);
    }
  }
  const auto sol = gauss_solve(xtx, xty);
  Eigen::VectorXd out(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) out(static_cast<Eigen::Index>(j)) = static_cast<double>(sol[j]);
  return out;
}

/// Smallest SSE of any non-decreasing sequence whose values lie on `grid` (sorted).
/// Dynamic program over (position, level); equal to exhaustive enumeration.
inline double monotone_grid_min_sse(const std::vector<double>& v, const std::vector<double>& grid) {
  const std::size_t L = grid.size();
  std::vector<double> best(L, 0.0), next(L);
  for (double x : v) {
    double run = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < L; ++l) {
      run = std::min(run, best[l]);  // best over levels <= l at the previous position
      next[l] = run + (x - grid[l]) * (x - grid[l]);
    }
    best.swap(next);
  }
  return *std::min_element(best.begin(), best.end());
}

/// Exhaustive enumeration of every non-decreasing grid sequence; for cross-checking the DP.
inline double monotone_grid_min_sse_enumerate(const std::vector<double>& v, const std::vector<double>& grid) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(v.size(), 0);
  while (true) {
    double sse = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) sse += (v[i] - grid[idx[i]]) * (v[i] - grid[idx[i]]);
    best = std::min(best, sse);
    // next non-decreasing index tuple
    std::size_t k = v.size();
    while (k > 0 && idx[k - 1] == grid.size() - 1) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t j = k; j < v.size(); ++j) idx[j] = idx[k - 1];
  }
  return best;
}

/// Argmin of sum (y - (-1 + 2 / (1 + exp(a f))))^2 over a on a uniform grid.
inline double threshold_grid_search(const Eigen::ArrayXd& ftsw, const Eigen::ArrayXd& y, double lo, double hi,
                                    double step) {
  const long steps = std::lround((hi - lo) / step);
  double best_a = lo, best = std::numeric_limits<double>::infinity();
  for (long k = 0; k <= steps; ++k) {
    const double a = lo + static_cast<double>(k) * step;
    const double sse = (y - (-1.0 + 2.0 / (1.0 + (a * ftsw).exp()))).square().sum();
    if (sse < best) {
      best = sse;
      best_a = a;
    }
  }
  return best_a;
}

/// Central finite-difference gradient of f at x.
template <typename F>
Eigen::VectorXd central_gradient(F&& f, Eigen::VectorXd x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double x0 = x(i);
    x(i) = x0 + h;
    const double fp = f(x);
    x(i) = x0 - h;
    const double fm = f(x);
    x(i) = x0;
    g(i) = (fp - fm) / (2 * h);
  }
  return g;
}

}  // namespace oracle

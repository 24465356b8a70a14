#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <vector>

namespace pheno {

template <typename Scalar>
struct OlsSolution {
  Scalar intercept = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coefficients;
  /// Columns with zero spread; their coefficient is 0 and the intercept absorbs them.
  std::vector<Eigen::Index> constant_columns;
  /// Set when the non-constant columns are linearly dependent: the pivot that failed.
  std::optional<Eigen::Index> dependent_column;
};

/// Least squares with intercept, y ~ b0 + X b.
///
/// Columns are centred before a column-pivoted Householder QR, so the intercept is
/// b0 = mean(y) - mean(X) b and residuals sum to zero. Constant columns are dropped
/// rather than reported as collinear with the intercept.
template <typename DerivedX, typename DerivedY>
OlsSolution<typename DerivedX::Scalar> ols_fit(const Eigen::MatrixBase<DerivedX>& X,
                                               const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  OlsSolution<Scalar> sol;
  sol.coefficients = Vector::Zero(p);

  const Vector x_mean = X.colwise().mean().transpose();
  const Scalar y_mean = y.mean();

  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < p; ++j) {
    const Scalar spread = (X.col(j).array() - x_mean(j)).abs().maxCoeff();
    const Scalar scale = std::max<Scalar>(X.col(j).array().abs().maxCoeff(), Scalar(1));
    if (spread <= scale * Eigen::NumTraits<Scalar>::epsilon() * Scalar(16)) {
      sol.constant_columns.push_back(j);
    } else {
      active.push_back(j);
    }
  }

  if (!active.empty()) {
    const Eigen::Index k = static_cast<Eigen::Index>(active.size());
    Matrix Xc(n, k);
    Vector norms(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      Xc.col(a) = X.col(active[a]).array() - x_mean(active[a]);
      norms(a) = Xc.col(a).norm();
      Xc.col(a) /= norms(a);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(Xc);
    qr.setThreshold(Scalar(1e-10));
    if (qr.rank() < k) {
      sol.dependent_column = active[qr.colsPermutation().indices()(qr.rank())];
      return sol;
    }
    const Vector yc = (y.array() - y_mean).matrix();
    const Vector beta = qr.solve(yc);
    for (Eigen::Index a = 0; a < k; ++a) sol.coefficients(active[a]) = beta(a) / norms(a);
  }

  sol.intercept = y_mean - x_mean.dot(sol.coefficients);
  return sol;
}

}  // namespace pheno

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pheno/area_model.hpp"
#include "pheno/error.hpp"
#include "pheno/types.hpp"

namespace pheno {

/// Agreement between observed and predicted values.
struct MetricSet {
  std::size_t n = 0;
  double rmse = 0.0;
  double rmse_rel = 0.0;    // rmse / mean(observed)
  double bias = 0.0;        // mean(predicted - observed)
  double efficiency = 0.0;  // Nash-Sutcliffe: 1 - SSE / SS_tot
};

template <typename DerivedO, typename DerivedP>
MetricSet metrics(const Eigen::MatrixBase<DerivedO>& observed, const Eigen::MatrixBase<DerivedP>& predicted) {
  const Eigen::Index n = observed.size();
  if (predicted.size() != n) {
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(n) + " observed vs " + std::to_string(predicted.size()) + " predicted");
  }
  if (n < 2) throw Error(ErrorKind::TooFewObservations, "metrics need at least 2 values");
  const Eigen::VectorXd o = observed.template cast<double>();
  const Eigen::VectorXd p = predicted.template cast<double>();
  const double mean_o = o.mean();
  const double ss_tot = (o.array() - mean_o).square().sum();
  if (!(ss_tot > 0)) throw Error(ErrorKind::DegenerateObserved, "observed values have zero variance");
  const Eigen::VectorXd err = p - o;
  const double sse = err.squaredNorm();

  MetricSet m;
  m.n = static_cast<std::size_t>(n);
  m.rmse = std::sqrt(sse / static_cast<double>(n));
  m.rmse_rel = m.rmse / mean_o;
  m.bias = err.mean();
  m.efficiency = 1.0 - sse / ss_tot;
  return m;
}

inline MetricSet metrics(const std::vector<double>& observed, const std::vector<double>& predicted) {
  return metrics(Eigen::Map<const Eigen::VectorXd>(observed.data(), static_cast<Eigen::Index>(observed.size())),
                 Eigen::Map<const Eigen::VectorXd>(predicted.data(), static_cast<Eigen::Index>(predicted.size())));
}

/// Sample Pearson correlation. Throws DegenerateInput for n < 3 or zero variance.
template <typename DerivedX, typename DerivedY>
double pearson_r(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::LengthMismatch, "pearson_r inputs differ in length");
  if (x.size() < 3) throw Error(ErrorKind::DegenerateInput, "pearson_r needs at least 3 points");
  const Eigen::ArrayXd xc = x.template cast<double>().array() - x.template cast<double>().mean();
  const Eigen::ArrayXd yc = y.template cast<double>().array() - y.template cast<double>().mean();
  const double sxx = xc.square().sum(), syy = yc.square().sum();
  if (!(sxx > 0) || !(syy > 0)) throw Error(ErrorKind::DegenerateInput, "zero variance");
  const double r = (xc * yc).sum() / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson_r(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                   Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())));
}

struct NamedMetrics {
  std::string name;
  MetricSet metrics;
};

/// Predictions aligned with a pair list; nullopt where a method gave none.
using PredictionColumn = std::vector<std::optional<double>>;

/// One row per method (sorted by name), each scored on the pairs it predicted.
std::vector<NamedMetrics> metrics_by_method(std::span<const ObservationPair> pairs,
                                            const std::map<std::string, PredictionColumn>& predictions);

struct CvScheme {
  enum class Kind { None, LeaveOnePlantOut, PlantKFold };
  Kind kind = Kind::LeaveOnePlantOut;
  int folds = 5;

  static CvScheme none() { return {Kind::None, 1}; }
  static CvScheme leave_one_plant_out() { return {Kind::LeaveOnePlantOut, 0}; }
  static CvScheme plant_kfold(int k) { return {Kind::PlantKFold, k}; }
};

/// none | lopo | kfold[:k]
CvScheme parse_cv(std::string_view text);
std::string to_string(const CvScheme& cv);

/// Fits on the training pairs and predicts the test pairs.
using FitPredict = std::function<PredictionColumn(std::span<const ObservationPair> train,
                                                  std::span<const ObservationPair> test)>;

/// Out-of-fold predictions with folds formed by whole plants. Folds are processed in
/// sorted plant order; with CvScheme::None the model is trained and scored on all pairs.
PredictionColumn cross_validate(std::span<const ObservationPair> pairs, const CvScheme& cv,
                                const FitPredict& fit_predict);

/// Out-of-fold predictions of the linear model fitted at `scope`.
PredictionColumn scope_predictions(std::span<const ObservationPair> pairs, ModelScope scope, const CvScheme& cv,
                                   const std::vector<std::string>& predictors = default_predictors());

/// Table rows `area_<scope>` for each requested scope, from pooled out-of-fold predictions.
std::vector<NamedMetrics> metrics_by_scope(std::span<const ObservationPair> pairs,
                                           const std::vector<ModelScope>& scopes, const CvScheme& cv,
                                           const std::vector<std::string>& predictors = default_predictors());

/// `method,n,rmse,rmse_rel,bias,efficiency` with one row per entry.
void write_metrics_table(std::ostream& out, const std::vector<NamedMetrics>& rows);

}  // namespace pheno

#include "pheno/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "pheno/csv.hpp"

namespace pheno {

std::vector<NamedMetrics> metrics_by_method(std::span<const ObservationPair> pairs,
                                            const std::map<std::string, PredictionColumn>& predictions) {
  std::vector<NamedMetrics> rows;
  for (const auto& [name, column] : predictions) {
    if (column.size() != pairs.size()) {
      throw Error(ErrorKind::LengthMismatch, "method '" + name + "' has " + std::to_string(column.size()) +
                                                 " predictions for " + std::to_string(pairs.size()) + " pairs");
    }
    std::vector<double> obs, pred;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!column[i]) continue;
      obs.push_back(pairs[i].observed_area);
      pred.push_back(*column[i]);
    }
    try {
      rows.push_back({name, metrics(obs, pred)});
    } catch (const Error& e) {
      throw Error(e.kind(), "method '" + name + "': " + e.message());
    }
  }
  return rows;
}

CvScheme parse_cv(std::string_view text) {
  if (text == "none") return CvScheme::none();
  if (text == "lopo") return CvScheme::leave_one_plant_out();
  if (text.rfind("kfold", 0) == 0) {
    int k = 5;
    if (text.size() > 5) {
      if (text[5] != ':') throw Error(ErrorKind::ConfigInvalid, "cv scheme '" + std::string(text) + "'");
      auto v = csv::parse_number(text.substr(6));
      if (!v || *v < 2 || *v != std::floor(*v)) {
        throw Error(ErrorKind::ConfigInvalid, "kfold needs an integer k >= 2");
      }
      k = static_cast<int>(*v);
    }
    return CvScheme::plant_kfold(k);
  }
  throw Error(ErrorKind::ConfigInvalid, "unknown cv scheme '" + std::string(text) + "' (none|lopo|kfold[:k])");
}

std::string to_string(const CvScheme& cv) {
  switch (cv.kind) {
    case CvScheme::Kind::None: return "none";
    case CvScheme::Kind::LeaveOnePlantOut: return "lopo";
    case CvScheme::Kind::PlantKFold: return "kfold:" + std::to_string(cv.folds);
  }
  return "none";
}

PredictionColumn cross_validate(std::span<const ObservationPair> pairs, const CvScheme& cv,
                                const FitPredict& fit_predict) {
  if (cv.kind == CvScheme::Kind::None) {
    auto out = fit_predict(pairs, pairs);
    if (out.size() != pairs.size()) throw Error(ErrorKind::LengthMismatch, "fit_predict returned wrong length");
    return out;
  }

  std::set<PlantId> plant_set;
  for (const auto& p : pairs) plant_set.insert(p.plant);
  const std::vector<PlantId> plants(plant_set.begin(), plant_set.end());
  const std::size_t n_folds = cv.kind == CvScheme::Kind::LeaveOnePlantOut
                                  ? plants.size()
                                  : std::min<std::size_t>(plants.size(), static_cast<std::size_t>(cv.folds));
  if (n_folds < 2) throw Error(ErrorKind::TooFewObservations, "cross-validation needs at least 2 plants");

  std::map<PlantId, std::size_t> fold_of;
  for (std::size_t i = 0; i < plants.size(); ++i) fold_of[plants[i]] = i % n_folds;

  PredictionColumn out(pairs.size());
  for (std::size_t fold = 0; fold < n_folds; ++fold) {
    std::vector<ObservationPair> train, test;
    std::vector<std::size_t> test_index;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (fold_of[pairs[i].plant] == fold) {
        test.push_back(pairs[i]);
        test_index.push_back(i);
      } else {
        train.push_back(pairs[i]);
      }
    }
    if (test.empty()) continue;
    PredictionColumn pred;
    try {
      pred = fit_predict(train, test);
    } catch (const Error& e) {
      throw Error(e.kind(), "fold " + std::to_string(fold + 1) + " of " + std::to_string(n_folds) + ": " + e.message());
    }
    if (pred.size() != test.size()) throw Error(ErrorKind::LengthMismatch, "fit_predict returned wrong length");
    for (std::size_t k = 0; k < test.size(); ++k) out[test_index[k]] = pred[k];
  }
  return out;
}

PredictionColumn scope_predictions(std::span<const ObservationPair> pairs, ModelScope scope, const CvScheme& cv,
                                   const std::vector<std::string>& predictors) {
  auto fp = [&](std::span<const ObservationPair> train, std::span<const ObservationPair> test) {
    const ScopedModelSet set = fit_scoped(train, scope, predictors);
    PredictionColumn pred;
    pred.reserve(test.size());
    for (const auto& p : test) {
      const auto& model = set.model_for(p.plant);
      bool complete = std::all_of(model.predictor_names.begin(), model.predictor_names.end(),
                                  [&](const std::string& name) { return p.features.features.get(name).has_value(); });
      pred.push_back(complete ? std::optional<double>(predict_linear(model, p.features.features)) : std::nullopt);
    }
    return pred;
  };
  return cross_validate(pairs, cv, fp);
}

std::vector<NamedMetrics> metrics_by_scope(std::span<const ObservationPair> pairs,
                                           const std::vector<ModelScope>& scopes, const CvScheme& cv,
                                           const std::vector<std::string>& predictors) {
  std::map<std::string, PredictionColumn> columns;
  for (ModelScope scope : scopes) {
    columns["area_" + std::string(to_string(scope))] = scope_predictions(pairs, scope, cv, predictors);
  }
  return metrics_by_method(pairs, columns);
}

void write_metrics_table(std::ostream& out, const std::vector<NamedMetrics>& rows) {
  csv::write_row(out, {"method", "n", "rmse", "rmse_rel", "bias", "efficiency"});
  for (const auto& r : rows) {
    csv::write_row(out, {r.name, std::to_string(r.metrics.n), csv::format_number(r.metrics.rmse),
                         csv::format_number(r.metrics.rmse_rel), csv::format_number(r.metrics.bias),
                         csv::format_number(r.metrics.efficiency)});
  }
}

}  // namespace pheno

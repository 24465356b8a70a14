#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pheno/area_model.hpp"
#include "pheno/dataset.hpp"
#include "pheno/evaluation.hpp"
#include "pheno/response_fit.hpp"
#include "pheno/smoothing.hpp"
#include "pheno/water_balance.hpp"

namespace pheno::pipeline {

/// One value per plant and day index.
struct PlantDayValue {
  PlantId plant;
  int day = 0;
  double value = 0.0;
};

/// Area prediction for one image; nullopt skips the image.
using RecordPredictor = std::function<std::optional<double>(const FeatureRecord&)>;

/// Median prediction of the images of each plant-day, sorted by plant then day.
std::vector<PlantDayValue> daily_predictions(std::span<const FeatureRecord> records, TimePoint start,
                                             const RecordPredictor& predict);

/// Manual areas as plant-day values (mean if a day has several).
std::vector<PlantDayValue> manual_values(std::span<const ManualAreaRecord> records, TimePoint start);

struct CurveSet {
  std::vector<GrowthCurve> curves;  // sorted by plant
  std::map<PlantId, std::string> failures;

  const GrowthCurve* find(const PlantId& plant) const;
  /// Monotone area of `plant` on day index `day`, if the curve has that day.
  std::optional<double> area_at(const PlantId& plant, int day) const;
};

CurveSet build_curves(std::span<const PlantDayValue> values, SmoothingParameter smoothing = {});

/// Normalized expansion rates of stressed plants against same-genotype controls on the
/// same interval, paired with the FTSW at the start of the interval.
std::vector<ResponsePoint> expansion_points(const CurveSet& curves, const WaterTable& water);

/// Normalized transpiration of stressed plants against same-genotype, same-day controls.
std::vector<ResponsePoint> transpiration_points(const WaterTable& water);

/// Keeps only the weight readings taken on days with a manual area measurement of the plant,
/// the sampling a manual campaign would have.
std::vector<WeightRecord> manual_day_weights(const Experiment& experiment);

struct MethodOptions {
  CvScheme cv = CvScheme::plant_kfold(5);
  std::vector<std::string> predictors = default_predictors();
  SmoothingParameter smoothing;
  bool with_mlp = true;
  MlpConfig mlp;
};

struct MethodEvaluation {
  std::vector<NamedMetrics> table;  // area_lm, area_nn, area_splines
  std::map<std::string, PredictionColumn> predictions;
};

/// Out-of-fold comparison of the raw linear model, the MLP and the smoothed linear curves.
MethodEvaluation evaluate_methods(const Experiment& experiment, std::span<const ObservationPair> pairs,
                                  const MethodOptions& options = {});

struct ReportOptions {
  double window_days = dataset::kDefaultWindowDays;
  MethodOptions methods;
  CvScheme scope_cv = CvScheme::leave_one_plant_out();
  WaterConfig water;
  ThresholdFitOptions fit;
  bool plots = true;
};

struct ReportResult {
  std::string experiment;
  std::size_t plants = 0;
  std::size_t pairs = 0;
  std::size_t dropped = 0;
  std::vector<dataset::Violation> violations;
  MethodEvaluation methods;
  std::vector<NamedMetrics> scopes;
  std::map<std::string, PredictionColumn> scope_predictions;
  std::vector<double> observed;  // aligned with the prediction columns
  CurveSet curves;               // in-sample global model, image method
  CurveSet manual_curves;
  FitAllResult image_fits;
  FitAllResult manual_fits;
  std::optional<ComparisonReport> comparison;
  std::string comparison_error;
  std::map<PlantId, std::string> water_failures;
};

/// How leaf areas are obtained: images through the global linear model, or manual measurements
/// (with the pot weights restricted to manual measurement days).
enum class MeasurementMethod { Image, Manual };
MeasurementMethod parse_method(std::string_view text);

struct MethodData {
  CurveSet curves;
  WaterTable water;
  std::vector<ResponsePoint> points;  // LE then TR
};

MethodData method_data(const Experiment& experiment, MeasurementMethod method, const ReportOptions& options = {});

/// The whole chain: alignment, method and scope metrics, growth curves, water balance,
/// threshold fits for both measurement methods and their comparison.
ReportResult run_report(const Experiment& experiment, const ReportOptions& options = {});

/// table1.csv, table2.csv, table3.csv, report.json and, with plots, fig3_*.svg, fig4.svg, fig5.svg.
void write_report(const ReportResult& result, const Experiment& experiment, const std::string& dir, bool plots);

std::string report_json(const ReportResult& result);

}  // namespace pheno::pipeline

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pheno/types.hpp"

namespace pheno {

/// How the end of transpirable water (the weight at FTSW = 0) is located.
enum class TtswRule {
  MinimumWeight,          // lowest weight observed in the dry-down window
  TranspirationFraction,  // first day stressed transpiration < fraction x control mean
};

TtswRule parse_ttsw_rule(std::string_view text);
std::string_view to_string(TtswRule rule) noexcept;

struct WaterConfig {
  TtswRule rule = TtswRule::MinimumWeight;
  double fraction = 0.1;
  /// Constant pot evaporation subtracted from every daily rate, g/day.
  double evaporation = 0.0;
  /// Inclusive day-index range of the dry-down; unset means the whole series.
  std::optional<int> window_first;
  std::optional<int> window_last;
};

/// Per-interval transpiration (g/day) between consecutive records:
/// T_i = max(0, (w_i + irrigation_{i+1} - w_{i+1}) / dt - evaporation).
/// Throws TooFewRecords or NonMonotoneTime.
std::vector<double> transpiration_series(std::span<const WeightRecord> weights, double evaporation = 0.0);

/// Last reading of each calendar day, with irrigation summed over the readings it replaces.
std::vector<WeightRecord> daily_weights(std::span<const WeightRecord> weights);

struct WaterStatus {
  PlantId plant;
  int day_index = 0;
  double day = 0.0;     // days since experiment start
  double weight = 0.0;  // g
  /// Over the interval to the next status; absent on the last day.
  std::optional<double> transpiration;
  double atsw = 0.0;
  double ftsw = 1.0;
};

struct WaterSeries {
  PlantId plant;
  double ttsw = 0.0;
  double end_weight = 0.0;
  std::vector<WaterStatus> statuses;
};

/// FTSW trajectory of a dry-down:
/// ttsw = w_start - W_end, atsw_i = max(0, w_i - W_end), ftsw_i = atsw_i / ttsw in [0, 1].
/// `control_transpiration` (day index -> mean control rate) is needed by the fraction rule.
/// Throws ZeroTtsw when the pot never lost water.
WaterSeries compute_water_series(std::span<const WeightRecord> weights, TimePoint experiment_start,
                                 const WaterConfig& config = {},
                                 const std::map<int, double>* control_transpiration = nullptr);

/// Daily statuses of a well-watered plant: transpiration from weights, ftsw fixed at 1.
WaterSeries control_water_series(std::span<const WeightRecord> weights, TimePoint experiment_start,
                                 const WaterConfig& config = {});

/// stressed / mean(control). Throws DegenerateControl when there is no positive control mean.
double normalized_daily_rate(double stressed_value, std::span<const double> control_values);

/// Water series for every plant with weights; controls get ftsw = 1. Stressed plants that
/// fail (e.g. ZeroTtsw) are listed in `failures` instead of aborting the run.
struct WaterTable {
  std::vector<WaterSeries> series;  // sorted by plant
  std::map<PlantId, std::string> failures;
};

WaterTable compute_water_table(const Experiment& experiment, const WaterConfig& config = {});

/// Mean control transpiration per (genotype, day index).
std::map<std::pair<std::string, int>, double> control_transpiration_means(const WaterTable& table);

}  // namespace pheno

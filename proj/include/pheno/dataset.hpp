#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pheno/csv.hpp"
#include "pheno/types.hpp"

namespace pheno::dataset {

/// Default manual/image alignment window in days.
inline constexpr double kDefaultWindowDays = 0.5;
/// Hour assigned to manual measurements recorded as a bare date.
inline constexpr int kManualDateHour = 12;

/// Parses `experiment,pot,genotype,treatment,time,<features...>`. Every column other than
/// the five identity columns is kept as a feature; the four linear-model predictors are
/// mandatory columns. Empty or `NA` cells are stored as absent.
std::vector<FeatureRecord> parse_features(const csv::Table& table);
std::vector<FeatureRecord> parse_features(std::istream& in);

/// Parses `experiment,pot,genotype,treatment,date,total_area_mm2`.
std::vector<ManualAreaRecord> parse_manual(const csv::Table& table);
std::vector<ManualAreaRecord> parse_manual(std::istream& in);

/// Parses `experiment,pot,time,weight_g,irrigation_g`. Genotype and treatment are resolved
/// from `plants` (throws UnknownPlant for pots absent from it).
std::vector<WeightRecord> parse_weights(const csv::Table& table, const std::vector<PlantId>& plants);
std::vector<WeightRecord> parse_weights(std::istream& in, const std::vector<PlantId>& plants);

void write_features(std::ostream& out, const std::vector<FeatureRecord>& records);
void write_manual(std::ostream& out, const std::vector<ManualAreaRecord>& records);
void write_weights(std::ostream& out, const std::vector<WeightRecord>& records);

/// Sorted unique plant ids appearing in feature and manual records.
std::vector<PlantId> collect_plants(const std::vector<FeatureRecord>& features,
                                    const std::vector<ManualAreaRecord>& manual);

/// Assembles an experiment; id and date range come from the records.
Experiment make_experiment(std::vector<FeatureRecord> features, std::vector<ManualAreaRecord> manual,
                           std::vector<WeightRecord> weights);

/// Loads `features.csv`, `manual_areas.csv` and (if present) `weights.csv` from a directory.
Experiment load_experiment(const std::string& dir);

struct AlignmentResult {
  std::vector<ObservationPair> pairs;       // sorted by (plant, manual time)
  std::vector<ManualAreaRecord> dropped;    // manual records with no image in the window
};

/// Pairs each manual record with the nearest-in-time image of the same plant within
/// `window_days`. Ties prefer the earlier image. Result does not depend on input order.
AlignmentResult align_observations(const std::vector<FeatureRecord>& features,
                                   const std::vector<ManualAreaRecord>& manual,
                                   double window_days = kDefaultWindowDays);

struct Violation {
  std::string kind;     // inconsistent_plant, duplicate_manual, unordered_weights, ...
  std::string subject;  // pot or plant key the violation names
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  /// (genotype, treatment) -> number of distinct pots.
  std::map<std::pair<std::string, Treatment>, int> replication;
  int plants = 0;

  bool ok() const { return violations.empty(); }
  std::string to_text() const;
  std::string to_json() const;
};

ValidationReport validate_experiment(const Experiment& experiment);

}  // namespace pheno::dataset

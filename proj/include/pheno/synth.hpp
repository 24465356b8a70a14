#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pheno/types.hpp"

namespace pheno {

/// Parameters of a simulated dry-down campaign. Defaults are calibrated so the global
/// linear model lands near 10% relative error and stressed pots dry out completely.
struct SynthConfig {
  std::string experiment = "SYN01";
  std::string start_date = "2018-09-14";
  int n_genotypes = 8;
  int control_replicates = 4;
  int stressed_replicates = 8;
  int n_days = 14;
  int manual_every = 2;  // days between manual area measurements

  /// Per-genotype threshold parameters; empty vectors are drawn uniformly from the ranges.
  std::vector<double> le;
  std::vector<double> tr;
  std::pair<double, double> le_range{-4.55, -2.65};
  std::pair<double, double> tr_range{-8.83, -4.99};

  // growth (mm^2, days)
  double initial_area = 8.0e4;
  double initial_area_cv = 0.05;
  std::pair<double, double> asymptote_range{3.8e5, 5.2e5};
  std::pair<double, double> growth_rate_range{0.18, 0.26};
  double plant_vigour_cv = 0.03;

  // water (g)
  double pot_empty_weight = 4200.0;
  double ttsw_mean = 1500.0;
  double ttsw_cv = 0.05;
  double transpiration_per_area = 1.3e-3;  // g / day / mm^2 of unstressed leaf area
  double weather_cv = 0.10;
  double transpiration_noise_cv = 0.05;

  // light-curtain features
  double feature_noise_cv = 0.10;
  double genotype_offset = 0.10;  // half-width of per-genotype slope perturbation
  double treatment_offset = 0.0;  // relative slope change for stressed plants
  double manual_noise_cv = 0.03;
  int shape_features = 40;
  int noise_features = 26;
  double distractor_noise_cv = 0.08;
  double missing_fraction = 0.0;  // share of absent cells in distractor columns

  std::uint64_t seed = 42;

  /// Throws Error(ConfigInvalid).
  void validate() const;
};

struct GenotypeTruth {
  std::string name;
  double le = 0.0;
  double tr = 0.0;
  double asymptote = 0.0;
  double growth_rate = 0.0;
  double slope_offset = 0.0;  // relative change of the area column of the feature map
  /// area = intercept + coefficients . (area_sens, hull_area, bounding_rectangle, height)
  double intercept = 0.0;
  Eigen::Vector4d coefficients = Eigen::Vector4d::Zero();
};

struct PlantTruth {
  PlantId plant;
  double ttsw = 0.0;
  double end_weight = 0.0;           // weight with no transpirable water left
  std::vector<double> area;          // at the start of each day, mm^2
  std::vector<double> ftsw;          // at the start of each day
  std::vector<double> expansion;     // over each day, mm^2
  std::vector<double> transpiration; // over each day, g
};

struct GroundTruth {
  std::vector<GenotypeTruth> genotypes;
  std::vector<PlantTruth> plants;  // ordered by pot
  /// Feature map shared by all genotypes before offsets.
  double intercept = 0.0;
  Eigen::Vector4d coefficients = Eigen::Vector4d::Zero();

  const GenotypeTruth& genotype(const std::string& name) const;
  const PlantTruth& plant(int pot) const;
  std::string to_json() const;
};

struct SynthResult {
  Experiment experiment;
  GroundTruth truth;
};

/// Simulates one campaign. Every random draw comes from a single generator seeded with
/// `config.seed`, consumed in a fixed order: genotypes, plants, weather, then daily
/// plant draws in pot order.
SynthResult generate_experiment(const SynthConfig& config);

/// Writes features.csv, manual_areas.csv, weights.csv and ground_truth.json into `dir`.
void write_synthetic(const SynthResult& result, const std::string& dir);

}  // namespace pheno

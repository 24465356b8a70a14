#pragma once

#include <chrono>
#include <compare>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pheno {

enum class Treatment { Control, Stressed };

std::string_view to_string(Treatment t) noexcept;
/// Case-insensitive; throws Error(UnknownTreatment).
Treatment parse_treatment(std::string_view text);

/// Second-resolution wall-clock instant; the analysis works in fractional days.
using TimePoint = std::chrono::sys_seconds;

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM[:SS]` and the space-separated variant.
/// `date_only_hour` is the hour assigned when no time of day is given.
std::optional<TimePoint> parse_iso8601(std::string_view text, int date_only_hour = 0);
std::string format_iso8601(TimePoint t);
std::string format_date(TimePoint t);
TimePoint midnight(TimePoint t);
double days_between(TimePoint from, TimePoint to);

struct PlantId {
  std::string experiment;
  int pot = 0;
  std::string genotype;
  Treatment treatment = Treatment::Control;

  auto operator<=>(const PlantId&) const = default;
  bool operator==(const PlantId&) const = default;

  /// `experiment:pot`, the identity used for grouping and file names.
  std::string key() const;
};

/// Column names shared by all records parsed from one file.
using FeatureNames = std::shared_ptr<const std::vector<std::string>>;

inline constexpr std::string_view kAreaSens = "area_sens";
inline constexpr std::string_view kHullArea = "hull_area";
inline constexpr std::string_view kBoundingRectangle = "bounding_rectangle";
inline constexpr std::string_view kHeight = "height";

/// The four light-curtain predictors used by the linear area model.
std::vector<std::string> default_predictors();

/// Named morphological measurements of one image. Absent values are stored as NaN.
class FeatureSet {
 public:
  FeatureSet() = default;
  FeatureSet(FeatureNames names, std::vector<double> values);

  const std::vector<std::string>& names() const;
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::optional<double> get(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;

  /// Equal names and equal values, with absent matching absent.
  friend bool operator==(const FeatureSet& a, const FeatureSet& b);

 private:
  FeatureNames names_;
  std::vector<double> values_;
};

struct FeatureRecord {
  PlantId plant;
  TimePoint time;
  FeatureSet features;

  friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

struct ManualAreaRecord {
  PlantId plant;
  TimePoint time;
  double total_area = 0.0;  // mm^2

  friend bool operator==(const ManualAreaRecord&, const ManualAreaRecord&) = default;
};

struct WeightRecord {
  PlantId plant;
  TimePoint time;
  double weight = 0.0;      // g
  double irrigation = 0.0;  // g added since the previous record

  friend bool operator==(const WeightRecord&, const WeightRecord&) = default;
};

struct ObservationPair {
  PlantId plant;
  TimePoint time;  // manual measurement time
  FeatureRecord features;
  double observed_area = 0.0;
};

struct Experiment {
  std::string id;
  TimePoint start;  // midnight of the first record date
  TimePoint end;
  std::vector<PlantId> plants;  // sorted, unique
  std::vector<FeatureRecord> features;
  std::vector<ManualAreaRecord> manual;
  std::vector<WeightRecord> weights;

  /// Integer day index of `t` relative to `start`.
  int day_index(TimePoint t) const;
  double day_offset(TimePoint t) const { return days_between(start, t); }
};

}  // namespace pheno

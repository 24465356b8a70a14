#include "pheno/types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "pheno/error.hpp"

namespace pheno {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::NonNumericValue: return "NonNumericValue";
    case ErrorKind::InvalidValue: return "InvalidValue";
    case ErrorKind::UnknownTreatment: return "UnknownTreatment";
    case ErrorKind::UnknownPlant: return "UnknownPlant";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::TooFewObservations: return "TooFewObservations";
    case ErrorKind::MissingPredictor: return "MissingPredictor";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::NonIncreasingDays: return "NonIncreasingDays";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DegenerateObserved: return "DegenerateObserved";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::TooFewRecords: return "TooFewRecords";
    case ErrorKind::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorKind::ZeroTtsw: return "ZeroTtsw";
    case ErrorKind::DegenerateControl: return "DegenerateControl";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::InsufficientSpan: return "InsufficientSpan";
    case ErrorKind::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Format: return "Format";
  }
  return "Error";
}

std::string_view to_string(Treatment t) noexcept {
  return t == Treatment::Control ? "Control" : "Stressed";
}

Treatment parse_treatment(std::string_view text) {
  std::string folded(text);
  std::transform(folded.begin(), folded.end(), folded.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (folded == "control") return Treatment::Control;
  if (folded == "stressed") return Treatment::Stressed;
  throw Error(ErrorKind::UnknownTreatment, "'" + std::string(text) + "'");
}

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return true;
}

}  // namespace

std::optional<TimePoint> parse_iso8601(std::string_view s, int date_only_hour) {
  using namespace std::chrono;
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  int y = 0, mo = 0, d = 0;
  if (s.size() < 10 || !read_int(s, 0, 4, y) || s[4] != '-' || !read_int(s, 5, 2, mo) ||
      s[7] != '-' || !read_int(s, 8, 2, d)) {
    return std::nullopt;
  }
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  int hh = date_only_hour, mm = 0, ss = 0;
  if (s.size() > 10) {
    if ((s[10] != 'T' && s[10] != ' ') || !read_int(s, 11, 2, hh) || s.size() < 16 || s[13] != ':' ||
        !read_int(s, 14, 2, mm)) {
      return std::nullopt;
    }
    std::size_t rest = 16;
    if (s.size() > 16) {
      if (s[16] != ':' || !read_int(s, 17, 2, ss)) return std::nullopt;
      rest = 19;
    }
    if (rest < s.size() && s.substr(rest) != "Z") return std::nullopt;
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  }
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_iso8601(TimePoint t) {
  using namespace std::chrono;
  auto dp = floor<days>(t);
  year_month_day ymd{dp};
  hh_mm_ss hms{t - dp};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string format_date(TimePoint t) { return format_iso8601(t).substr(0, 10); }

TimePoint midnight(TimePoint t) {
  return std::chrono::floor<std::chrono::days>(t);
}

double days_between(TimePoint from, TimePoint to) {
  return static_cast<double>((to - from).count()) / 86400.0;
}

std::string PlantId::key() const { return experiment + ":" + std::to_string(pot); }

std::vector<std::string> default_predictors() {
  return {std::string(kAreaSens), std::string(kHullArea), std::string(kBoundingRectangle),
          std::string(kHeight)};
}

FeatureSet::FeatureSet(FeatureNames names, std::vector<double> values)
    : names_(std::move(names)), values_(std::move(values)) {
  if (!names_ || names_->size() != values_.size()) {
    throw Error(ErrorKind::LengthMismatch, "feature names and values differ in length");
  }
}

const std::vector<std::string>& FeatureSet::names() const {
  static const std::vector<std::string> empty;
  return names_ ? *names_ : empty;
}

std::optional<std::size_t> FeatureSet::index_of(std::string_view name) const {
  const auto& n = names();
  auto it = std::find(n.begin(), n.end(), name);
  if (it == n.end()) return std::nullopt;
  return static_cast<std::size_t>(it - n.begin());
}

std::optional<double> FeatureSet::get(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx || std::isnan(values_[*idx])) return std::nullopt;
  return values_[*idx];
}

bool operator==(const FeatureSet& a, const FeatureSet& b) {
  if (a.names() != b.names() || a.values_.size() != b.values_.size()) return false;
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    double x = a.values_[i], y = b.values_[i];
    if (std::isnan(x) != std::isnan(y)) return false;
    if (!std::isnan(x) && x != y) return false;
  }
  return true;
}

int Experiment::day_index(TimePoint t) const {
  return static_cast<int>(std::floor(day_offset(t)));
}

}  // namespace pheno

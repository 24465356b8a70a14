#include "pheno/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "pheno/error.hpp"

namespace pheno::dataset {

namespace {

constexpr std::string_view kIdentityColumns[] = {"experiment", "pot", "genotype", "treatment"};

std::string where(std::size_t row, std::string_view column) {
  return "row " + std::to_string(row + 1) + ", column " + std::string(column);
}

double number_cell(const csv::Table& t, std::size_t row, std::size_t col) {
  const std::string& cell = t.rows[row][col];
  auto v = csv::parse_number(cell);
  if (!v || !std::isfinite(*v)) {
    throw Error(ErrorKind::NonNumericValue, where(row, t.header[col]) + ": '" + cell + "'");
  }
  return *v;
}

int pot_cell(const csv::Table& t, std::size_t row, std::size_t col) {
  double v = number_cell(t, row, col);
  if (v != std::floor(v) || v < 1 || v > 1e6) {
    throw Error(ErrorKind::InvalidValue, where(row, t.header[col]) + ": pot must be a positive integer");
  }
  return static_cast<int>(v);
}

TimePoint time_cell(const csv::Table& t, std::size_t row, std::size_t col, int date_only_hour) {
  auto tp = parse_iso8601(t.rows[row][col], date_only_hour);
  if (!tp) {
    throw Error(ErrorKind::InvalidValue,
                where(row, t.header[col]) + ": expected ISO-8601 date, got '" + t.rows[row][col] + "'");
  }
  return *tp;
}

PlantId plant_cells(const csv::Table& t, std::size_t row, const std::size_t (&cols)[4]) {
  PlantId id;
  id.experiment = t.rows[row][cols[0]];
  id.pot = pot_cell(t, row, cols[1]);
  id.genotype = t.rows[row][cols[2]];
  try {
    id.treatment = parse_treatment(t.rows[row][cols[3]]);
  } catch (const Error& e) {
    throw Error(ErrorKind::UnknownTreatment, where(row, "treatment") + ": '" + t.rows[row][cols[3]] + "'");
  }
  return id;
}

void identity_columns(const csv::Table& t, std::size_t (&cols)[4]) {
  for (int i = 0; i < 4; ++i) cols[i] = t.require_column(kIdentityColumns[i]);
}

std::vector<std::string> identity_cells(const PlantId& p) {
  return {p.experiment, std::to_string(p.pot), p.genotype, std::string(to_string(p.treatment))};
}

}  // namespace

std::vector<FeatureRecord> parse_features(const csv::Table& t) {
  std::size_t id_cols[4];
  identity_columns(t, id_cols);
  const std::size_t time_col = t.require_column("time");
  for (const auto& name : default_predictors()) t.require_column(name);

  std::vector<std::size_t> feature_cols;
  auto names = std::make_shared<std::vector<std::string>>();
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    bool identity = c == time_col ||
                    std::find(std::begin(id_cols), std::end(id_cols), c) != std::end(id_cols);
    if (identity) continue;
    feature_cols.push_back(c);
    names->push_back(t.header[c]);
  }
  FeatureNames shared = names;
  const auto predictors = default_predictors();

  std::vector<FeatureRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    FeatureRecord rec;
    rec.plant = plant_cells(t, r, id_cols);
    rec.time = time_cell(t, r, time_col, 0);
    std::vector<double> values(feature_cols.size(), std::nan(""));
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const std::string& cell = t.rows[r][feature_cols[k]];
      if (csv::is_absent(cell)) continue;
      values[k] = number_cell(t, r, feature_cols[k]);
      bool named = std::find(predictors.begin(), predictors.end(), (*names)[k]) != predictors.end();
      if (named && values[k] < 0) {
        throw Error(ErrorKind::InvalidValue, where(r, (*names)[k]) + ": must be >= 0");
      }
    }
    rec.features = FeatureSet(shared, std::move(values));
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<FeatureRecord> parse_features(std::istream& in) { return parse_features(csv::read(in)); }

std::vector<ManualAreaRecord> parse_manual(const csv::Table& t) {
  std::size_t id_cols[4];
  identity_columns(t, id_cols);
  const std::size_t date_col = t.require_column("date");
  const std::size_t area_col = t.require_column("total_area_mm2");
  std::vector<ManualAreaRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ManualAreaRecord rec;
    rec.plant = plant_cells(t, r, id_cols);
    rec.time = time_cell(t, r, date_col, kManualDateHour);
    rec.total_area = number_cell(t, r, area_col);
    if (rec.total_area <= 0) throw Error(ErrorKind::InvalidValue, where(r, "total_area_mm2") + ": must be > 0");
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ManualAreaRecord> parse_manual(std::istream& in) { return parse_manual(csv::read(in)); }

std::vector<WeightRecord> parse_weights(const csv::Table& t, const std::vector<PlantId>& plants) {
  const std::size_t exp_col = t.require_column("experiment");
  const std::size_t pot_col = t.require_column("pot");
  const std::size_t time_col = t.require_column("time");
  const std::size_t weight_col = t.require_column("weight_g");
  const std::size_t irr_col = t.require_column("irrigation_g");

  std::map<std::pair<std::string, int>, const PlantId*> lookup;
  for (const auto& p : plants) lookup.emplace(std::make_pair(p.experiment, p.pot), &p);

  std::vector<WeightRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    WeightRecord rec;
    const std::string& exp = t.rows[r][exp_col];
    int pot = pot_cell(t, r, pot_col);
    auto it = lookup.find({exp, pot});
    if (it == lookup.end()) {
      throw Error(ErrorKind::UnknownPlant, "row " + std::to_string(r + 1) + ": no plant " + exp + ":" +
                                               std::to_string(pot) + " in features/manual data");
    }
    rec.plant = *it->second;
    rec.time = time_cell(t, r, time_col, 0);
    rec.weight = number_cell(t, r, weight_col);
    if (rec.weight <= 0) throw Error(ErrorKind::InvalidValue, where(r, "weight_g") + ": must be > 0");
    rec.irrigation = csv::is_absent(t.rows[r][irr_col]) ? 0.0 : number_cell(t, r, irr_col);
    if (rec.irrigation < 0) throw Error(ErrorKind::InvalidValue, where(r, "irrigation_g") + ": must be >= 0");
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<WeightRecord> parse_weights(std::istream& in, const std::vector<PlantId>& plants) {
  return parse_weights(csv::read(in), plants);
}

void write_features(std::ostream& out, const std::vector<FeatureRecord>& records) {
  std::vector<std::string> header{"experiment", "pot", "genotype", "treatment", "time"};
  const std::vector<std::string>* names = nullptr;
  if (!records.empty()) {
    names = &records.front().features.names();
    header.insert(header.end(), names->begin(), names->end());
  } else {
    auto p = default_predictors();
    header.insert(header.end(), p.begin(), p.end());
  }
  csv::write_row(out, header);
  for (const auto& rec : records) {
    if (rec.features.names() != *names) {
      throw Error(ErrorKind::Format, "records with different feature columns cannot share a file");
    }
    auto cells = identity_cells(rec.plant);
    cells.push_back(format_iso8601(rec.time));
    for (double v : rec.features.values()) cells.push_back(csv::format_number(v));
    csv::write_row(out, cells);
  }
}

void write_manual(std::ostream& out, const std::vector<ManualAreaRecord>& records) {
  csv::write_row(out, {"experiment", "pot", "genotype", "treatment", "date", "total_area_mm2"});
  for (const auto& rec : records) {
    auto cells = identity_cells(rec.plant);
    auto tod = rec.time - midnight(rec.time);
    cells.push_back(tod == std::chrono::hours{kManualDateHour} ? format_date(rec.time)
                                                               : format_iso8601(rec.time));
    cells.push_back(csv::format_number(rec.total_area));
    csv::write_row(out, cells);
  }
}

void write_weights(std::ostream& out, const std::vector<WeightRecord>& records) {
  csv::write_row(out, {"experiment", "pot", "time", "weight_g", "irrigation_g"});
  for (const auto& rec : records) {
    csv::write_row(out, {rec.plant.experiment, std::to_string(rec.plant.pot), format_iso8601(rec.time),
                         csv::format_number(rec.weight), csv::format_number(rec.irrigation)});
  }
}

std::vector<PlantId> collect_plants(const std::vector<FeatureRecord>& features,
                                    const std::vector<ManualAreaRecord>& manual) {
  std::set<PlantId> s;
  for (const auto& f : features) s.insert(f.plant);
  for (const auto& m : manual) s.insert(m.plant);
  return {s.begin(), s.end()};
}

Experiment make_experiment(std::vector<FeatureRecord> features, std::vector<ManualAreaRecord> manual,
                           std::vector<WeightRecord> weights) {
  Experiment e;
  e.plants = collect_plants(features, manual);
  for (const auto& w : weights) {
    if (!std::binary_search(e.plants.begin(), e.plants.end(), w.plant)) {
      e.plants.insert(std::upper_bound(e.plants.begin(), e.plants.end(), w.plant), w.plant);
    }
  }
  std::optional<TimePoint> lo, hi;
  auto extend = [&](TimePoint t) {
    if (!lo || t < *lo) lo = t;
    if (!hi || t > *hi) hi = t;
  };
  for (const auto& r : features) extend(r.time);
  for (const auto& r : manual) extend(r.time);
  for (const auto& r : weights) extend(r.time);
  e.start = lo ? midnight(*lo) : TimePoint{};
  e.end = hi ? *hi : e.start;

  std::set<std::string> ids;
  for (const auto& p : e.plants) ids.insert(p.experiment);
  for (const auto& id : ids) e.id += (e.id.empty() ? "" : "+") + id;

  e.features = std::move(features);
  e.manual = std::move(manual);
  e.weights = std::move(weights);
  return e;
}

Experiment load_experiment(const std::string& dir) {
  namespace fs = std::filesystem;
  auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
  auto load = [&](const char* name, auto&& parse) {
    const std::string p = path(name);
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + p);
    try {
      return parse(csv::read(in));
    } catch (const Error& e) {
      throw Error(e.kind(), p + ": " + e.message());
    }
  };
  auto features = load("features.csv", [](const csv::Table& t) { return parse_features(t); });
  auto manual = load("manual_areas.csv", [](const csv::Table& t) { return parse_manual(t); });
  std::vector<WeightRecord> weights;
  if (fs::exists(path("weights.csv"))) {
    const auto plants = collect_plants(features, manual);
    weights = load("weights.csv", [&](const csv::Table& t) { return parse_weights(t, plants); });
  }
  return make_experiment(std::move(features), std::move(manual), std::move(weights));
}

AlignmentResult align_observations(const std::vector<FeatureRecord>& features,
                                   const std::vector<ManualAreaRecord>& manual, double window_days) {
  std::map<PlantId, std::vector<const FeatureRecord*>> by_plant;
  for (const auto& f : features) by_plant[f.plant].push_back(&f);

  // Total order on candidates so ties never depend on input order.
  auto earlier = [](const FeatureRecord* a, const FeatureRecord* b) {
    if (a->time != b->time) return a->time < b->time;
    return std::lexicographical_compare(a->features.values().begin(), a->features.values().end(),
                                        b->features.values().begin(), b->features.values().end());
  };
  for (auto& [plant, recs] : by_plant) std::sort(recs.begin(), recs.end(), earlier);

  AlignmentResult result;
  for (const auto& m : manual) {
    const FeatureRecord* best = nullptr;
    double best_gap = 0.0;
    if (auto it = by_plant.find(m.plant); it != by_plant.end()) {
      for (const FeatureRecord* f : it->second) {
        double gap = std::abs(days_between(m.time, f->time));
        if (gap > window_days) continue;
        if (!best || gap < best_gap) {
          best = f;
          best_gap = gap;
        }
      }
    }
    if (best) {
      result.pairs.push_back({m.plant, m.time, *best, m.total_area});
    } else {
      result.dropped.push_back(m);
    }
  }
  auto key = [](const auto& x) { return std::tie(x.plant, x.time); };
  std::sort(result.pairs.begin(), result.pairs.end(), [&](const auto& a, const auto& b) {
    if (key(a) != key(b)) return key(a) < key(b);
    return a.observed_area < b.observed_area;
  });
  std::sort(result.dropped.begin(), result.dropped.end(), [&](const auto& a, const auto& b) {
    if (key(a) != key(b)) return key(a) < key(b);
    return a.total_area < b.total_area;
  });
  return result;
}

ValidationReport validate_experiment(const Experiment& e) {
  ValidationReport report;

  std::map<std::pair<std::string, int>, std::set<PlantId>> by_pot;
  for (const auto& p : e.plants) by_pot[{p.experiment, p.pot}].insert(p);
  for (const auto& [pot, ids] : by_pot) {
    if (ids.size() > 1) {
      std::ostringstream msg;
      msg << "pot " << pot.second << " claimed by";
      for (const auto& id : ids) msg << " (" << id.genotype << ", " << to_string(id.treatment) << ")";
      report.violations.push_back({"inconsistent_plant", std::to_string(pot.second), msg.str()});
    } else if (pot.second > 96) {
      report.violations.push_back(
          {"pot_out_of_range", std::to_string(pot.second), "pot numbers run from 1 to 96"});
    }
  }

  std::map<std::pair<PlantId, TimePoint>, int> manual_count;
  for (const auto& m : e.manual) manual_count[{m.plant, midnight(m.time)}]++;
  for (const auto& [k, n] : manual_count) {
    if (n > 1) {
      report.violations.push_back({"duplicate_manual", k.first.key(),
                                   std::to_string(n) + " manual areas on " + format_date(k.second)});
    }
  }

  std::map<PlantId, TimePoint> last_weight;
  std::set<PlantId> unordered;
  for (const auto& w : e.weights) {
    auto it = last_weight.find(w.plant);
    if (it != last_weight.end() && w.time <= it->second && !unordered.count(w.plant)) {
      unordered.insert(w.plant);
      report.violations.push_back({"unordered_weights", w.plant.key(),
                                   "weight at " + format_iso8601(w.time) + " does not follow " +
                                       format_iso8601(it->second)});
    }
    last_weight[w.plant] = w.time;
  }

  for (const auto& [pot, ids] : by_pot) {
    if (ids.size() != 1) continue;
    const PlantId& p = *ids.begin();
    report.replication[{p.genotype, p.treatment}]++;
    report.plants++;
  }
  return report;
}

std::string ValidationReport::to_text() const {
  std::ostringstream out;
  out << "plants: " << plants << "\n";
  out << "replication (genotype, treatment, pots):\n";
  for (const auto& [k, n] : replication) {
    out << "  " << k.first << "\t" << to_string(k.second) << "\t" << n << "\n";
  }
  out << "violations: " << violations.size() << "\n";
  for (const auto& v : violations) out << "  [" << v.kind << "] " << v.subject << ": " << v.message << "\n";
  return out.str();
}

std::string ValidationReport::to_json() const {
  nlohmann::ordered_json j;
  j["plants"] = plants;
  auto rep = nlohmann::ordered_json::array();
  for (const auto& [k, n] : replication) {
    rep.push_back({{"genotype", k.first}, {"treatment", std::string(to_string(k.second))}, {"pots", n}});
  }
  j["replication"] = rep;
  auto vs = nlohmann::ordered_json::array();
  for (const auto& v : violations) {
    vs.push_back({{"kind", v.kind}, {"subject", v.subject}, {"message", v.message}});
  }
  j["violations"] = vs;
  return j.dump(2) + "\n";
}

}  // namespace pheno::dataset

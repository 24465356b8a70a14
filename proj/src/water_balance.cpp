#include "pheno/water_balance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pheno/error.hpp"

namespace pheno {

TtswRule parse_ttsw_rule(std::string_view text) {
  if (text == "min" || text == "minimum" || text == "minimum-weight") return TtswRule::MinimumWeight;
  if (text == "fraction" || text == "transpiration-fraction") return TtswRule::TranspirationFraction;
  throw Error(ErrorKind::ConfigInvalid, "unknown TTSW rule '" + std::string(text) + "' (min|fraction)");
}

std::string_view to_string(TtswRule rule) noexcept {
  return rule == TtswRule::MinimumWeight ? "min" : "fraction";
}

namespace {

void check_times(std::span<const WeightRecord> w) {
  if (w.size() < 2) throw Error(ErrorKind::TooFewRecords, std::to_string(w.size()) + " weight records");
  for (std::size_t i = 1; i < w.size(); ++i) {
    if (!(w[i].time > w[i - 1].time)) {
      throw Error(ErrorKind::NonMonotoneTime,
                  w[i].plant.key() + ": " + format_iso8601(w[i].time) + " after " + format_iso8601(w[i - 1].time));
    }
  }
}

}  // namespace

std::vector<double> transpiration_series(std::span<const WeightRecord> w, double evaporation) {
  check_times(w);
  std::vector<double> out(w.size() - 1);
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const double dt = days_between(w[i].time, w[i + 1].time);
    out[i] = std::max(0.0, (w[i].weight + w[i + 1].irrigation - w[i + 1].weight) / dt - evaporation);
  }
  return out;
}

std::vector<WeightRecord> daily_weights(std::span<const WeightRecord> w) {
  std::vector<WeightRecord> out;
  double carried = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    carried += w[i].irrigation;
    const bool last_of_day = i + 1 == w.size() || midnight(w[i + 1].time) != midnight(w[i].time);
    if (!last_of_day) continue;
    WeightRecord rec = w[i];
    rec.irrigation = carried;
    carried = 0.0;
    out.push_back(std::move(rec));
  }
  return out;
}

namespace {

struct DailySeries {
  std::vector<WeightRecord> daily;
  std::vector<double> transpiration;
  std::vector<int> day_index;
};

DailySeries prepare(std::span<const WeightRecord> weights, TimePoint start, const WaterConfig& config) {
  check_times(weights);
  DailySeries s;
  for (const auto& rec : daily_weights(weights)) {
    const int d = static_cast<int>(std::floor(days_between(start, rec.time)));
    if (config.window_first && d < *config.window_first) continue;
    if (config.window_last && d > *config.window_last) continue;
    s.daily.push_back(rec);
    s.day_index.push_back(d);
  }
  if (s.daily.size() < 2) {
    throw Error(ErrorKind::TooFewRecords, (weights.empty() ? std::string("plant") : weights.front().plant.key()) +
                                              ": fewer than 2 daily weights in the dry-down window");
  }
  s.daily.front().irrigation = 0.0;
  s.transpiration = transpiration_series(s.daily, config.evaporation);
  return s;
}

WaterSeries assemble(const DailySeries& s, TimePoint start) {
  WaterSeries ws;
  ws.plant = s.daily.front().plant;
  for (std::size_t i = 0; i < s.daily.size(); ++i) {
    WaterStatus st;
    st.plant = ws.plant;
    st.day_index = s.day_index[i];
    st.day = days_between(start, s.daily[i].time);
    st.weight = s.daily[i].weight;
    if (i < s.transpiration.size()) st.transpiration = s.transpiration[i];
    ws.statuses.push_back(std::move(st));
  }
  return ws;
}

}  // namespace

WaterSeries compute_water_series(std::span<const WeightRecord> weights, TimePoint start, const WaterConfig& config,
                                 const std::map<int, double>* control_transpiration) {
  const DailySeries s = prepare(weights, start, config);
  WaterSeries ws = assemble(s, start);

  double end_weight = std::min_element(s.daily.begin(), s.daily.end(), [](const auto& a, const auto& b) {
                        return a.weight < b.weight;
                      })->weight;
  if (config.rule == TtswRule::TranspirationFraction) {
    if (!control_transpiration) {
      throw Error(ErrorKind::ConfigInvalid, "the fraction TTSW rule needs control transpiration");
    }
    for (std::size_t i = 0; i < s.transpiration.size(); ++i) {
      auto it = control_transpiration->find(s.day_index[i]);
      if (it == control_transpiration->end() || !(it->second > 0)) continue;
      if (s.transpiration[i] < config.fraction * it->second) {
        end_weight = s.daily[i].weight;
        break;
      }
    }
  }

  const double start_weight = s.daily.front().weight;
  ws.end_weight = end_weight;
  ws.ttsw = start_weight - end_weight;
  if (!(ws.ttsw > 1e-9 * start_weight)) {
    throw Error(ErrorKind::ZeroTtsw, ws.plant.key() + ": pot weight never fell below its starting value");
  }
  for (auto& st : ws.statuses) {
    st.atsw = std::max(0.0, st.weight - end_weight);
    st.ftsw = std::clamp(st.atsw / ws.ttsw, 0.0, 1.0);
  }
  return ws;
}

WaterSeries control_water_series(std::span<const WeightRecord> weights, TimePoint start, const WaterConfig& config) {
  WaterConfig whole = config;
  whole.window_first.reset();
  whole.window_last.reset();
  WaterSeries ws = assemble(prepare(weights, start, whole), start);
  ws.ttsw = std::nan("");
  ws.end_weight = std::nan("");
  for (auto& st : ws.statuses) {
    st.atsw = std::nan("");
    st.ftsw = 1.0;
  }
  return ws;
}

double normalized_daily_rate(double stressed_value, std::span<const double> control_values) {
  if (control_values.empty()) throw Error(ErrorKind::DegenerateControl, "no control values");
  const double mean =
      std::accumulate(control_values.begin(), control_values.end(), 0.0) / static_cast<double>(control_values.size());
  if (!(mean > 0)) throw Error(ErrorKind::DegenerateControl, "control mean is not positive");
  return stressed_value / mean;
}

WaterTable compute_water_table(const Experiment& e, const WaterConfig& config) {
  std::map<PlantId, std::vector<WeightRecord>> by_plant;
  for (const auto& w : e.weights) by_plant[w.plant].push_back(w);

  WaterTable table;
  for (const auto& [plant, ws] : by_plant) {
    if (plant.treatment != Treatment::Control) continue;
    try {
      table.series.push_back(control_water_series(ws, e.start, config));
    } catch (const Error& err) {
      table.failures[plant] = err.what();
    }
  }
  const auto control_means = control_transpiration_means(table);

  for (const auto& [plant, ws] : by_plant) {
    if (plant.treatment != Treatment::Stressed) continue;
    std::map<int, double> own;
    for (const auto& [k, v] : control_means) {
      if (k.first == plant.genotype) own[k.second] = v;
    }
    try {
      table.series.push_back(compute_water_series(ws, e.start, config, &own));
    } catch (const Error& err) {
      table.failures[plant] = err.what();
    }
  }
  std::sort(table.series.begin(), table.series.end(),
            [](const WaterSeries& a, const WaterSeries& b) { return a.plant < b.plant; });
  return table;
}

std::map<std::pair<std::string, int>, double> control_transpiration_means(const WaterTable& table) {
  std::map<std::pair<std::string, int>, std::pair<double, int>> acc;
  for (const auto& s : table.series) {
    if (s.plant.treatment != Treatment::Control) continue;
    for (const auto& st : s.statuses) {
      if (!st.transpiration) continue;
      auto& a = acc[{s.plant.genotype, st.day_index}];
      a.first += *st.transpiration;
      a.second += 1;
    }
  }
  std::map<std::pair<std::string, int>, double> out;
  for (const auto& [k, a] : acc) out[k] = a.first / a.second;
  return out;
}

}  // namespace pheno

#include "pheno/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pheno/csv.hpp"
#include "pheno/error.hpp"
#include "pheno/svg.hpp"

namespace pheno::pipeline {

namespace {

using json = nlohmann::ordered_json;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int day_of(TimePoint start, TimePoint t) { return static_cast<int>(std::floor(days_between(start, t))); }

std::map<PlantId, std::vector<FeatureRecord>> records_by_plant(std::span<const FeatureRecord> records) {
  std::map<PlantId, std::vector<FeatureRecord>> out;
  for (const auto& r : records) out[r.plant].push_back(r);
  return out;
}

json metrics_json(const std::vector<NamedMetrics>& rows) {
  json a = json::array();
  for (const auto& r : rows) {
    a.push_back({{"method", r.name},
                 {"n", r.metrics.n},
                 {"rmse", r.metrics.rmse},
                 {"rmse_rel", r.metrics.rmse_rel},
                 {"bias", r.metrics.bias},
                 {"efficiency", r.metrics.efficiency}});
  }
  return a;
}

json fits_json(const FitAllResult& fits) {
  json rows = json::array();
  for (const auto& f : fits.fits) {
    rows.push_back({{"process", std::string(to_string(f.process))},
                    {"genotype", f.genotype},
                    {"estimate", f.estimate},
                    {"se", f.se},
                    {"rmse", f.rmse},
                    {"n", f.n}});
  }
  json excluded = json::object();
  for (const auto& [k, v] : fits.excluded) excluded[k] = v;
  return {{"fits", rows}, {"excluded", excluded}};
}

json failures_json(const std::map<PlantId, std::string>& failures) {
  json o = json::object();
  for (const auto& [plant, msg] : failures) o[plant.key()] = msg;
  return o;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

}  // namespace

std::vector<PlantDayValue> daily_predictions(std::span<const FeatureRecord> records, TimePoint start,
                                             const RecordPredictor& predict) {
  std::map<std::pair<PlantId, int>, std::vector<double>> groups;
  for (const auto& r : records) {
    if (auto v = predict(r)) groups[{r.plant, day_of(start, r.time)}].push_back(*v);
  }
  std::vector<PlantDayValue> out;
  out.reserve(groups.size());
  for (auto& [key, values] : groups) out.push_back({key.first, key.second, median(std::move(values))});
  return out;
}

std::vector<PlantDayValue> manual_values(std::span<const ManualAreaRecord> records, TimePoint start) {
  std::map<std::pair<PlantId, int>, std::pair<double, int>> groups;
  for (const auto& r : records) {
    auto& g = groups[{r.plant, day_of(start, r.time)}];
    g.first += r.total_area;
    g.second += 1;
  }
  std::vector<PlantDayValue> out;
  for (const auto& [key, g] : groups) out.push_back({key.first, key.second, g.first / g.second});
  return out;
}

const GrowthCurve* CurveSet::find(const PlantId& plant) const {
  auto it = std::lower_bound(curves.begin(), curves.end(), plant,
                             [](const GrowthCurve& c, const PlantId& p) { return c.plant < p; });
  return it != curves.end() && it->plant == plant ? &*it : nullptr;
}

std::optional<double> CurveSet::area_at(const PlantId& plant, int day) const {
  const GrowthCurve* c = find(plant);
  if (!c) return std::nullopt;
  for (std::size_t i = 0; i < c->days.size(); ++i) {
    if (c->days[i] == day) return c->monotone[i];
  }
  return std::nullopt;
}

CurveSet build_curves(std::span<const PlantDayValue> values, SmoothingParameter smoothing) {
  std::map<PlantId, std::vector<std::pair<int, double>>> by_plant;
  for (const auto& v : values) by_plant[v.plant].push_back({v.day, v.value});
  CurveSet set;
  for (auto& [plant, series] : by_plant) {
    std::sort(series.begin(), series.end());
    std::vector<double> days, raw;
    for (const auto& [d, v] : series) {
      days.push_back(d);
      raw.push_back(v);
    }
    try {
      set.curves.push_back(build_growth_curve(plant, days, raw, smoothing));
    } catch (const Error& e) {
      set.failures[plant] = e.what();
    }
  }
  return set;
}

std::vector<ResponsePoint> expansion_points(const CurveSet& curves, const WaterTable& water) {
  // (genotype, interval start) -> control rates
  std::map<std::pair<std::string, int>, std::vector<double>> control;
  for (const auto& c : curves.curves) {
    if (c.plant.treatment != Treatment::Control) continue;
    for (std::size_t i = 0; i < c.expansion_rate.size(); ++i) {
      control[{c.plant.genotype, static_cast<int>(c.days[i])}].push_back(c.expansion_rate[i]);
    }
  }
  std::map<PlantId, const WaterSeries*> series;
  for (const auto& s : water.series) series[s.plant] = &s;

  std::vector<ResponsePoint> out;
  for (const auto& c : curves.curves) {
    if (c.plant.treatment != Treatment::Stressed) continue;
    auto ws = series.find(c.plant);
    if (ws == series.end()) continue;
    for (std::size_t i = 0; i < c.expansion_rate.size(); ++i) {
      const int day = static_cast<int>(c.days[i]);
      auto ctl = control.find({c.plant.genotype, day});
      if (ctl == control.end()) continue;
      const auto& statuses = ws->second->statuses;
      auto st = std::find_if(statuses.begin(), statuses.end(), [&](const WaterStatus& s) { return s.day_index == day; });
      if (st == statuses.end()) continue;
      double y;
      try {
        y = normalized_daily_rate(c.expansion_rate[i], ctl->second);
      } catch (const Error&) {
        continue;
      }
      out.push_back({c.plant.genotype, Process::LE, st->ftsw, y, static_cast<double>(day), c.plant});
    }
  }
  return out;
}

std::vector<ResponsePoint> transpiration_points(const WaterTable& water) {
  std::map<std::pair<std::string, int>, std::vector<double>> control;
  for (const auto& s : water.series) {
    if (s.plant.treatment != Treatment::Control) continue;
    for (const auto& st : s.statuses) {
      if (st.transpiration) control[{s.plant.genotype, st.day_index}].push_back(*st.transpiration);
    }
  }
  std::vector<ResponsePoint> out;
  for (const auto& s : water.series) {
    if (s.plant.treatment != Treatment::Stressed) continue;
    for (const auto& st : s.statuses) {
      if (!st.transpiration) continue;
      auto ctl = control.find({s.plant.genotype, st.day_index});
      if (ctl == control.end()) continue;
      double y;
      try {
        y = normalized_daily_rate(*st.transpiration, ctl->second);
      } catch (const Error&) {
        continue;
      }
      out.push_back({s.plant.genotype, Process::TR, st.ftsw, y, static_cast<double>(st.day_index), s.plant});
    }
  }
  return out;
}

std::vector<WeightRecord> manual_day_weights(const Experiment& e) {
  std::set<std::pair<PlantId, int>> manual_days;
  for (const auto& m : e.manual) manual_days.insert({m.plant, day_of(e.start, m.time)});

  std::map<PlantId, std::vector<WeightRecord>> by_plant;
  for (const auto& w : e.weights) by_plant[w.plant].push_back(w);
  std::vector<WeightRecord> out;
  for (auto& [plant, ws] : by_plant) {
    std::stable_sort(ws.begin(), ws.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    double pending = 0.0;  // irrigation of skipped readings
    for (const auto& w : ws) {
      pending += w.irrigation;
      if (!manual_days.contains({plant, day_of(e.start, w.time)})) continue;
      WeightRecord kept = w;
      kept.irrigation = pending;
      pending = 0.0;
      out.push_back(kept);
    }
  }
  return out;
}

MethodEvaluation evaluate_methods(const Experiment& experiment, std::span<const ObservationPair> pairs,
                                  const MethodOptions& options) {
  const auto records = records_by_plant(experiment.features);
  const auto predictors = options.predictors;

  auto lm = [&](std::span<const ObservationPair> train, std::span<const ObservationPair> test) {
    const LinearAreaModel model = fit_linear(train, predictors);
    PredictionColumn pred;
    for (const auto& p : test) {
      try {
        pred.push_back(predict_linear(model, p.features.features));
      } catch (const Error&) {
        pred.push_back(std::nullopt);
      }
    }
    return pred;
  };

  auto splines = [&](std::span<const ObservationPair> train, std::span<const ObservationPair> test) {
    const LinearAreaModel model = fit_linear(train, predictors);
    std::vector<FeatureRecord> test_records;
    std::set<PlantId> plants;
    for (const auto& p : test) plants.insert(p.plant);
    for (const auto& plant : plants) {
      auto it = records.find(plant);
      if (it != records.end()) test_records.insert(test_records.end(), it->second.begin(), it->second.end());
    }
    const auto daily = daily_predictions(test_records, experiment.start,
                                         [&](const FeatureRecord& r) -> std::optional<double> {
                                           try {
                                             return predict_linear(model, r.features);
                                           } catch (const Error&) {
                                             return std::nullopt;
                                           }
                                         });
    const CurveSet curves = build_curves(daily, options.smoothing);
    PredictionColumn pred;
    for (const auto& p : test) pred.push_back(curves.area_at(p.plant, day_of(experiment.start, p.time)));
    return pred;
  };

  auto nn = [&](std::span<const ObservationPair> train, std::span<const ObservationPair> test) {
    const MlpAreaModel model = fit_mlp(train, options.mlp);
    PredictionColumn pred;
    for (const auto& p : test) {
      try {
        pred.push_back(predict_mlp(model, p.features.features));
      } catch (const Error&) {
        pred.push_back(std::nullopt);
      }
    }
    return pred;
  };

  MethodEvaluation out;
  out.predictions["area_lm"] = cross_validate(pairs, options.cv, lm);
  if (options.with_mlp) out.predictions["area_nn"] = cross_validate(pairs, options.cv, nn);
  out.predictions["area_splines"] = cross_validate(pairs, options.cv, splines);
  out.table = metrics_by_method(pairs, out.predictions);
  return out;
}

MeasurementMethod parse_method(std::string_view text) {
  if (text == "image") return MeasurementMethod::Image;
  if (text == "manual") return MeasurementMethod::Manual;
  throw Error(ErrorKind::ConfigInvalid, "unknown measurement method '" + std::string(text) + "' (image|manual)");
}

MethodData method_data(const Experiment& e, MeasurementMethod method, const ReportOptions& options) {
  MethodData out;
  if (method == MeasurementMethod::Image) {
    const auto aligned = dataset::align_observations(e.features, e.manual, options.window_days);
    const LinearAreaModel global = fit_linear(aligned.pairs, options.methods.predictors);
    const auto daily = daily_predictions(e.features, e.start, [&](const FeatureRecord& rec) -> std::optional<double> {
      try {
        return predict_linear(global, rec.features);
      } catch (const Error&) {
        return std::nullopt;
      }
    });
    out.curves = build_curves(daily, options.methods.smoothing);
    out.water = compute_water_table(e, options.water);
  } else {
    out.curves = build_curves(manual_values(e.manual, e.start), options.methods.smoothing);
    Experiment sampled;
    sampled.id = e.id;
    sampled.start = e.start;
    sampled.end = e.end;
    sampled.plants = e.plants;
    sampled.weights = manual_day_weights(e);
    out.water = compute_water_table(sampled, options.water);
  }
  out.points = expansion_points(out.curves, out.water);
  for (auto& p : transpiration_points(out.water)) out.points.push_back(std::move(p));
  return out;
}

ReportResult run_report(const Experiment& e, const ReportOptions& options) {
  ReportResult r;
  r.experiment = e.id;
  r.plants = e.plants.size();
  r.violations = dataset::validate_experiment(e).violations;

  const auto aligned = dataset::align_observations(e.features, e.manual, options.window_days);
  r.pairs = aligned.pairs.size();
  r.dropped = aligned.dropped.size();
  for (const auto& p : aligned.pairs) r.observed.push_back(p.observed_area);

  r.methods = evaluate_methods(e, aligned.pairs, options.methods);
  const std::vector<ModelScope> scopes{ModelScope::Global, ModelScope::PerTreatment, ModelScope::PerGenotype};
  for (ModelScope scope : scopes) {
    r.scope_predictions["area_" + std::string(to_string(scope))] =
        scope_predictions(aligned.pairs, scope, options.scope_cv, options.methods.predictors);
  }
  r.scopes = metrics_by_method(aligned.pairs, r.scope_predictions);

  MethodData image = method_data(e, MeasurementMethod::Image, options);
  MethodData manual = method_data(e, MeasurementMethod::Manual, options);
  r.water_failures = image.water.failures;
  r.image_fits = fit_all(image.points, options.fit);
  r.manual_fits = fit_all(manual.points, options.fit);
  r.curves = std::move(image.curves);
  r.manual_curves = std::move(manual.curves);

  try {
    r.comparison = compare_methods(r.manual_fits.fits, r.image_fits.fits);
  } catch (const Error& err) {
    r.comparison_error = err.what();
  }
  return r;
}

std::string report_json(const ReportResult& r) {
  json j;
  j["experiment"] = r.experiment;
  j["plants"] = r.plants;
  j["pairs"] = r.pairs;
  j["dropped_manual"] = r.dropped;
  json violations = json::array();
  for (const auto& v : r.violations) {
    violations.push_back({{"kind", v.kind}, {"subject", v.subject}, {"message", v.message}});
  }
  j["violations"] = violations;
  j["table1"] = metrics_json(r.methods.table);
  j["table2"] = metrics_json(r.scopes);
  j["table3"] = fits_json(r.image_fits);
  j["manual_fits"] = fits_json(r.manual_fits);
  j["comparison"] = r.comparison ? json::parse(r.comparison->to_json()) : json(nullptr);
  if (!r.comparison_error.empty()) j["comparison_error"] = r.comparison_error;
  j["curve_failures"] = failures_json(r.curves.failures);
  j["water_failures"] = failures_json(r.water_failures);
  return j.dump(2) + "\n";
}

void write_report(const ReportResult& r, const Experiment& e, const std::string& dir, bool plots) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);
  {
    std::ostringstream t1, t2, t3;
    write_metrics_table(t1, r.methods.table);
    write_metrics_table(t2, r.scopes);
    write_fits(t3, r.image_fits.fits);
    write_text(base / "table1.csv", t1.str());
    write_text(base / "table2.csv", t2.str());
    write_text(base / "table3.csv", t3.str());
  }
  write_text(base / "report.json", report_json(r));
  if (!plots) return;

  // growth curves of the first plant of every genotype x treatment
  std::set<std::pair<std::string, Treatment>> shown;
  for (const auto& c : r.curves.curves) {
    if (!shown.insert({c.plant.genotype, c.plant.treatment}).second) continue;
    svg::Plot plot(c.plant.genotype + " " + std::string(to_string(c.plant.treatment)) + " pot " +
                       std::to_string(c.plant.pot),
                   "day", "leaf area (mm2)");
    svg::Series raw{"raw prediction", {}, "#7f7f7f", true, false, false};
    svg::Series smooth{"smoothed", {}, "#1f77b4", false, true, true};
    svg::Series mono{"monotone", {}, "#d62728", false, true, false};
    for (std::size_t i = 0; i < c.days.size(); ++i) {
      raw.points.push_back({c.days[i], c.raw[i]});
      smooth.points.push_back({c.days[i], c.smoothed[i]});
      mono.points.push_back({c.days[i], c.monotone[i]});
    }
    svg::Series manual{"manual", {}, "#2ca02c", true, false, false};
    for (const auto& m : e.manual) {
      if (m.plant == c.plant) manual.points.push_back({days_between(e.start, m.time), m.total_area});
    }
    plot.add(raw);
    plot.add(smooth);
    plot.add(mono);
    plot.add(manual);
    svg::write_file((base / ("fig3_" + c.plant.experiment + "_" + std::to_string(c.plant.pot) + ".svg")).string(),
                    plot.render());
  }

  std::vector<svg::Plot> scope_panels;
  for (const auto& [name, column] : r.scope_predictions) {
    svg::Plot p(name, "observed (mm2)", "predicted (mm2)", 420, 420);
    svg::Series s{"", {}, "#1f77b4", true, false, false};
    for (std::size_t i = 0; i < column.size(); ++i) {
      if (column[i]) s.points.push_back({r.observed[i], *column[i]});
    }
    p.add(s);
    p.add_identity_line();
    scope_panels.push_back(std::move(p));
  }
  svg::write_file((base / "fig4.svg").string(), svg::Plot::render_panels(scope_panels));

  std::vector<svg::Plot> process_panels;
  for (Process process : {Process::LE, Process::TR}) {
    std::string title(to_string(process));
    svg::Series s{"", {}, "#d62728", true, false, false};
    if (r.comparison) {
      for (const auto& c : r.comparison->processes) {
        if (c.process != process) continue;
        title += " (R = " + csv::format_number(std::round(c.r * 100) / 100) + ")";
        for (const auto& p : c.pairs) s.points.push_back({p.a, p.b});
      }
    }
    svg::Plot p(title, "manual estimate", "image estimate", 420, 420);
    p.add(s);
    p.add_identity_line();
    process_panels.push_back(std::move(p));
  }
  svg::write_file((base / "fig5.svg").string(), svg::Plot::render_panels(process_panels));
}

}  // namespace pheno::pipeline

#include "pheno/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pheno/area_model.hpp"
#include "pheno/csv.hpp"
#include "pheno/dataset.hpp"
#include "pheno/error.hpp"
#include "pheno/evaluation.hpp"
#include "pheno/model_io.hpp"
#include "pheno/pipeline.hpp"
#include "pheno/response_fit.hpp"
#include "pheno/smoothing.hpp"
#include "pheno/svg.hpp"
#include "pheno/synth.hpp"
#include "pheno/water_balance.hpp"

namespace pheno::cli {

namespace {

namespace fs = std::filesystem;

constexpr const char* kDefaultOutDir = "pheno_out";

/// Thrown for bad flag values found after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string in;
  std::string out;
  double window = dataset::kDefaultWindowDays;
  std::string lambda = "auto";
  std::string predictors;
  std::string scope = "global";
  std::string method = "lm";
  std::string source = "image";
  std::string cv = "kfold:5";
  std::string scope_cv = "lopo";
  bool mlp = true;
  bool plot = true;

  // mlp
  int hidden = 32;
  int epochs = 300;
  double learning_rate = 1e-3;
  int batch = 16;
  double validation_fraction = 0.2;
  int patience = 20;
  std::uint64_t seed = 1;
  std::string inputs;

  // water
  std::string weights;
  std::string plants;
  std::string rule = "min";
  double fraction = 0.1;
  double evaporation = 0.0;
  std::optional<int> window_first;
  std::optional<int> window_last;

  // response fits
  double lower = -15.0;
  double upper = -0.5;
  std::size_t min_points = 5;
  double min_span = 0.3;

  // prediction / comparison files
  std::string model;
  std::string predictions;
  std::string fits_a;
  std::string fits_b;
  double threshold = kInfluenceThreshold;

  SynthConfig synth;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r"));
  s.erase(s.find_last_not_of(" \t\r") + 1);
  return s;
}

SmoothingParameter smoothing_of(const std::string& text) {
  if (text == "auto") return SmoothingParameter::Auto();
  auto v = csv::parse_number(text);
  if (!v || *v < 0 || !std::isfinite(*v)) throw UsageError("--lambda must be 'auto' or a number >= 0");
  return SmoothingParameter::Fixed(*v);
}

CvScheme cv_of(const std::string& text, const char* flag) {
  try {
    return parse_cv(text);
  } catch (const Error& e) {
    throw UsageError(std::string(flag) + ": " + e.message());
  }
}

std::vector<std::string> predictors_of(const Options& o) {
  return o.predictors.empty() ? default_predictors() : split_list(o.predictors);
}

MlpConfig mlp_of(const Options& o) {
  MlpConfig c;
  c.hidden_width = o.hidden;
  c.epochs = o.epochs;
  c.learning_rate = o.learning_rate;
  c.batch_size = o.batch;
  c.validation_fraction = o.validation_fraction;
  c.patience = o.patience;
  c.seed = o.seed;
  c.inputs = split_list(o.inputs);
  return c;
}

WaterConfig water_of(const Options& o) {
  WaterConfig c;
  c.rule = parse_ttsw_rule(o.rule);
  c.fraction = o.fraction;
  c.evaporation = o.evaporation;
  c.window_first = o.window_first;
  c.window_last = o.window_last;
  return c;
}

pipeline::ReportOptions report_options_of(const Options& o) {
  pipeline::ReportOptions r;
  r.window_days = o.window;
  r.methods.cv = cv_of(o.cv, "--cv");
  r.methods.predictors = predictors_of(o);
  r.methods.smoothing = smoothing_of(o.lambda);
  r.methods.with_mlp = o.mlp;
  r.methods.mlp = mlp_of(o);
  r.scope_cv = cv_of(o.scope_cv, "--scope-cv");
  r.water = water_of(o);
  r.fit.lower = o.lower;
  r.fit.upper = o.upper;
  r.fit.min_points = o.min_points;
  r.fit.min_span = o.min_span;
  r.plots = o.plot;
  if (!(r.fit.lower < r.fit.upper)) throw UsageError("--lower must be below --upper");
  return r;
}

fs::path out_dir(const Options& o) {
  fs::path p = o.out.empty() ? fs::path(kDefaultOutDir) : fs::path(o.out);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
  f << text;
}

std::vector<std::string> plant_cells(const PlantId& p) {
  return {p.experiment, std::to_string(p.pot), p.genotype, std::string(to_string(p.treatment))};
}

std::string num(double v) { return csv::format_number(v); }
std::string num(const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string(); }

/// Plant identities from any CSV carrying experiment,pot,genotype,treatment.
std::vector<PlantId> read_plants(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  try {
    const auto ce = t.require_column("experiment"), cp = t.require_column("pot"),
               cg = t.require_column("genotype"), ct = t.require_column("treatment");
    std::set<PlantId> plants;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      auto pot = csv::parse_number(t.rows[r][cp]);
      if (!pot || *pot != std::floor(*pot)) {
        throw Error(ErrorKind::NonNumericValue, "row " + std::to_string(r + 1) + ", column pot");
      }
      plants.insert({t.rows[r][ce], static_cast<int>(*pot), t.rows[r][cg], parse_treatment(t.rows[r][ct])});
    }
    return {plants.begin(), plants.end()};
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.message());
  }
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_ingest(const Options& o, std::ostream& out) {
  const Experiment e = dataset::load_experiment(o.in);
  const auto report = dataset::validate_experiment(e);
  const auto aligned = dataset::align_observations(e.features, e.manual, o.window);
  const fs::path dir = out_dir(o);

  write_text(dir / "validation.txt", report.to_text());
  write_text(dir / "validation.json", report.to_json());
  {
    std::ofstream f(dir / "pairs.csv", std::ios::binary);
    std::vector<std::string> header{"experiment", "pot", "genotype", "treatment", "manual_time", "image_time",
                                    "observed_area"};
    for (const auto& p : default_predictors()) header.push_back(p);
    csv::write_row(f, header);
    for (const auto& p : aligned.pairs) {
      auto row = plant_cells(p.plant);
      row.push_back(format_iso8601(p.time));
      row.push_back(format_iso8601(p.features.time));
      row.push_back(num(p.observed_area));
      for (const auto& name : default_predictors()) {
        auto v = p.features.features.get(name);
        row.push_back(v ? num(*v) : "");
      }
      csv::write_row(f, row);
    }
  }
  {
    std::ofstream f(dir / "dropped.csv", std::ios::binary);
    dataset::write_manual(f, aligned.dropped);
  }
  out << "experiment " << e.id << ": " << e.plants.size() << " plants, " << e.features.size() << " images, "
      << e.manual.size() << " manual areas, " << e.weights.size() << " weights\n";
  out << "aligned " << aligned.pairs.size() << " pairs, dropped " << aligned.dropped.size() << "\n";
  out << report.to_text();
  return report.ok() ? kExitOk : kExitValidation;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const SynthResult result = generate_experiment(o.synth);
  const fs::path dir = out_dir(o);
  write_synthetic(result, dir.string());
  out << "wrote " << result.experiment.features.size() << " images, " << result.experiment.manual.size()
      << " manual areas, " << result.experiment.weights.size() << " weights to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_fit_area(const Options& o, std::ostream& out) {
  const Experiment e = dataset::load_experiment(o.in);
  const auto aligned = dataset::align_observations(e.features, e.manual, o.window);
  AreaModel model;
  if (o.method == "mlp") {
    const MlpAreaModel m = fit_mlp(aligned.pairs, mlp_of(o));
    out << "mlp: " << m.input_names.size() << " inputs, " << m.network.width() << " hidden units, "
        << m.training_log.epochs_run << " epochs (best " << m.training_log.best_epoch
        << "), validation loss " << num(m.training_log.final_validation_loss) << "\n";
    model = m;
  } else {
    const ScopedModelSet set = fit_scoped(aligned.pairs, parse_scope(o.scope), predictors_of(o));
    for (const auto& [key, m] : set.models) {
      out << key << ": n=" << m.diagnostics.n << " training_rmse=" << num(m.diagnostics.training_rmse)
          << " intercept=" << num(m.intercept);
      for (std::size_t i = 0; i < m.predictor_names.size(); ++i) {
        out << " " << m.predictor_names[i] << "=" << num(m.coefficients(static_cast<Eigen::Index>(i)));
      }
      out << "\n";
    }
    model = set;
  }
  const fs::path path = out_dir(o) / "model.json";
  save_model(model, path.string());
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  const Experiment e = dataset::load_experiment(o.in);
  const AreaModel model = load_model(o.model);
  std::size_t skipped = 0;
  const auto daily = pipeline::daily_predictions(e.features, e.start, [&](const FeatureRecord& r) {
    auto v = predict_area(model, r);
    if (!v) ++skipped;
    return v;
  });
  const fs::path path = out_dir(o) / "predictions.csv";
  std::ofstream f(path, std::ios::binary);
  csv::write_row(f, {"experiment", "pot", "genotype", "treatment", "day", "raw_area"});
  for (const auto& d : daily) {
    auto row = plant_cells(d.plant);
    row.push_back(std::to_string(d.day));
    row.push_back(num(d.value));
    csv::write_row(f, row);
  }
  out << "predicted " << daily.size() << " plant-days";
  if (skipped) out << " (" << skipped << " images lacked model inputs)";
  out << "\nwrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_smooth(const Options& o, std::ostream& out, std::ostream& err) {
  const SmoothingParameter smoothing = smoothing_of(o.lambda);
  const csv::Table t = csv::read_file(o.predictions);
  std::map<PlantId, std::vector<std::pair<double, double>>> series;
  try {
    const auto ce = t.require_column("experiment"), cp = t.require_column("pot"), cg = t.require_column("genotype"),
               ct = t.require_column("treatment"), cd = t.require_column("day"), ca = t.require_column("raw_area");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      auto number = [&](std::size_t c) {
        auto v = csv::parse_number(t.rows[r][c]);
        if (!v) throw Error(ErrorKind::NonNumericValue, "row " + std::to_string(r + 1) + ", column " + t.header[c]);
        return *v;
      };
      const PlantId plant{t.rows[r][ce], static_cast<int>(number(cp)), t.rows[r][cg], parse_treatment(t.rows[r][ct])};
      series[plant].push_back({number(cd), number(ca)});
    }
  } catch (const Error& e) {
    throw Error(e.kind(), o.predictions + ": " + e.message());
  }

  const fs::path dir = out_dir(o);
  std::ofstream f(dir / "curves.csv", std::ios::binary);
  csv::write_row(f, {"experiment", "pot", "genotype", "treatment", "day", "raw", "smoothed", "monotone", "rate"});
  std::size_t failed = 0;
  for (auto& [plant, points] : series) {
    std::sort(points.begin(), points.end());
    std::vector<double> days, raw;
    for (const auto& [d, v] : points) {
      days.push_back(d);
      raw.push_back(v);
    }
    GrowthCurve c;
    try {
      c = build_growth_curve(plant, days, raw, smoothing);
    } catch (const Error& e) {
      err << "warning: " << plant.key() << ": " << e.what() << "\n";
      ++failed;
      continue;
    }
    for (std::size_t i = 0; i < c.days.size(); ++i) {
      auto row = plant_cells(plant);
      row.push_back(num(c.days[i]));
      row.push_back(num(c.raw[i]));
      row.push_back(num(c.smoothed[i]));
      row.push_back(num(c.monotone[i]));
      row.push_back(i < c.expansion_rate.size() ? num(c.expansion_rate[i]) : "");
      csv::write_row(f, row);
    }
    if (o.plot) {
      svg::Plot plot(plant.genotype + " " + std::string(to_string(plant.treatment)) + " pot " + std::to_string(plant.pot),
                     "day", "leaf area (mm2)");
      svg::Series sr{"raw", {}, "#7f7f7f", true, false, false};
      svg::Series ss{"smoothed", {}, "#1f77b4", false, true, true};
      svg::Series sm{"monotone", {}, "#d62728", false, true, false};
      for (std::size_t i = 0; i < c.days.size(); ++i) {
        sr.points.push_back({c.days[i], c.raw[i]});
        ss.points.push_back({c.days[i], c.smoothed[i]});
        sm.points.push_back({c.days[i], c.monotone[i]});
      }
      plot.add(sr);
      plot.add(ss);
      plot.add(sm);
      svg::write_file((dir / ("fig3_" + plant.experiment + "_" + std::to_string(plant.pot) + ".svg")).string(),
                      plot.render());
    }
  }
  out << "smoothed " << series.size() - failed << " of " << series.size() << " plants\nwrote "
      << (dir / "curves.csv").string() << "\n";
  return failed == series.size() && failed > 0 ? kExitValidation : kExitOk;
}

int cmd_water(const Options& o, std::ostream& out, std::ostream& err) {
  Experiment e;
  if (!o.in.empty()) {
    e = dataset::load_experiment(o.in);
  } else {
    if (o.weights.empty() || o.plants.empty()) throw UsageError("water needs --in, or both --weights and --plants");
    const auto plants = read_plants(o.plants);
    std::ifstream in(o.weights, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + o.weights);
    std::vector<WeightRecord> weights;
    try {
      weights = dataset::parse_weights(in, plants);
    } catch (const Error& ex) {
      throw Error(ex.kind(), o.weights + ": " + ex.message());
    }
    e = dataset::make_experiment({}, {}, std::move(weights));
  }
  if (e.weights.empty()) throw Error(ErrorKind::TooFewRecords, "no weight records");
  const WaterTable table = compute_water_table(e, water_of(o));

  const fs::path path = out_dir(o) / "water.csv";
  std::ofstream f(path, std::ios::binary);
  csv::write_row(f, {"experiment", "pot", "genotype", "treatment", "day", "weight", "transpiration", "atsw", "ftsw",
                     "ttsw"});
  for (const auto& s : table.series) {
    for (const auto& st : s.statuses) {
      auto row = plant_cells(s.plant);
      row.push_back(std::to_string(st.day_index));
      row.push_back(num(st.weight));
      row.push_back(num(st.transpiration));
      row.push_back(num(st.atsw));
      row.push_back(num(st.ftsw));
      row.push_back(num(s.ttsw));
      csv::write_row(f, row);
    }
  }
  for (const auto& [plant, msg] : table.failures) err << "warning: " << plant.key() << ": " << msg << "\n";
  out << "water balance for " << table.series.size() << " plants (" << table.failures.size() << " failed)\nwrote "
      << path.string() << "\n";
  return table.series.empty() ? kExitValidation : kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const auto ro = report_options_of(o);
  const Experiment e = dataset::load_experiment(o.in);
  const auto aligned = dataset::align_observations(e.features, e.manual, o.window);
  const auto methods = pipeline::evaluate_methods(e, aligned.pairs, ro.methods);
  std::map<std::string, PredictionColumn> scope_columns;
  for (ModelScope scope : {ModelScope::Global, ModelScope::PerTreatment, ModelScope::PerGenotype}) {
    scope_columns["area_" + std::string(to_string(scope))] =
        scope_predictions(aligned.pairs, scope, ro.scope_cv, ro.methods.predictors);
  }
  const auto scopes = metrics_by_method(aligned.pairs, scope_columns);

  const fs::path dir = out_dir(o);
  {
    std::ofstream f(dir / "table1.csv", std::ios::binary);
    write_metrics_table(f, methods.table);
  }
  {
    std::ofstream f(dir / "table2.csv", std::ios::binary);
    write_metrics_table(f, scopes);
  }
  write_metrics_table(out, methods.table);
  write_metrics_table(out, scopes);
  if (o.plot) {
    std::vector<svg::Plot> panels;
    for (const auto& [name, column] : scope_columns) {
      svg::Plot p(name, "observed (mm2)", "predicted (mm2)", 420, 420);
      svg::Series s{"", {}, "#1f77b4", true, false, false};
      for (std::size_t i = 0; i < column.size(); ++i) {
        if (column[i]) s.points.push_back({aligned.pairs[i].observed_area, *column[i]});
      }
      p.add(s);
      p.add_identity_line();
      panels.push_back(std::move(p));
    }
    svg::write_file((dir / "fig4.svg").string(), svg::Plot::render_panels(panels));
  }
  return kExitOk;
}

int cmd_fit_response(const Options& o, std::ostream& out, std::ostream& err) {
  const auto ro = report_options_of(o);
  const auto method = pipeline::parse_method(o.source);
  const Experiment e = dataset::load_experiment(o.in);
  const auto data = pipeline::method_data(e, method, ro);
  const FitAllResult fits = fit_all(data.points, ro.fit);

  const fs::path dir = out_dir(o);
  {
    std::ofstream f(dir / "table3.csv", std::ios::binary);
    write_fits(f, fits.fits);
  }
  {
    std::ofstream f(dir / "response_points.csv", std::ios::binary);
    csv::write_row(f, {"process", "experiment", "pot", "genotype", "treatment", "day", "ftsw", "y"});
    for (const auto& p : data.points) {
      std::vector<std::string> row{std::string(to_string(p.process))};
      for (auto& c : plant_cells(p.plant)) row.push_back(c);
      row.push_back(num(p.day));
      row.push_back(num(p.ftsw));
      row.push_back(num(p.y));
      csv::write_row(f, row);
    }
  }
  write_fits(out, fits.fits);
  for (const auto& [group, reason] : fits.excluded) err << "excluded " << group << ": " << reason << "\n";
  return fits.fits.empty() ? kExitValidation : kExitOk;
}

std::vector<ResponseFit> load_fits(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  try {
    return read_fits(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.message());
  }
}

int cmd_compare(const Options& o, std::ostream& out) {
  const auto a = load_fits(o.fits_a);
  const auto b = load_fits(o.fits_b);
  const ComparisonReport report = compare_methods(a, b, o.threshold);
  const fs::path dir = out_dir(o);
  write_text(dir / "comparison.json", report.to_json());
  if (o.plot) {
    std::vector<svg::Plot> panels;
    for (const auto& c : report.processes) {
      svg::Plot p(std::string(to_string(c.process)) + " (R = " + num(std::round(c.r * 100) / 100) + ")", "method A",
                  "method B", 420, 420);
      svg::Series s{"", {}, "#d62728", true, false, false};
      for (const auto& pe : c.pairs) s.points.push_back({pe.a, pe.b});
      p.add(s);
      p.add_identity_line();
      panels.push_back(std::move(p));
    }
    svg::write_file((dir / "fig5.svg").string(), svg::Plot::render_panels(panels));
  }
  for (const auto& c : report.processes) {
    out << to_string(c.process) << ": n=" << c.pairs.size() << " r=" << num(c.r)
        << " mean_difference=" << num(c.mean_difference);
    if (c.loo_r_min) out << " loo_r_min=" << num(*c.loo_r_min) << " (without " << *c.loo_genotype << ")";
    if (c.single_genotype_driven) out << " [carried by one genotype]";
    out << "\n";
  }
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  const auto ro = report_options_of(o);
  const Experiment e = dataset::load_experiment(o.in);
  const auto result = pipeline::run_report(e, ro);
  const fs::path dir = out_dir(o);
  pipeline::write_report(result, e, dir.string(), o.plot);
  out << "table 1 (methods)\n";
  write_metrics_table(out, result.methods.table);
  out << "table 2 (scopes)\n";
  write_metrics_table(out, result.scopes);
  out << "table 3 (thresholds)\n";
  write_fits(out, result.image_fits.fits);
  if (result.comparison) {
    for (const auto& c : result.comparison->processes) {
      out << "manual vs image " << to_string(c.process) << ": r=" << num(c.r)
          << " mean_difference=" << num(c.mean_difference) << "\n";
    }
  } else {
    out << "manual vs image comparison unavailable: " << result.comparison_error << "\n";
  }
  out << "wrote report to " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// flag registration

void add_in(CLI::App* sub, Options& o) {
  sub->add_option("--in,-i", o.in, "experiment directory with features.csv, manual_areas.csv, weights.csv")
      ->required()
      ->check(CLI::ExistingDirectory);
}

void add_out(CLI::App* sub, Options& o) {
  sub->add_option("--out,-o", o.out, std::string("output directory (default $") + kOutDirEnv + " or " +
                                         kDefaultOutDir + ")")
      ->envname(kOutDirEnv);
}

void add_window(CLI::App* sub, Options& o) {
  sub->add_option("--window", o.window, "manual/image alignment window, days")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
}

void add_lambda(CLI::App* sub, Options& o) {
  sub->add_option("--lambda", o.lambda, "smoothing strength: 'auto' (GCV) or a number >= 0")->capture_default_str();
}

void add_predictors(CLI::App* sub, Options& o) {
  sub->add_option("--predictors", o.predictors,
                  "comma-separated linear-model predictors (default area_sens,hull_area,bounding_rectangle,height)");
}

void add_mlp(CLI::App* sub, Options& o) {
  sub->add_option("--hidden", o.hidden, "MLP hidden units")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--epochs", o.epochs, "MLP training epochs")->capture_default_str()->check(CLI::NonNegativeNumber);
  sub->add_option("--learning-rate", o.learning_rate, "MLP learning rate")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--batch", o.batch, "MLP mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--validation-fraction", o.validation_fraction, "MLP early-stopping validation share")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.9));
  sub->add_option("--patience", o.patience, "MLP early-stopping patience, epochs")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--seed", o.seed, "MLP random seed")->capture_default_str();
  sub->add_option("--inputs", o.inputs, "comma-separated MLP inputs (default: every complete feature)");
}

void add_water(CLI::App* sub, Options& o) {
  sub->add_option("--rule", o.rule, "TTSW end rule: min (minimum weight) or fraction")
      ->capture_default_str()
      ->check(CLI::IsMember({"min", "fraction"}));
  sub->add_option("--fraction", o.fraction, "control-transpiration fraction for --rule fraction")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--evaporation", o.evaporation, "pot evaporation subtracted from daily rates, g/day")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--window-first", o.window_first, "first day index of the dry-down window");
  sub->add_option("--window-last", o.window_last, "last day index of the dry-down window");
}

void add_fit(CLI::App* sub, Options& o) {
  sub->add_option("--lower", o.lower, "lower bound of the threshold parameter")->capture_default_str();
  sub->add_option("--upper", o.upper, "upper bound of the threshold parameter")->capture_default_str();
  sub->add_option("--min-points", o.min_points, "minimum points per genotype and process")->capture_default_str();
  sub->add_option("--min-span", o.min_span, "minimum FTSW span per genotype and process")->capture_default_str();
}

void add_cv(CLI::App* sub, Options& o) {
  sub->add_option("--cv", o.cv, "cross-validation for the method table: none, lopo or kfold[:k]")
      ->capture_default_str();
  sub->add_option("--scope-cv", o.scope_cv, "cross-validation for the scope table: none, lopo or kfold[:k]")
      ->capture_default_str();
  sub->add_flag("--mlp,!--no-mlp", o.mlp, "include the MLP row in the method table")->capture_default_str();
}

void add_plot(CLI::App* sub, Options& o, bool default_on) {
  o.plot = default_on;
  sub->add_flag("--plot,!--no-plot", o.plot, "write SVG figures")->capture_default_str();
}

/// Reads `key = value` lines; `#` starts a comment.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(n) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    out.push_back({key, trim(line.substr(eq + 1))});
  }
  return out;
}

bool truthy(const std::string& v) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw UsageError("config value '" + v + "' is not a boolean");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"pheno: leaf-area prediction, growth curves and drought-response thresholds from phenotyping data",
               "pheno"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "key=value file supplying flags of the chosen subcommand; command-line flags take precedence");

  auto* ingest = app.add_subcommand("ingest", "parse, validate and align an experiment directory");
  add_in(ingest, o);
  add_window(ingest, o);
  add_out(ingest, o);

  auto* synth = app.add_subcommand("synth", "generate a synthetic experiment with ground truth");
  SynthConfig& sc = o.synth;
  synth->add_option("--seed", sc.seed, "random seed")->capture_default_str();
  synth->add_option("--experiment", sc.experiment, "experiment id")->capture_default_str();
  synth->add_option("--start", sc.start_date, "first day, YYYY-MM-DD")->capture_default_str();
  synth->add_option("--genotypes", sc.n_genotypes, "number of genotypes")->capture_default_str();
  synth->add_option("--control-reps", sc.control_replicates, "control pots per genotype")->capture_default_str();
  synth->add_option("--stressed-reps", sc.stressed_replicates, "stressed pots per genotype")->capture_default_str();
  synth->add_option("--days", sc.n_days, "days in the campaign")->capture_default_str();
  synth->add_option("--manual-every", sc.manual_every, "days between manual area measurements")
      ->capture_default_str();
  synth->add_option("--le", sc.le, "LE parameter per genotype (default: drawn from its range)")->delimiter(',');
  synth->add_option("--tr", sc.tr, "TR parameter per genotype (default: drawn from its range)")->delimiter(',');
  synth->add_option("--feature-noise", sc.feature_noise_cv, "relative noise of the four predictors")
      ->capture_default_str();
  synth->add_option("--manual-noise", sc.manual_noise_cv, "relative noise of manual areas")->capture_default_str();
  synth->add_option("--genotype-offset", sc.genotype_offset, "half-width of per-genotype feature-map offsets")
      ->capture_default_str();
  synth->add_option("--treatment-offset", sc.treatment_offset, "relative feature-map change under stress")
      ->capture_default_str();
  synth->add_option("--transpiration-noise", sc.transpiration_noise_cv, "relative daily transpiration noise")
      ->capture_default_str();
  synth->add_option("--missing-fraction", sc.missing_fraction, "share of absent distractor cells")
      ->capture_default_str();
  add_out(synth, o);

  auto* fit_area = app.add_subcommand("fit-area", "fit a leaf-area model and save it as JSON");
  add_in(fit_area, o);
  fit_area->add_option("--method", o.method, "lm or mlp")->capture_default_str()->check(CLI::IsMember({"lm", "mlp"}));
  fit_area->add_option("--scope", o.scope, "linear-model scope: global, treatment or genotype")
      ->capture_default_str()
      ->check(CLI::IsMember({"global", "treatment", "genotype"}));
  add_predictors(fit_area, o);
  add_window(fit_area, o);
  add_mlp(fit_area, o);
  add_out(fit_area, o);

  auto* predict = app.add_subcommand("predict", "daily median area predictions from a saved model");
  add_in(predict, o);
  predict->add_option("--model,-m", o.model, "model JSON from fit-area")->required()->check(CLI::ExistingFile);
  add_out(predict, o);

  auto* smooth = app.add_subcommand("smooth", "smooth predictions into monotone growth curves");
  smooth->add_option("--predictions,-p", o.predictions, "CSV with experiment,pot,genotype,treatment,day,raw_area")
      ->required()
      ->check(CLI::ExistingFile);
  add_lambda(smooth, o);
  add_plot(smooth, o, false);
  add_out(smooth, o);

  auto* water = app.add_subcommand("water", "transpiration and FTSW from pot weights");
  water->add_option("--in,-i", o.in, "experiment directory")->check(CLI::ExistingDirectory);
  water->add_option("--weights", o.weights, "weights CSV (experiment,pot,time,weight_g,irrigation_g)")
      ->check(CLI::ExistingFile);
  water->add_option("--plants", o.plants, "CSV naming plants (experiment,pot,genotype,treatment)")
      ->check(CLI::ExistingFile);
  add_water(water, o);
  add_out(water, o);

  auto* evaluate = app.add_subcommand("evaluate", "method and scope comparison tables");
  add_in(evaluate, o);
  add_window(evaluate, o);
  add_cv(evaluate, o);
  add_lambda(evaluate, o);
  add_predictors(evaluate, o);
  add_mlp(evaluate, o);
  add_plot(evaluate, o, true);
  add_out(evaluate, o);

  auto* fit_response = app.add_subcommand("fit-response", "per-genotype LE and TR threshold parameters");
  add_in(fit_response, o);
  fit_response->add_option("--method", o.source, "leaf-area source: image or manual")
      ->capture_default_str()
      ->check(CLI::IsMember({"image", "manual"}));
  add_window(fit_response, o);
  add_lambda(fit_response, o);
  add_predictors(fit_response, o);
  add_water(fit_response, o);
  add_fit(fit_response, o);
  add_out(fit_response, o);

  auto* compare = app.add_subcommand("compare", "correlate two threshold parameter tables");
  compare->add_option("--a", o.fits_a, "first fits CSV (x axis)")->required()->check(CLI::ExistingFile);
  compare->add_option("--b", o.fits_b, "second fits CSV (y axis)")->required()->check(CLI::ExistingFile);
  compare->add_option("--threshold", o.threshold, "drop in r that flags a single influential genotype")
      ->capture_default_str();
  add_plot(compare, o, true);
  add_out(compare, o);

  auto* report = app.add_subcommand("report", "full pipeline: tables 1-3, figures and report.json");
  add_in(report, o);
  add_window(report, o);
  add_cv(report, o);
  add_lambda(report, o);
  add_predictors(report, o);
  add_mlp(report, o);
  add_water(report, o);
  add_fit(report, o);
  add_plot(report, o, true);
  add_out(report, o);

  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);

  try {
    // config values become flags appended after the command line, unless already given
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) {
        config_path = args[i + 1];
        args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
        break;
      }
      if (args[i].rfind("--config=", 0) == 0) {
        config_path = args[i].substr(9);
        args.erase(args.begin() + static_cast<long>(i));
        break;
      }
    }
    if (!config_path.empty()) {
      CLI::App* sub = nullptr;
      for (const auto& a : args) {
        if (auto* s = app.get_subcommand_no_throw(a)) {
          sub = s;
          break;
        }
      }
      if (!sub) throw UsageError("--config needs a subcommand");
      for (const auto& [key, value] : read_config(config_path)) {
        const std::string flag = "--" + key;
        const CLI::Option* opt = sub->get_option_no_throw(flag);
        bool negated = false;
        if (!opt) {
          opt = sub->get_option_no_throw("--no-" + key);
          negated = opt != nullptr;
        }
        if (!opt) throw UsageError("config key '" + key + "' is not a flag of '" + sub->get_name() + "'");
        const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
          return a == flag || a.rfind(flag + "=", 0) == 0 || a == "--no-" + key;
        });
        if (given) continue;
        if (opt->get_type_size() == 0 || negated) {
          args.push_back(truthy(value) ? flag : "--no-" + key);
        } else {
          args.push_back(flag + "=" + value);
        }
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "run 'pheno --help' for usage\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(o, out);
    if (synth->parsed()) return cmd_synth(o, out);
    if (fit_area->parsed()) return cmd_fit_area(o, out);
    if (predict->parsed()) return cmd_predict(o, out);
    if (smooth->parsed()) return cmd_smooth(o, out, err);
    if (water->parsed()) return cmd_water(o, out, err);
    if (evaluate->parsed()) return cmd_evaluate(o, out);
    if (fit_response->parsed()) return cmd_fit_response(o, out, err);
    if (compare->parsed()) return cmd_compare(o, out);
    if (report->parsed()) return cmd_report(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::ConfigInvalid ? kExitUsage : kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace pheno::cli

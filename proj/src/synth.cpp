#include "pheno/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <tuple>

#include <json.hpp>

#include "pheno/dataset.hpp"
#include "pheno/error.hpp"
#include "pheno/random.hpp"
#include "pheno/response_fit.hpp"

namespace pheno {

namespace {

// Rows: area_sens, hull_area, bounding_rectangle, height.
// Columns: leaf area and three plant-architecture latents (spread, envelope, stem).
Eigen::Matrix4d base_feature_map() {
  Eigen::Matrix4d m;
  m << 0.40, 1.0, 0.0, 0.0,
       0.95, 0.5, 1.0, 0.0,
       1.50, 0.0, 0.8, 400.0,
       0.0012, 0.0, 0.0, 1.0;
  return m;
}

std::string genotype_name(int g) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "G%02d", g + 1);
  return buf;
}

std::string numbered(const char* stem, int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%02d", stem, k + 1);
  return buf;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::ConfigInvalid, what);
}

}  // namespace

void SynthConfig::validate() const {
  require(n_genotypes >= 1 && control_replicates >= 1 && stressed_replicates >= 1, "counts must be >= 1");
  require(n_genotypes * (control_replicates + stressed_replicates) <= 96 * 100, "too many pots");
  require(n_days >= 2, "n_days must be >= 2");
  require(manual_every >= 1, "manual_every must be >= 1");
  require(le.empty() || static_cast<int>(le.size()) == n_genotypes, "le needs one value per genotype");
  require(tr.empty() || static_cast<int>(tr.size()) == n_genotypes, "tr needs one value per genotype");
  for (double v : le) require(v >= -15.0 && v <= -0.5, "le outside fitting bounds [-15, -0.5]");
  for (double v : tr) require(v >= -15.0 && v <= -0.5, "tr outside fitting bounds [-15, -0.5]");
  for (auto r : {le_range, tr_range}) require(r.first <= r.second && r.first >= -15.0 && r.second <= -0.5,
                                              "parameter range outside fitting bounds");
  require(initial_area > 0 && asymptote_range.first > initial_area, "growth parameters invalid");
  require(growth_rate_range.first > 0 && growth_rate_range.first <= growth_rate_range.second, "growth rate invalid");
  for (double s : {initial_area_cv, plant_vigour_cv, ttsw_cv, weather_cv, transpiration_noise_cv, feature_noise_cv,
                   genotype_offset, manual_noise_cv, distractor_noise_cv}) {
    require(s >= 0, "noise scales must be >= 0");
  }
  require(missing_fraction >= 0 && missing_fraction < 1, "missing_fraction must be in [0, 1)");
  require(std::abs(treatment_offset) < 0.5 && genotype_offset < 0.5, "offsets must be below 0.5");
  require(ttsw_mean > 0 && pot_empty_weight > 0 && transpiration_per_area > 0, "water parameters must be > 0");
  require(shape_features >= 0 && noise_features >= 0, "feature counts must be >= 0");
  require(parse_iso8601(start_date).has_value(), "start_date must be YYYY-MM-DD");
}

const GenotypeTruth& GroundTruth::genotype(const std::string& name) const {
  for (const auto& g : genotypes) {
    if (g.name == name) return g;
  }
  throw Error(ErrorKind::UnknownPlant, "no genotype " + name);
}

const PlantTruth& GroundTruth::plant(int pot) const {
  for (const auto& p : plants) {
    if (p.plant.pot == pot) return p;
  }
  throw Error(ErrorKind::UnknownPlant, "no pot " + std::to_string(pot));
}

SynthResult generate_experiment(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const TimePoint start = *parse_iso8601(cfg.start_date);
  const Eigen::Matrix4d base = base_feature_map();
  const Eigen::Matrix4d base_inv = base.inverse();

  SynthResult out;
  GroundTruth& truth = out.truth;
  truth.coefficients = base_inv.row(0).transpose();

  for (int g = 0; g < cfg.n_genotypes; ++g) {
    GenotypeTruth gt;
    gt.name = genotype_name(g);
    gt.le = rng.uniform(cfg.le_range.first, cfg.le_range.second);
    gt.tr = rng.uniform(cfg.tr_range.first, cfg.tr_range.second);
    gt.asymptote = rng.uniform(cfg.asymptote_range.first, cfg.asymptote_range.second);
    gt.growth_rate = rng.uniform(cfg.growth_rate_range.first, cfg.growth_rate_range.second);
    gt.slope_offset = rng.uniform(-cfg.genotype_offset, cfg.genotype_offset);
    if (!cfg.le.empty()) gt.le = cfg.le[static_cast<std::size_t>(g)];
    if (!cfg.tr.empty()) gt.tr = cfg.tr[static_cast<std::size_t>(g)];
    gt.coefficients = truth.coefficients / (1.0 + gt.slope_offset);
    truth.genotypes.push_back(gt);
  }

  struct PlantState {
    double a0, vigour, ttsw;
    Eigen::Vector3d latent;
  };
  std::vector<PlantState> states;
  int pot = 0;
  for (int g = 0; g < cfg.n_genotypes; ++g) {
    for (Treatment t : {Treatment::Control, Treatment::Stressed}) {
      const int reps = t == Treatment::Control ? cfg.control_replicates : cfg.stressed_replicates;
      for (int r = 0; r < reps; ++r) {
        PlantTruth pt;
        pt.plant = {cfg.experiment, ++pot, truth.genotypes[static_cast<std::size_t>(g)].name, t};
        PlantState s;
        s.a0 = cfg.initial_area * std::max(0.3, 1.0 + cfg.initial_area_cv * rng.normal());
        s.vigour = std::max(0.5, 1.0 + cfg.plant_vigour_cv * rng.normal());
        s.ttsw = cfg.ttsw_mean * std::max(0.5, 1.0 + cfg.ttsw_cv * rng.normal());
        s.latent << rng.uniform(1.0e4, 3.0e4), rng.uniform(2.0e4, 6.0e4), rng.uniform(100.0, 250.0);
        pt.ttsw = s.ttsw;
        pt.end_weight = cfg.pot_empty_weight;
        states.push_back(s);
        truth.plants.push_back(std::move(pt));
      }
    }
  }

  std::vector<double> weather(static_cast<std::size_t>(cfg.n_days));
  for (auto& w : weather) w = std::clamp(1.0 + cfg.weather_cv * rng.normal(), 0.5, 1.5);

  auto names = std::make_shared<std::vector<std::string>>(default_predictors());
  for (int k = 0; k < cfg.shape_features; ++k) names->push_back(numbered("shape", k));
  for (int k = 0; k < cfg.noise_features; ++k) names->push_back(numbered("noise", k));
  const FeatureNames shared = names;

  Experiment& e = out.experiment;
  const std::size_t n_plants = truth.plants.size();
  std::vector<double> area(n_plants), atsw(n_plants);
  for (std::size_t i = 0; i < n_plants; ++i) {
    area[i] = states[i].a0;
    atsw[i] = states[i].ttsw;
  }
  // unstressed trajectory through the plant's initial area
  auto potential = [&](std::size_t i, double day) {
    const auto& gt = truth.genotype(truth.plants[i].plant.genotype);
    const double t0 = std::log(gt.asymptote / states[i].a0 - 1.0) / gt.growth_rate;
    return gt.asymptote / (1.0 + std::exp(-gt.growth_rate * (day - t0)));
  };

  for (int d = 0; d < cfg.n_days; ++d) {
    const TimePoint day_start = start + std::chrono::days{d};
    for (std::size_t i = 0; i < n_plants; ++i) {
      PlantTruth& pt = truth.plants[i];
      const GenotypeTruth& gt = truth.genotype(pt.plant.genotype);
      const bool stressed = pt.plant.treatment == Treatment::Stressed;
      const double ftsw = stressed ? atsw[i] / states[i].ttsw : 1.0;
      pt.area.push_back(area[i]);
      pt.ftsw.push_back(ftsw);

      // daily draws, fixed order: transpiration, image time, features, distractors, manual
      const double t_noise = std::max(0.0, 1.0 + cfg.transpiration_noise_cv * rng.normal());
      const int jitter_min = static_cast<int>(rng.uniform() * 90.0);

      const double slope = (1.0 + gt.slope_offset) * (stressed ? 1.0 + cfg.treatment_offset : 1.0);
      Eigen::Vector4d z;
      z << area[i] * slope, states[i].latent;
      const Eigen::Vector4d clean = base * z;
      std::vector<double> values;
      values.reserve(names->size());
      for (int j = 0; j < 4; ++j) {
        values.push_back(std::max(0.0, clean(j) * (1.0 + cfg.feature_noise_cv * rng.normal())));
      }
      for (int k = 0; k < cfg.shape_features; ++k) {
        const double power = 0.5 + 0.25 * (k % 4);
        const double scale = 1.0 + 0.1 * k;
        double v = scale * 1e3 * std::pow(area[i] / 1e5, power) * (1.0 + cfg.distractor_noise_cv * rng.normal());
        if (cfg.missing_fraction > 0 && rng.uniform() < cfg.missing_fraction) v = std::nan("");
        values.push_back(v);
      }
      for (int k = 0; k < cfg.noise_features; ++k) {
        double v = 100.0 + 10.0 * rng.normal();
        if (cfg.missing_fraction > 0 && rng.uniform() < cfg.missing_fraction) v = std::nan("");
        values.push_back(v);
      }
      e.features.push_back({pt.plant, day_start + std::chrono::hours{10} + std::chrono::minutes{jitter_min},
                            FeatureSet(shared, std::move(values))});

      if (d % cfg.manual_every == 0) {
        const double observed = area[i] * std::max(0.5, 1.0 + cfg.manual_noise_cv * rng.normal());
        e.manual.push_back({pt.plant, day_start + std::chrono::hours{dataset::kManualDateHour}, observed});
      }

      // weight reading at 08:00, before the day's transpiration
      WeightRecord w;
      w.plant = pt.plant;
      w.time = day_start + std::chrono::hours{8};
      if (stressed) {
        w.weight = cfg.pot_empty_weight + atsw[i];
      } else {
        const auto& tr = pt.transpiration;
        w.weight = cfg.pot_empty_weight + states[i].ttsw - (d >= 1 ? tr[static_cast<std::size_t>(d - 1)] : 0.0);
        w.irrigation = d >= 2 ? tr[static_cast<std::size_t>(d - 2)] : 0.0;
      }
      e.weights.push_back(w);

      if (d + 1 == cfg.n_days) continue;
      const double pot_growth = (potential(i, d + 1) - potential(i, d)) * states[i].vigour;
      const double expansion = stressed ? pot_growth * response_curve(gt.le, ftsw) : pot_growth;
      double transp = cfg.transpiration_per_area * potential(i, d) * states[i].vigour *
                      weather[static_cast<std::size_t>(d)] * t_noise;
      if (stressed) {
        transp = std::min(transp * response_curve(gt.tr, ftsw), atsw[i]);
        atsw[i] -= transp;
      }
      pt.expansion.push_back(expansion);
      pt.transpiration.push_back(transp);
      area[i] += expansion;
    }
  }

  auto by_plant_time = [](const auto& a, const auto& b) {
    return std::tie(a.plant.pot, a.time) < std::tie(b.plant.pot, b.time);
  };
  std::stable_sort(e.features.begin(), e.features.end(), by_plant_time);
  std::stable_sort(e.manual.begin(), e.manual.end(), by_plant_time);
  std::stable_sort(e.weights.begin(), e.weights.end(), by_plant_time);
  out.experiment = dataset::make_experiment(std::move(e.features), std::move(e.manual), std::move(e.weights));
  return out;
}

std::string GroundTruth::to_json() const {
  using json = nlohmann::ordered_json;
  json j;
  j["feature_map"] = {{"predictors", default_predictors()},
                      {"intercept", intercept},
                      {"coefficients", std::vector<double>(coefficients.begin(), coefficients.end())}};
  auto gs = json::array();
  for (const auto& g : genotypes) {
    gs.push_back({{"name", g.name},
                  {"le", g.le},
                  {"tr", g.tr},
                  {"asymptote", g.asymptote},
                  {"growth_rate", g.growth_rate},
                  {"slope_offset", g.slope_offset},
                  {"intercept", g.intercept},
                  {"coefficients", std::vector<double>(g.coefficients.begin(), g.coefficients.end())}});
  }
  j["genotypes"] = gs;
  auto ps = json::array();
  for (const auto& p : plants) {
    ps.push_back({{"experiment", p.plant.experiment},
                  {"pot", p.plant.pot},
                  {"genotype", p.plant.genotype},
                  {"treatment", std::string(to_string(p.plant.treatment))},
                  {"ttsw", p.ttsw},
                  {"end_weight", p.end_weight},
                  {"area", p.area},
                  {"ftsw", p.ftsw},
                  {"expansion", p.expansion},
                  {"transpiration", p.transpiration}});
  }
  j["plants"] = ps;
  return j.dump(1) + "\n";
}

void write_synthetic(const SynthResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + (fs::path(dir) / name).string());
    return f;
  };
  {
    auto f = open("features.csv");
    dataset::write_features(f, result.experiment.features);
  }
  {
    auto f = open("manual_areas.csv");
    dataset::write_manual(f, result.experiment.manual);
  }
  {
    auto f = open("weights.csv");
    dataset::write_weights(f, result.experiment.weights);
  }
  {
    auto f = open("ground_truth.json");
    f << result.truth.to_json();
  }
}

}  // namespace pheno

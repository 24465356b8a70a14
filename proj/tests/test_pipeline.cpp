#include <gtest/gtest.h>

#include <cmath>

#include "pheno/dataset.hpp"
#include "pheno/error.hpp"
#include "pheno/model_io.hpp"
#include "pheno/pipeline.hpp"
#include "pheno/svg.hpp"
#include "pheno/synth.hpp"
#include "test_util.hpp"

using namespace pheno;
using testutil::at;
using testutil::plant;

namespace {

struct Fixture {
  SynthResult syn;
  std::vector<ObservationPair> pairs;
};

const Fixture& small_cohort() {
  static const Fixture f = [] {
    SynthConfig cfg;
    cfg.n_genotypes = 4;
    Fixture x{generate_experiment(cfg), {}};
    x.pairs = dataset::align_observations(x.syn.experiment.features, x.syn.experiment.manual).pairs;
    return x;
  }();
  return f;
}

}  // namespace

TEST(ModelIo, LinearRoundTrip) {
  const auto& f = small_cohort();
  for (auto scope : {ModelScope::Global, ModelScope::PerTreatment, ModelScope::PerGenotype}) {
    const AreaModel model = fit_scoped(f.pairs, scope);
    const std::string text = model_to_json(model);
    const AreaModel back = model_from_json(text);
    EXPECT_EQ(model_to_json(back), text);
    for (std::size_t i = 0; i < f.pairs.size(); i += 7) {
      EXPECT_EQ(predict_area(back, f.pairs[i].features), predict_area(model, f.pairs[i].features));
    }
  }
}

TEST(ModelIo, MlpRoundTripThroughFile) {
  const auto& f = small_cohort();
  MlpConfig cfg;
  cfg.epochs = 5;
  const AreaModel model = fit_mlp(f.pairs, cfg);
  testutil::TempDir dir("model");
  save_model(model, dir / "m.json");
  const AreaModel back = load_model(dir / "m.json");
  for (std::size_t i = 0; i < f.pairs.size(); i += 11) {
    EXPECT_EQ(predict_area(back, f.pairs[i].features), predict_area(model, f.pairs[i].features));
  }
}

TEST(ModelIo, RejectsForeignDocuments) {
  for (const char* text : {"{}", "[1,2]", "not json", R"({"format":"pheno-area-model","version":99,"kind":"linear"})",
                           R"({"format":"pheno-area-model","version":1,"kind":"forest"})"}) {
    try {
      model_from_json(text);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Format) << text;
    }
  }
}

TEST(ModelIo, UnseenScopeKeyPredictsNothing) {
  const auto& f = small_cohort();
  const AreaModel model = fit_scoped(f.pairs, ModelScope::PerGenotype);
  auto rec = f.pairs.front().features;
  rec.plant.genotype = "UNSEEN";
  EXPECT_FALSE(predict_area(model, rec));
}

TEST(Svg, DeterministicAndTagged) {
  auto make = [] {
    svg::Plot p("t<1>", "x", "y");
    p.add({"pts", {{0, 1}, {1, 3}, {2, 2}}});
    svg::Series line{"line", {{0, 0}, {2, 4}}, "#d62728", false, true, true};
    p.add(line);
    p.add_identity_line();
    return p.render();
  };
  const auto a = make();
  EXPECT_EQ(a, make());
  EXPECT_EQ(a.rfind("<?xml", 0), 0u);
  EXPECT_NE(a.find(svg::kGeneratorVersion), std::string::npos);
  EXPECT_NE(a.find("t&lt;1&gt;"), std::string::npos);
  EXPECT_NE(a.find("stroke-dasharray"), std::string::npos);
  EXPECT_NE(a.find("</svg>"), std::string::npos);

  svg::Plot empty("empty", "x", "y");
  EXPECT_NE(empty.render().find("</svg>"), std::string::npos);
  const auto two = svg::Plot::render_panels({empty, empty});
  EXPECT_NE(two.find("width=\"1040\""), std::string::npos);
}

TEST(Pipeline, DailyMedianPerPlantDay) {
  const auto p = plant(1);
  std::vector<FeatureRecord> recs;
  for (double v : {1.0, 9.0, 4.0}) recs.push_back({p, at(2, 10), testutil::features({v, 0, 0, 0})});
  recs.push_back({p, at(3, 23), testutil::features({7, 0, 0, 0})});
  const auto out = pipeline::daily_predictions(recs, at(0), [](const FeatureRecord& r) {
    return r.features.get("area_sens");
  });
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].day, 2);
  EXPECT_EQ(out[0].value, 4.0);
  EXPECT_EQ(out[1].day, 3);
  EXPECT_EQ(out[1].value, 7.0);
}

TEST(Pipeline, ManualDayWeightsKeepTheMassBalance) {
  const auto& e = small_cohort().syn.experiment;
  const auto sub = pipeline::manual_day_weights(e);
  EXPECT_LT(sub.size(), e.weights.size());
  std::map<PlantId, double> full_irr, sub_irr;
  std::map<PlantId, std::pair<double, double>> full_ends, sub_ends;
  for (const auto& w : e.weights) {
    if (full_ends.count(w.plant)) full_irr[w.plant] += w.irrigation;
    auto& ends = full_ends.try_emplace(w.plant, w.weight, w.weight).first->second;
    ends.second = w.weight;
  }
  for (const auto& w : sub) {
    if (sub_ends.count(w.plant)) sub_irr[w.plant] += w.irrigation;
    auto& ends = sub_ends.try_emplace(w.plant, w.weight, w.weight).first->second;
    ends.second = w.weight;
  }
  // every kept reading is a manual day; irrigation between kept readings is carried over
  for (const auto& [p, ends] : sub_ends) {
    const auto& fe = full_ends.at(p);
    EXPECT_EQ(ends.first, fe.first);
    const double lost_full = fe.first - fe.second + full_irr[p];
    const double lost_sub = ends.first - ends.second + sub_irr[p];
    EXPECT_LE(lost_sub, lost_full + 1e-9);
  }
}

TEST(Pipeline, EvaluateMethodsRows) {
  const auto& f = small_cohort();
  pipeline::MethodOptions opts;
  opts.with_mlp = false;
  const auto ev = pipeline::evaluate_methods(f.syn.experiment, f.pairs, opts);
  ASSERT_EQ(ev.table.size(), 2u);
  EXPECT_EQ(ev.table[0].name, "area_lm");
  EXPECT_EQ(ev.table[1].name, "area_splines");
  for (const auto& row : ev.table) {
    EXPECT_GT(row.metrics.efficiency, 0.8) << row.name;
    EXPECT_LT(row.metrics.rmse_rel, 0.2) << row.name;
  }
}

TEST(Pipeline, ResponsePointsAreNormalizedAgainstControls) {
  const auto& syn = small_cohort().syn;
  const auto data = pipeline::method_data(syn.experiment, pipeline::MeasurementMethod::Image);
  EXPECT_FALSE(data.points.empty());
  std::size_t le = 0, tr = 0;
  for (const auto& p : data.points) {
    EXPECT_EQ(p.plant.treatment, Treatment::Stressed);
    EXPECT_GE(p.ftsw, 0.0);
    EXPECT_LE(p.ftsw, 1.0);
    EXPECT_TRUE(std::isfinite(p.y));
    (p.process == Process::LE ? le : tr)++;
  }
  EXPECT_GT(le, 0u);
  EXPECT_GT(tr, 0u);
  EXPECT_EQ(data.curves.curves.size(), syn.experiment.plants.size());
}

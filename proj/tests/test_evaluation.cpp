#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "pheno/dataset.hpp"
#include "pheno/evaluation.hpp"
#include "pheno/synth.hpp"
#include "test_util.hpp"

using namespace pheno;

namespace {

std::vector<ObservationPair> synth_pairs(const SynthConfig& cfg = {}) {
  const auto e = generate_experiment(cfg).experiment;
  return dataset::align_observations(e.features, e.manual).pairs;
}

}  // namespace

TEST(Metrics, HandExample) {
  const auto m = metrics(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 4});
  EXPECT_NEAR(m.rmse, std::sqrt(1.0 / 3.0), 1e-12);
  EXPECT_NEAR(m.bias, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.efficiency, 0.5, 1e-12);
  EXPECT_NEAR(m.rmse_rel, std::sqrt(1.0 / 3.0) / 2.0, 1e-12);
  EXPECT_EQ(m.n, 3u);
}

TEST(Metrics, Limits) {
  const std::vector<double> obs{3, 5, 9, 11};
  const auto perfect = metrics(obs, obs);
  EXPECT_EQ(perfect.rmse, 0);
  EXPECT_EQ(perfect.rmse_rel, 0);
  EXPECT_EQ(perfect.bias, 0);
  EXPECT_EQ(perfect.efficiency, 1);
  const auto mean = metrics(obs, std::vector<double>(4, 7.0));
  EXPECT_NEAR(mean.efficiency, 0.0, 1e-15);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(metrics(std::vector<double>{1, 2}, std::vector<double>{1}), Error);
  EXPECT_THROW(metrics(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}), Error);
}

TEST(Pearson, Examples) {
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_NEAR(pearson_r(x, x), 1.0, 1e-15);
  EXPECT_NEAR(pearson_r(x, std::vector<double>{5, 3, 1, -1}), -1.0, 1e-15);
  EXPECT_NEAR(pearson_r(x, std::vector<double>{1, 3, 2, 4}), 0.8, 1e-12);
  EXPECT_THROW(pearson_r(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
}

TEST(Cv, Parse) {
  EXPECT_EQ(parse_cv("none").kind, CvScheme::Kind::None);
  EXPECT_EQ(parse_cv("lopo").kind, CvScheme::Kind::LeaveOnePlantOut);
  const auto k = parse_cv("kfold:7");
  EXPECT_EQ(k.kind, CvScheme::Kind::PlantKFold);
  EXPECT_EQ(k.folds, 7);
  EXPECT_EQ(to_string(k), "kfold:7");
  EXPECT_THROW(parse_cv("kfold:1"), Error);
  EXPECT_THROW(parse_cv("bootstrap"), Error);
}

TEST(Cv, TestPlantsNeverTrain) {
  SynthConfig cfg;
  cfg.n_genotypes = 3;
  const auto pairs = synth_pairs(cfg);
  for (const auto& cv : {CvScheme::leave_one_plant_out(), CvScheme::plant_kfold(4)}) {
    std::size_t tested = 0;
    cross_validate(pairs, cv, [&](std::span<const ObservationPair> train, std::span<const ObservationPair> test) {
      std::set<PlantId> tr;
      for (const auto& p : train) tr.insert(p.plant);
      for (const auto& p : test) EXPECT_FALSE(tr.count(p.plant)) << p.plant.key();
      tested += test.size();
      return PredictionColumn(test.size(), 0.0);
    });
    EXPECT_EQ(tested, pairs.size());
  }
}

TEST(MetricsByMethod, DistinctSubsetsReportDistinctN) {
  const auto pairs = synth_pairs();
  PredictionColumn full, partial;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    full.push_back(pairs[i].observed_area * 1.05);
    partial.push_back(i % 10 == 0 ? std::nullopt : std::optional<double>(pairs[i].observed_area));
  }
  const auto rows = metrics_by_method(pairs, {{"b_partial", partial}, {"a_full", full}});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].name, "a_full");
  EXPECT_EQ(rows[0].metrics.n, pairs.size());
  EXPECT_LT(rows[1].metrics.n, pairs.size());
  EXPECT_NEAR(rows[0].metrics.bias / 0.05, [&] {
    double s = 0;
    for (const auto& p : pairs) s += p.observed_area;
    return s / pairs.size();
  }(), 1e-6);
}

TEST(MetricsByScope, GlobalInSampleHasZeroBias) {
  const auto pairs = synth_pairs();
  const auto rows = metrics_by_scope(pairs, {ModelScope::Global}, CvScheme::none());
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].name, "area_global");
  EXPECT_NEAR(rows[0].metrics.bias, 0.0, 1e-9 * rows[0].metrics.rmse);
}

TEST(MetricsByScope, GenotypeOffsetsFavourGenotypeScope) {
  const auto pairs = synth_pairs();
  const auto rows = metrics_by_scope(pairs, {ModelScope::Global, ModelScope::PerGenotype},
                                     CvScheme::leave_one_plant_out());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].name, "area_genotype");
  EXPECT_LE(rows[0].metrics.rmse, rows[1].metrics.rmse);
}

TEST(MetricsByScope, TreatmentMatchesGlobalWithoutTreatmentEffect) {
  SynthConfig cfg;
  cfg.genotype_offset = 0;
  cfg.treatment_offset = 0;
  const auto pairs = synth_pairs(cfg);
  const auto rows = metrics_by_scope(pairs, {ModelScope::Global, ModelScope::PerTreatment},
                                     CvScheme::leave_one_plant_out());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(rows[1].metrics.rmse / rows[0].metrics.rmse, 1.0, 0.05);
}

TEST(MetricsTable, Header) {
  std::ostringstream out;
  write_metrics_table(out, {{"area_lm", MetricSet{3, 1, 0.5, 0.25, 0.9}}});
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "method,n,rmse,rmse_rel,bias,efficiency");
  EXPECT_NE(out.str().find("area_lm,3,"), std::string::npos);
}

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pheno/dataset.hpp"
#include "pheno/error.hpp"
#include "pheno/synth.hpp"
#include "pheno/water_balance.hpp"
#include "test_util.hpp"

using namespace pheno;
using testutil::at;
using testutil::plant;

namespace {

std::vector<WeightRecord> series(std::initializer_list<double> w, std::vector<double> irrigation = {}) {
  std::vector<WeightRecord> out;
  int d = 0;
  for (double x : w) {
    const double irr = d < static_cast<int>(irrigation.size()) ? irrigation[d] : 0.0;
    out.push_back({plant(1, "G1", Treatment::Stressed), at(d, 8), x, irr});
    ++d;
  }
  return out;
}

/// sum T dt - (w_first - w_last + irrigation after the first record)
double mass_residual(std::span<const WeightRecord> w) {
  const auto t = transpiration_series(w);
  double lhs = 0, irr = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    lhs += t[i] * days_between(w[i].time, w[i + 1].time);
    irr += w[i + 1].irrigation;
  }
  return lhs - (w.front().weight - w.back().weight + irr);
}

}  // namespace

TEST(Transpiration, Arithmetic) {
  EXPECT_EQ(transpiration_series(series({5000, 4900, 4850})), (std::vector<double>{100, 50}));
  EXPECT_EQ(transpiration_series(series({4800, 4950}, {0, 200})), (std::vector<double>{50}));
  EXPECT_EQ(transpiration_series(series({5000, 4900}), 10.0), (std::vector<double>{90}));
}

TEST(Transpiration, Errors) {
  try {
    transpiration_series(series({5000}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewRecords);
  }
  auto w = series({5000, 4900});
  w[1].time = w[0].time;
  try {
    transpiration_series(w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonMonotoneTime);
  }
}

TEST(Transpiration, DailyAggregationKeepsLastReading) {
  auto w = series({5000, 4900});
  w.insert(w.begin() + 1, {w[0].plant, at(0, 20), 4950, 30});
  const auto daily = daily_weights(w);
  ASSERT_EQ(daily.size(), 2u);
  EXPECT_EQ(daily[0].weight, 4950);
  EXPECT_EQ(daily[0].irrigation, 30);
}

TEST(WaterSeries, FtswArithmeticAndEndpoints) {
  const auto w = series({5000, 4500, 4000});
  const auto s = compute_water_series(w, at(0));
  EXPECT_EQ(s.ttsw, 1000);
  EXPECT_EQ(s.end_weight, 4000);
  ASSERT_EQ(s.statuses.size(), 3u);
  EXPECT_EQ(s.statuses[0].ftsw, 1.0);
  EXPECT_EQ(s.statuses[1].ftsw, 0.5);
  EXPECT_EQ(s.statuses[1].atsw, 500);
  EXPECT_EQ(s.statuses[2].ftsw, 0.0);
  EXPECT_FALSE(s.statuses[2].transpiration);
}

TEST(WaterSeries, NeverDriedIsZeroTtsw) {
  try {
    compute_water_series(series({5000, 5000, 5000}), at(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroTtsw);
  }
}

TEST(NormalizedRate, Examples) {
  const std::vector<double> c{80, 120};
  EXPECT_EQ(normalized_daily_rate(50, c), 0.5);
  EXPECT_EQ(normalized_daily_rate(100, c), 1.0);
  EXPECT_THROW(normalized_daily_rate(50, std::vector<double>{}), Error);
  EXPECT_THROW(normalized_daily_rate(50, std::vector<double>{0, 0}), Error);
}

TEST(WaterTable, SyntheticCohortMatchesTruth) {
  const auto syn = generate_experiment({});
  const auto table = compute_water_table(syn.experiment);
  EXPECT_TRUE(table.failures.empty());
  ASSERT_EQ(table.series.size(), 96u);
  for (const auto& s : table.series) {
    const auto& truth = syn.truth.plant(s.plant.pot);
    // recovered transpiration equals the generator's daily water use
    for (const auto& st : s.statuses) {
      if (!st.transpiration) continue;
      EXPECT_NEAR(*st.transpiration, truth.transpiration[static_cast<std::size_t>(st.day_index)], 1e-6);
    }
    if (s.plant.treatment == Treatment::Control) {
      for (const auto& st : s.statuses) EXPECT_EQ(st.ftsw, 1.0);
      continue;
    }
    EXPECT_NEAR(s.ttsw, truth.ttsw, 0.05 * truth.ttsw) << s.plant.key();
    for (std::size_t i = 1; i < s.statuses.size(); ++i) {
      EXPECT_LE(s.statuses[i].ftsw, s.statuses[i - 1].ftsw);
      EXPECT_GE(s.statuses[i].ftsw, 0.0);
    }
    EXPECT_LT(s.statuses.back().ftsw, 0.1);
  }
}

TEST(MassBalance, SyntheticAndParsedSeries) {
  const auto e = generate_experiment({}).experiment;
  std::ostringstream out;
  dataset::write_weights(out, e.weights);
  std::istringstream in(out.str());
  const auto parsed = dataset::parse_weights(in, e.plants);
  for (const auto* set : {&e.weights, &parsed}) {
    std::map<PlantId, std::vector<WeightRecord>> by_plant;
    for (const auto& w : *set) by_plant[w.plant].push_back(w);
    for (const auto& [p, w] : by_plant) EXPECT_NEAR(mass_residual(w), 0.0, 1e-9) << p.key();
  }
}

TEST(MassBalance, WithIrrigation) {
  EXPECT_NEAR(mass_residual(series({5000, 4900, 5050, 4980}, {0, 0, 200, 0})), 0.0, 1e-9);
}

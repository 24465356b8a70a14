#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "pheno/error.hpp"
#include "pheno/random.hpp"
#include "pheno/response_fit.hpp"

using namespace pheno;

namespace {

std::vector<ResponsePoint> make_points(double a, int n, double sigma, Rng& rng, const std::string& g = "G",
                                       Process proc = Process::LE) {
  std::vector<ResponsePoint> pts;
  for (int i = 0; i < n; ++i) {
    const double f = (i + 0.5) / n;
    pts.push_back({g, proc, f, response_curve(a, f) + sigma * rng.normal(), static_cast<double>(i), {}});
  }
  return pts;
}

ResponseFit fit(const std::string& g, Process p, double a) { return {p, g, a, 0.1, 0.1, 10}; }

}  // namespace

TEST(ResponseCurve, ClosedForm) {
  for (double a : {-12.0, -4.55, -1.0, 2.0}) EXPECT_EQ(response_curve(a, 0.0), 0.0);
  EXPECT_NEAR(response_curve(-4.55, 0.5), 0.8136, 1e-4);
  EXPECT_GT(response_curve(-8.83, 0.2), response_curve(-2.85, 0.2));
}

TEST(ResponseCurve, SlopeMatchesFiniteDifferences) {
  for (double a = -12; a <= -1; a += 0.5) {
    for (int k = 1; k <= 10; ++k) {
      const double f = 0.1 * k, h = 1e-6;
      const double fd = (response_curve(a + h, f) - response_curve(a - h, f)) / (2 * h);
      const double an = response_curve_slope(a, f);
      EXPECT_LE(std::abs(fd - an), 1e-6 * std::max(std::abs(an), 1e-3)) << a << " " << f;
    }
  }
}

TEST(FitThreshold, NoiselessRecovery) {
  Rng rng(0);
  for (double a : {-3.40, -2.85, -8.83}) {
    const auto r = fit_threshold(make_points(a, 30, 0.0, rng));
    EXPECT_NEAR(r.estimate, a, 1e-6);
    EXPECT_NEAR(r.rmse, 0.0, 1e-6);
    EXPECT_EQ(r.n, 30u);
  }
}

TEST(FitThreshold, MatchesGridOracleUnderNoise) {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = make_points(-3.40, 40, 0.1, rng);
    Eigen::ArrayXd f(40), y(40);
    for (int i = 0; i < 40; ++i) {
      f(i) = pts[i].ftsw;
      y(i) = pts[i].y;
    }
    const double ref = oracle::threshold_grid_search(f, y, -12, -1, 1e-4);
    EXPECT_NEAR(fit_threshold(pts).estimate, ref, 1e-3);
  }
}

TEST(FitThreshold, SeShrinksWithMorePoints) {
  Rng rng(2);
  double se30 = 0, se60 = 0;
  for (int rep = 0; rep < 50; ++rep) {
    se30 += fit_threshold(make_points(-3.4, 30, 0.1, rng)).se;
    se60 += fit_threshold(make_points(-3.4, 60, 0.1, rng)).se;
  }
  EXPECT_NEAR(se30 / se60, std::sqrt(2.0), 0.2 * std::sqrt(2.0));
}

TEST(FitThreshold, Preconditions) {
  Rng rng(3);
  auto few = make_points(-3, 4, 0.0, rng);
  try {
    fit_threshold(few);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewPoints);
  }
  auto narrow = make_points(-3, 10, 0.0, rng);
  for (auto& p : narrow) p.ftsw = 0.5 + 0.01 * p.day;
  try {
    fit_threshold(narrow);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientSpan);
  }
}

TEST(FitAll, GroupsOrderAndExclusions) {
  Rng rng(4);
  std::vector<ResponsePoint> pts;
  const double le[] = {-2.85, -4.55, -3.40};
  for (int g = 0; g < 3; ++g) {
    auto a = make_points(le[g], 20, 0.02, rng, "G" + std::to_string(g), Process::LE);
    auto b = make_points(le[g] * 2, 20, 0.02, rng, "G" + std::to_string(g), Process::TR);
    pts.insert(pts.end(), a.begin(), a.end());
    pts.insert(pts.end(), b.begin(), b.end());
  }
  auto tiny = make_points(-3, 3, 0.0, rng, "TINY");
  pts.insert(pts.end(), tiny.begin(), tiny.end());

  const auto r = fit_all(pts);
  ASSERT_EQ(r.fits.size(), 6u);
  EXPECT_EQ(r.excluded.count("LE/TINY"), 1u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r.fits[i].process, Process::LE);
  EXPECT_EQ(r.fits[0].genotype, "G0");  // -2.85 is the largest estimate
  EXPECT_EQ(r.fits[2].genotype, "G1");
  for (std::size_t i = 1; i < 3; ++i) EXPECT_GE(r.fits[i - 1].estimate, r.fits[i].estimate);

  std::ostringstream out;
  write_fits(out, r.fits);
  std::istringstream in(out.str());
  const auto back = read_fits(in);
  ASSERT_EQ(back.size(), r.fits.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].genotype, r.fits[i].genotype);
    EXPECT_EQ(back[i].estimate, r.fits[i].estimate);
    EXPECT_EQ(back[i].se, r.fits[i].se);
  }
}

TEST(Compare, IdentityAndShift) {
  std::vector<ResponseFit> a, b;
  const double v[] = {-2.9, -3.4, -4.1, -4.5, -3.0};
  for (int g = 0; g < 5; ++g) {
    a.push_back(fit("G" + std::to_string(g), Process::LE, v[g]));
    b.push_back(fit("G" + std::to_string(g), Process::LE, v[g] - 0.5));
  }
  const auto same = compare_methods(a, a);
  ASSERT_EQ(same.processes.size(), 1u);
  EXPECT_NEAR(same.processes[0].r, 1.0, 1e-12);
  EXPECT_NEAR(same.processes[0].mean_difference, 0.0, 1e-12);
  const auto shifted = compare_methods(a, b);
  EXPECT_NEAR(shifted.processes[0].r, 1.0, 1e-12);
  EXPECT_NEAR(shifted.processes[0].mean_difference, -0.5, 1e-12);
  EXPECT_FALSE(shifted.processes[0].single_genotype_driven);
  EXPECT_NE(shifted.to_json().find("\"mean_difference\""), std::string::npos);
}

TEST(Compare, OutlierGenotypeIsFlagged) {
  std::vector<ResponseFit> a, b;
  const double x[] = {-3.0, -3.2, -3.4, -3.6, -3.8, -4.0, -12.0};
  const double y[] = {-3.6, -3.0, -3.8, -3.2, -4.0, -3.4, -12.5};
  for (int g = 0; g < 7; ++g) {
    a.push_back(fit("G" + std::to_string(g), Process::TR, x[g]));
    b.push_back(fit("G" + std::to_string(g), Process::TR, y[g]));
  }
  const auto r = compare_methods(a, b);
  const auto& c = r.processes[0];
  EXPECT_GT(c.r, 0.9);
  ASSERT_TRUE(c.loo_genotype);
  EXPECT_EQ(*c.loo_genotype, "G6");
  EXPECT_TRUE(c.single_genotype_driven);
}

TEST(Compare, InsufficientOverlap) {
  std::vector<ResponseFit> a{fit("A", Process::LE, -3), fit("B", Process::LE, -4), fit("C", Process::LE, -5)};
  std::vector<ResponseFit> b{fit("A", Process::LE, -3), fit("B", Process::LE, -4), fit("D", Process::LE, -5)};
  try {
    compare_methods(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientOverlap);
  }
}

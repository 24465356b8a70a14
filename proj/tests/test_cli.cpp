#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pheno/cli.hpp"
#include "pheno/dataset.hpp"
#include "pheno/synth.hpp"
#include "test_util.hpp"

using testutil::run_cli;
using testutil::slurp;
using testutil::TempDir;
namespace fs = std::filesystem;

namespace {

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  const auto help = run_cli({"--help"});
  EXPECT_EQ(help.code, pheno::cli::kExitOk);
  for (const char* sub : {"ingest", "synth", "fit-area", "predict", "smooth", "water", "evaluate", "fit-response",
                          "compare", "report"}) {
    EXPECT_NE(help.out.find(sub), std::string::npos) << sub;
  }
  const auto sub_help = run_cli({"report", "--help"});
  EXPECT_EQ(sub_help.code, 0);
  EXPECT_NE(sub_help.out.find("--scope-cv"), std::string::npos);

  EXPECT_EQ(run_cli({}).code, pheno::cli::kExitUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, pheno::cli::kExitUsage);
  EXPECT_EQ(run_cli({"synth", "--bogus"}).code, pheno::cli::kExitUsage);
  EXPECT_EQ(run_cli({"fit-area", "--in", "/nonexistent/dir"}).code, pheno::cli::kExitUsage);

  TempDir out("usage");
  EXPECT_EQ(run_cli({"synth", "--out", out.str(), "--genotypes", "0"}).code, pheno::cli::kExitUsage);
}

TEST(Cli, SynthThenReportWritesEveryArtifact) {
  TempDir data("rep_data"), out("rep_out");
  ASSERT_EQ(run_cli({"synth", "--seed", "42", "--out", data.str()}).code, 0);
  const auto r = run_cli({"report", "--in", data.str(), "--out", out.str(), "--no-mlp"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"table1.csv", "table2.csv", "table3.csv", "fig4.svg", "fig5.svg", "report.json"}) {
    EXPECT_TRUE(fs::exists(out.path() / f)) << f;
  }
  int fig3 = 0;
  for (const auto& entry : fs::directory_iterator(out.path())) {
    if (entry.path().filename().string().rfind("fig3_", 0) == 0) ++fig3;
  }
  EXPECT_EQ(fig3, 16);
  EXPECT_EQ(first_line(out.path() / "table1.csv"), "method,n,rmse,rmse_rel,bias,efficiency");
  EXPECT_EQ(first_line(out.path() / "table2.csv"), "method,n,rmse,rmse_rel,bias,efficiency");
  EXPECT_EQ(first_line(out.path() / "table3.csv"), "process,genotype,estimate,se,rmse,n");
}

TEST(Cli, StepwiseChain) {
  TempDir data("chain_data"), out("chain_out");
  ASSERT_EQ(run_cli({"synth", "--seed", "5", "--genotypes", "4", "--out", data.str()}).code, 0);

  const auto ingest = run_cli({"ingest", "--in", data.str(), "--out", out.str()});
  EXPECT_EQ(ingest.code, 0) << ingest.err;
  EXPECT_TRUE(fs::exists(out.path() / "pairs.csv"));
  EXPECT_TRUE(fs::exists(out.path() / "validation.json"));

  const auto fit = run_cli({"fit-area", "--in", data.str(), "--out", out.str()});
  ASSERT_EQ(fit.code, 0) << fit.err;
  const auto model = (out.path() / "model.json").string();
  const auto pred = run_cli({"predict", "--in", data.str(), "--model", model, "--out", out.str()});
  ASSERT_EQ(pred.code, 0) << pred.err;
  EXPECT_EQ(first_line(out.path() / "predictions.csv"), "experiment,pot,genotype,treatment,day,raw_area");

  const auto smooth =
      run_cli({"smooth", "--predictions", (out.path() / "predictions.csv").string(), "--out", out.str()});
  ASSERT_EQ(smooth.code, 0) << smooth.err;
  EXPECT_EQ(first_line(out.path() / "curves.csv"),
            "experiment,pot,genotype,treatment,day,raw,smoothed,monotone,rate");

  const auto water = run_cli({"water", "--in", data.str(), "--out", out.str()});
  ASSERT_EQ(water.code, 0) << water.err;
  EXPECT_EQ(first_line(out.path() / "water.csv"),
            "experiment,pot,genotype,treatment,day,weight,transpiration,atsw,ftsw,ttsw");

  const auto eval = run_cli({"evaluate", "--in", data.str(), "--out", out.str(), "--no-mlp", "--no-plot"});
  ASSERT_EQ(eval.code, 0) << eval.err;
  EXPECT_EQ(first_line(out.path() / "table1.csv"), "method,n,rmse,rmse_rel,bias,efficiency");

  TempDir manual("chain_manual");
  ASSERT_EQ(run_cli({"fit-response", "--in", data.str(), "--out", out.str()}).code, 0);
  ASSERT_EQ(run_cli({"fit-response", "--in", data.str(), "--method", "manual", "--out", manual.str()}).code, 0);
  const auto cmp = run_cli({"compare", "--a", (manual.path() / "table3.csv").string(), "--b",
                            (out.path() / "table3.csv").string(), "--out", out.str()});
  ASSERT_EQ(cmp.code, 0) << cmp.err;
  EXPECT_TRUE(fs::exists(out.path() / "comparison.json"));
  EXPECT_TRUE(fs::exists(out.path() / "fig5.svg"));
}

TEST(Cli, GenotypeScopeWithThreeRowsNamesTheGenotype) {
  TempDir data("small_geno"), out("small_geno_out");
  pheno::SynthConfig cfg;
  cfg.n_genotypes = 3;
  auto syn = pheno::generate_experiment(cfg);
  auto& manual = syn.experiment.manual;
  int kept = 0;
  std::erase_if(manual, [&](const pheno::ManualAreaRecord& m) { return m.plant.genotype == "G02" && ++kept > 3; });
  pheno::write_synthetic(syn, data.str());

  const auto r = run_cli({"fit-area", "--in", data.str(), "--out", out.str(), "--scope", "genotype"});
  EXPECT_EQ(r.code, pheno::cli::kExitValidation);
  EXPECT_NE(r.err.find("G02"), std::string::npos) << r.err;
}

TEST(Cli, ValidationFailureExitsOne) {
  TempDir data("bad"), out("bad_out");
  ASSERT_EQ(run_cli({"synth", "--genotypes", "2", "--out", data.str()}).code, 0);
  std::string features = slurp(data.path() / "features.csv");
  const auto pos = features.find("SYN01,1,G01,Control");
  ASSERT_NE(pos, std::string::npos);
  features.replace(pos, 19, "SYN01,1,G02,Control");
  testutil::spit(data.path() / "features.csv", features);
  const auto r = run_cli({"ingest", "--in", data.str(), "--out", out.str()});
  EXPECT_EQ(r.code, pheno::cli::kExitValidation);
  EXPECT_NE(r.out.find("inconsistent_plant"), std::string::npos);

  testutil::spit(data.path() / "manual_areas.csv", "experiment,pot,genotype,treatment,date\n");
  const auto m = run_cli({"ingest", "--in", data.str(), "--out", out.str()});
  EXPECT_EQ(m.code, pheno::cli::kExitValidation);
  EXPECT_NE(m.err.find("total_area_mm2"), std::string::npos);
  EXPECT_NE(m.err.find("manual_areas.csv"), std::string::npos);
}

TEST(Cli, ConfigFileSuppliesFlagsAndCommandLineWins) {
  TempDir cfgdir("cfg"), a("cfg_a"), b("cfg_b"), c("cfg_c");
  const auto conf = (cfgdir.path() / "run.conf").string();
  testutil::spit(conf, "# synthetic run\nseed = 7\ngenotypes=2\n--days = 6\n");

  ASSERT_EQ(run_cli({"synth", "--config", conf, "--out", a.str()}).code, 0);
  ASSERT_EQ(run_cli({"synth", "--seed", "7", "--genotypes", "2", "--days", "6", "--out", b.str()}).code, 0);
  EXPECT_EQ(slurp(a.path() / "features.csv"), slurp(b.path() / "features.csv"));

  ASSERT_EQ(run_cli({"synth", "--config", conf, "--seed", "8", "--out", c.str()}).code, 0);
  EXPECT_NE(slurp(a.path() / "features.csv"), slurp(c.path() / "features.csv"));
  TempDir d("cfg_d");
  ASSERT_EQ(run_cli({"synth", "--seed", "8", "--genotypes", "2", "--days", "6", "--out", d.str()}).code, 0);
  EXPECT_EQ(slurp(c.path() / "features.csv"), slurp(d.path() / "features.csv"));

  testutil::spit(conf, "colour = blue\n");
  EXPECT_EQ(run_cli({"synth", "--config", conf, "--out", a.str()}).code, pheno::cli::kExitUsage);
  EXPECT_EQ(run_cli({"synth", "--config", (cfgdir.path() / "missing.conf").string()}).code,
            pheno::cli::kExitUsage);
}

TEST(Cli, ConfigFileBooleanFlags) {
  TempDir data("cfgb_data"), out("cfgb_out"), cfgdir("cfgb");
  ASSERT_EQ(run_cli({"synth", "--genotypes", "3", "--out", data.str()}).code, 0);
  const auto conf = (cfgdir.path() / "eval.conf").string();
  testutil::spit(conf, "mlp = false\nplot = no\ncv = lopo\n");
  ASSERT_EQ(run_cli({"evaluate", "--config", conf, "--in", data.str(), "--out", out.str()}).code, 0);
  EXPECT_FALSE(fs::exists(out.path() / "fig4.svg"));
  EXPECT_EQ(slurp(out.path() / "table1.csv").find("area_nn"), std::string::npos);
}

TEST(Cli, EnvironmentSetsDefaultOutputDirectory) {
  TempDir env("env");
  ::setenv(pheno::cli::kOutDirEnv, env.str().c_str(), 1);
  const auto r = run_cli({"synth", "--genotypes", "1", "--days", "4"});
  ::unsetenv(pheno::cli::kOutDirEnv);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(env.path() / "features.csv"));
  EXPECT_TRUE(fs::exists(env.path() / "ground_truth.json"));
}

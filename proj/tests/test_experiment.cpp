// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "naga/config.hpp"
#include "naga/experiment.hpp"

using naga::ExperimentConfig;
using naga::ReportFormat;
using naga::ResultRow;

namespace {

ResultRow row(const std::string& label, double mse, double mae, double rmse, std::size_t repeats = 1) {
  ResultRow r;
  r.label = label;
  r.epochs = {12.0, 0.0};
  r.seconds = {3.14159, 0.0};
  r.mse = {mse, 0.0};
  r.mae = {mae, 0.0};
  r.rmse = {rmse, 0.0};
  r.repeats = repeats;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_synthetic(const std::filesystem::path& out) {
  ExperimentConfig cfg = naga::parse_experiment(
      "synth_rows = 240\nsynth_window = 6\nsynth_d_in = 2\n"
      "d_hidden = 4\nd_inner = 4\nd_state = 2\nh_head = 2\nkernel = 2\npred_len = 1\n"
      "max_epochs = 3\nbatch_size = 16\nrepeats = 2\ntiming = false\nverbose = false\n");
  cfg.out = out;
  return cfg;
}

}  // namespace

TEST(Report, RelativeChangeSign) {
  EXPECT_DOUBLE_EQ(naga::relative_change(2.0, 1.0), 50.0);
  EXPECT_DOUBLE_EQ(naga::relative_change(2.0, 3.0), -50.0);
  EXPECT_DOUBLE_EQ(naga::relative_change(2.0, 2.0), 0.0);
}

TEST(Report, AggregateIsPopulationStd) {
  const auto a = naga::aggregate({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(a.mean, 2.0);
  EXPECT_NEAR(a.std, std::sqrt(2.0 / 3.0), 1e-15);
}

TEST(Report, FinalizeMarksBaselineAndBest) {
  std::vector<ResultRow> rows{row("Base", 1.0, 0.8, 1.0), row("A", 1.21, 1.0, 1.1), row("B", 0.81, 0.6, 0.9)};
  naga::finalize_rows(rows, 0);
  EXPECT_TRUE(rows[0].baseline);
  EXPECT_EQ(rows[0].d_rmse_pct, 0.0);
  EXPECT_NEAR(rows[1].d_rmse_pct, -10.0, 1e-12);
  EXPECT_NEAR(rows[1].d_mae_pct, -25.0, 1e-12);
  EXPECT_NEAR(rows[2].d_rmse_pct, 10.0, 1e-12);
  EXPECT_TRUE(rows[2].best);
  EXPECT_FALSE(rows[0].best);
}

TEST(Report, CsvColumnsAndPrecision) {
  std::vector<ResultRow> rows{row("Base", 1.0, 0.8, 1.0), row("A", 1.21, 1.0, 1.1)};
  naga::finalize_rows(rows, 0);
  const std::string csv = naga::format_report(rows, ReportFormat::kCsv);
  std::istringstream in(csv);
  std::string header, base, a;
  std::getline(in, header);
  std::getline(in, base);
  std::getline(in, a);
  EXPECT_EQ(header.rfind("Configuration,Epochs,Runtime[s],MSE,MAE,RMSE,ΔRMSE%,ΔMAE%", 0), 0u);
  EXPECT_EQ(base.rfind("Base,12,3.14,1.0000,0.8000,1.0000,0.00,0.00,", 0), 0u) << base;
  EXPECT_EQ(a.rfind("A,12,3.14,1.2100,1.0000,1.1000,-10.00,-25.00,", 0), 0u) << a;
}

TEST(Report, MarkdownBaselineShowsDash) {
  std::vector<ResultRow> rows{row("Base", 1.0, 0.8, 1.0), row("A", 0.81, 0.6, 0.9)};
  naga::finalize_rows(rows, 0);
  const std::string md = naga::format_report(rows, ReportFormat::kMarkdown);
  EXPECT_NE(md.find("| Configuration | Epochs | Runtime[s] | MSE | MAE | RMSE | ΔRMSE% | ΔMAE% |"),
            std::string::npos);
  EXPECT_NE(md.find("| Base (baseline) | 12 | 3.14 | 1.0000 | 0.8000 | 1.0000 | – | – |"), std::string::npos)
      << md;
  EXPECT_NE(md.find("| **A** |"), std::string::npos) << md;
  EXPECT_NE(md.find("| 10.00 | 25.00 |"), std::string::npos) << md;
}

TEST(Report, MarkdownShowsSpreadForRepeats) {
  ResultRow r = row("Base", 1.0, 0.8, 1.0, 3);
  r.mse.std = 0.05;
  std::vector<ResultRow> rows{r};
  naga::finalize_rows(rows, 0);
  EXPECT_NE(naga::format_report(rows, ReportFormat::kMarkdown).find("1.0000 ± 0.0500"), std::string::npos);
}

TEST(Report, CsvRoundTrip) {
  std::vector<ResultRow> rows{row("Base, quoted", 1.0, 0.8, 1.0, 2), row("B", 0.81, 0.6, 0.9, 2)};
  naga::finalize_rows(rows, 0);
  const auto back = naga::read_report_csv(naga::format_report(rows, ReportFormat::kCsv));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].label, "Base, quoted");
  EXPECT_TRUE(back[0].baseline);
  EXPECT_TRUE(back[1].best);
  EXPECT_DOUBLE_EQ(back[1].rmse.mean, 0.9);
  EXPECT_DOUBLE_EQ(back[1].d_rmse_pct, 10.0);
  EXPECT_EQ(back[1].repeats, 2u);
  EXPECT_THROW(naga::read_report_csv("nope\n"), std::invalid_argument);
}

TEST(Experiment, ConfigErrorsAndRoundTrip) {
  EXPECT_THROW(naga::parse_experiment("bogus_key = 1\n"), naga::ConfigError);
  EXPECT_THROW(naga::parse_experiment("d_hidden = 0\n"), naga::ConfigError);
  EXPECT_THROW(naga::parse_experiment("split = 0.5,0.2,0.2\n"), naga::ConfigError);
  try {
    naga::parse_experiment("repeats = 2\n\nbogus_key = 1\n", "x.cfg");
    FAIL();
  } catch (const naga::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
  ExperimentConfig cfg = naga::parse_experiment("split = 0.6,0.2,0.2\npred_len = 24\nrepeats = 3\nlr = 0.002\n");
  EXPECT_EQ(cfg.split.train, 0.6);
  EXPECT_EQ(cfg.model.pred_len, 24u);
  const ExperimentConfig again = naga::parse_experiment(naga::to_key_values(cfg));
  EXPECT_EQ(naga::to_key_values(cfg), naga::to_key_values(again));
}

TEST(Experiment, LookbackDefaults) {
  ExperimentConfig cfg;
  EXPECT_EQ(cfg.resolved_lookback(), cfg.synth.window);
  cfg.dataset = "x.csv";
  EXPECT_EQ(cfg.resolved_lookback(), 96u);
  cfg.lookback = 12;
  EXPECT_EQ(cfg.resolved_lookback(), 12u);
}

TEST(Experiment, DataPreparationSetsInputWidth) {
  ExperimentConfig cfg = tiny_synthetic({});
  const auto prepared = naga::prepare_data(cfg);
  EXPECT_EQ(cfg.model.d_in, 3u);
  EXPECT_EQ(prepared.data.features(), 3u);
  EXPECT_FALSE(prepared.ingestion.has_value());
  ExperimentConfig bad = naga::parse_experiment("synth_d_in = 2\nd_in = 7\n");
  EXPECT_THROW(naga::prepare_data(bad), naga::ConfigError);
}

TEST(Experiment, AblationGrid) {
  const auto grid = naga::ablation_grid(naga::ModelConfig{});
  ASSERT_EQ(grid.size(), 5u);
  EXPECT_EQ(grid[0].label, "Baseline");
  EXPECT_FALSE(grid[1].model.use_vedic);
  EXPECT_EQ(grid[2].model.num_cells, 1u);
  EXPECT_FALSE(grid[3].model.use_flip);
  EXPECT_EQ(grid[4].model.mask_prob, 0.1);
}

TEST(Experiment, TrainWritesArtifactsDeterministically) {
  const auto root = std::filesystem::temp_directory_path() / "naga_exp_test";
  std::filesystem::remove_all(root);
  naga::cmd_train(tiny_synthetic(root / "a"));
  naga::cmd_train(tiny_synthetic(root / "b"));
  for (const char* f : {"results.csv", "results.md"}) {
    ASSERT_TRUE(std::filesystem::exists(root / "a" / f)) << f;
    EXPECT_EQ(slurp(root / "a" / f), slurp(root / "b" / f)) << f;
  }
  EXPECT_TRUE(std::filesystem::exists(root / "a" / "checkpoints" / "naga_seed42.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(root / "a" / "checkpoints" / "naga_seed43.ckpt"));
  const auto rows = naga::read_report_csv(slurp(root / "a" / "results.csv"));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].repeats, 2u);
  EXPECT_GT(rows[0].mse.mean, 0.0);
  std::filesystem::remove_all(root);
}

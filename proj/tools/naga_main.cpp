// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "naga/checkpoint.hpp"
#include "naga/config.hpp"
#include "naga/data.hpp"
#include "naga/experiment.hpp"
#include "naga/kernels.hpp"
#include "naga/trainer.hpp"
#include "naga/verify.hpp"

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kConfigError = 2;

void apply_thread_cap() {
  const char* env = std::getenv("NAGA_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw naga::ConfigError("NAGA_THREADS must be a positive integer, got '" + std::string(env) + "'");
  naga::kernels::set_max_threads(static_cast<int>(n));
}

naga::ExperimentConfig load(const std::string& path, const std::vector<std::string>& overrides) {
  naga::ExperimentConfig cfg = naga::load_experiment(path);
  for (const std::string& o : overrides) naga::apply_experiment_key(cfg, naga::parse_override(o));
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Naga forecaster: training, ablations and verification"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "Train with repeated seeds and write a results table");
  train->add_option("--config", config_path, "key = value configuration file")->required();
  auto* seed_opt = train->add_option("--seed", seed, "base seed (repeat i uses seed + i)");
  auto* train_out = train->add_option("--out", out_dir, "output directory");
  train->add_option("--set", overrides, "override a configuration key (key=value)");

  auto* ablate = app.add_subcommand("ablate", "Run the baseline and the four ablation variants");
  ablate->add_option("--config", config_path, "key = value configuration file")->required();
  ablate->add_option("--out", out_dir, "output directory")->required();
  ablate->add_option("--set", overrides, "override a configuration key (key=value)");

  bool json = false, quick = false;
  auto* verify = app.add_subcommand("verify", "Run the gradient and theory checks");
  verify->add_flag("--json", json, "print a machine-readable summary");
  verify->add_flag("--quick", quick, "skip the training comparison");

  std::string kind = "bilinear", synth_out;
  naga::SynthSpec spec;
  std::size_t position = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic series as CSV");
  synth->add_option("--kind", kind, "generator")->check(CLI::IsMember({"bilinear"}));
  synth->add_option("--out", synth_out, "CSV path")->required();
  synth->add_option("--rows", spec.rows, "rows");
  synth->add_option("--window", spec.window, "window length T");
  synth->add_option("--dim", spec.d_in, "input features");
  synth->add_option("--rank", spec.rank, "rank of the bilinear form");
  synth->add_option("--noise", spec.noise, "noise std");
  synth->add_option("--linear-scale", spec.linear_scale, "scale of the linear part");
  synth->add_option("--seed", spec.seed, "seed");
  auto* pos_opt = synth->add_option("--position", position, "0-indexed step t of the left factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    apply_thread_cap();
    if (*train) {
      naga::ExperimentConfig cfg = load(config_path, overrides);
      if (*seed_opt) cfg.train.seed = seed;
      if (*train_out) cfg.out = out_dir;
      const naga::ResultRow row = naga::cmd_train(cfg);
      std::cout << naga::format_report({row}, naga::ReportFormat::kMarkdown, cfg.timing);
    } else if (*ablate) {
      naga::ExperimentConfig cfg = load(config_path, overrides);
      cfg.out = out_dir;
      std::cout << naga::format_report(naga::cmd_ablate(cfg), naga::ReportFormat::kMarkdown, cfg.timing);
    } else if (*verify) {
      naga::VerifyOptions opts;
      opts.include_training = !quick;
      const naga::VerifySummary summary = naga::run_verify(opts);
      std::cout << (json ? summary.to_json() + "\n" : summary.to_text());
      return summary.ok() ? 0 : kRuntimeFailure;
    } else if (*synth) {
      if (*pos_opt) spec.position = position;
      naga::write_csv(naga::synth_bilinear(spec).table, synth_out);
      std::cout << "wrote " << spec.rows << " rows to " << synth_out << '\n';
    }
  } catch (const naga::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const naga::SplitError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const naga::WindowError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return 0;
}

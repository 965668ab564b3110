// SPDX-License-Identifier: Apache-2.0
#include "naga/experiment.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "naga/checkpoint.hpp"

namespace naga {

namespace {

constexpr std::size_t kDefaultLookback = 96;

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string{} : cur.substr(b, e - b + 1));
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string slug(const std::string& label) {
  std::string s;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!s.empty() && s.back() != '_') s += '_';
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s.empty() ? "run" : s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

std::size_t ExperimentConfig::resolved_lookback() const {
  if (lookback) return *lookback;
  return synthetic() ? synth.window : kDefaultLookback;
}

void ExperimentConfig::validate() const {
  if (repeats == 0) throw ConfigError("repeats must be at least 1");
  if (resolved_lookback() == 0) throw ConfigError("lookback must be positive");
  try {
    split.validate();
    model.validate();
    train.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (synthetic()) {
    if (synth.rank > synth.d_in) throw ConfigError("synth_rank exceeds synth_d_in");
    if (synth.window == 0 || synth.d_in == 0) throw ConfigError("synth_window and synth_d_in must be positive");
  }
}

void apply_experiment_key(ExperimentConfig& cfg, const KeyValue& kv) {
  const std::string& k = kv.key;
  if (k == "d_in") cfg.d_in_explicit = true;
  if (apply_key(cfg.model, kv) || apply_key(cfg.train, kv)) return;
  if (k == "dataset") cfg.dataset = kv.value;
  else if (k == "target") cfg.target = kv.value;
  else if (k == "lookback") cfg.lookback = parse_size(kv);
  else if (k == "repeats") cfg.repeats = parse_size(kv);
  else if (k == "out") cfg.out = kv.value;
  else if (k == "timing") cfg.timing = parse_bool(kv);
  else if (k == "checkpoints") cfg.write_checkpoints = parse_bool(kv);
  else if (k == "verbose") cfg.verbose = parse_bool(kv);
  else if (k == "synth_rows") cfg.synth.rows = parse_size(kv);
  else if (k == "synth_window") cfg.synth.window = parse_size(kv);
  else if (k == "synth_d_in") cfg.synth.d_in = parse_size(kv);
  else if (k == "synth_rank") cfg.synth.rank = parse_size(kv);
  else if (k == "synth_noise") cfg.synth.noise = parse_double(kv);
  else if (k == "synth_linear_scale") cfg.synth.linear_scale = parse_double(kv);
  else if (k == "synth_seed") cfg.synth.seed = parse_size(kv);
  else if (k == "synth_position") cfg.synth.position = parse_size(kv);
  else if (k == "split" || k == "split_counts") {
    const auto parts = split_list(kv.value, ',');
    if (parts.size() != 3) throw ConfigError("config key '" + k + "': expected three comma-separated values");
    try {
      if (k == "split") {
        double v[3];
        for (int i = 0; i < 3; ++i) v[i] = parse_double({k, parts[static_cast<std::size_t>(i)], kv.line});
        cfg.split = SplitSpec::ratio(v[0], v[1], v[2]);
      } else {
        std::size_t v[3];
        for (int i = 0; i < 3; ++i) v[i] = parse_size({k, parts[static_cast<std::size_t>(i)], kv.line});
        cfg.split = SplitSpec::counts(v[0], v[1], v[2]);
      }
    } catch (const SplitError& e) {
      throw ConfigError("config key '" + k + "' (line " + std::to_string(kv.line) + "): " + e.what());
    }
  } else {
    std::string where = kv.line ? " (line " + std::to_string(kv.line) + ")" : "";
    throw ConfigError("unknown config key '" + k + "'" + where);
  }
}

ExperimentConfig parse_experiment(const std::string& text, const std::string& source) {
  ExperimentConfig cfg;
  for (const KeyValue& kv : parse_key_values(text, source)) apply_experiment_key(cfg, kv);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_experiment(buf.str(), path.string());
}

std::string to_key_values(const ExperimentConfig& cfg) {
  std::ostringstream os;
  if (cfg.synthetic()) {
    os << "synth_rows=" << cfg.synth.rows << '\n'
       << "synth_window=" << cfg.synth.window << '\n'
       << "synth_d_in=" << cfg.synth.d_in << '\n'
       << "synth_rank=" << cfg.synth.rank << '\n'
       << "synth_noise=" << fmt_double(cfg.synth.noise) << '\n'
       << "synth_linear_scale=" << fmt_double(cfg.synth.linear_scale) << '\n'
       << "synth_seed=" << cfg.synth.seed << '\n';
    if (cfg.synth.position) os << "synth_position=" << *cfg.synth.position << '\n';
  } else {
    os << "dataset=" << cfg.dataset.string() << '\n';
    if (cfg.target) os << "target=" << *cfg.target << '\n';
  }
  if (cfg.split.mode == SplitSpec::Mode::kRatio) {
    os << "split=" << fmt_double(cfg.split.train) << ',' << fmt_double(cfg.split.val) << ','
       << fmt_double(cfg.split.test) << '\n';
  } else {
    os << "split_counts=" << cfg.split.train_rows << ',' << cfg.split.val_rows << ','
       << cfg.split.test_rows << '\n';
  }
  if (cfg.lookback) os << "lookback=" << *cfg.lookback << '\n';
  os << "repeats=" << cfg.repeats << '\n'
     << "out=" << cfg.out.string() << '\n'
     << "timing=" << (cfg.timing ? "true" : "false") << '\n'
     << "checkpoints=" << (cfg.write_checkpoints ? "true" : "false") << '\n'
     << "verbose=" << (cfg.verbose ? "true" : "false") << '\n';
  os << to_key_values(cfg.model) << to_key_values(cfg.train);
  return os.str();
}

PreparedData prepare_data(ExperimentConfig& cfg) {
  cfg.validate();
  PreparedData out;
  SeriesTable table;
  std::size_t target = 0;
  if (cfg.synthetic()) {
    table = synth_bilinear(cfg.synth).table;
    target = table.features() - 1;
  } else {
    CsvSchema schema;
    schema.target = cfg.target;
    LoadedSeries loaded = load_csv(cfg.dataset, schema);
    target = loaded.report.target_index;
    table = std::move(loaded.table);
    out.ingestion = std::move(loaded.report);
  }
  if (cfg.d_in_explicit && cfg.model.d_in != table.features()) {
    throw ConfigError("d_in = " + std::to_string(cfg.model.d_in) + " but the dataset has " +
                      std::to_string(table.features()) + " features");
  }
  cfg.model.d_in = table.features();
  try {
    cfg.model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  out.data = build_dataset(table, cfg.split, cfg.resolved_lookback(), cfg.model.pred_len, target);
  return out;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  for (double v : values) a.std += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(a.std / static_cast<double>(values.size()));
  return a;
}

double relative_change(double baseline, double value) {
  if (baseline == 0.0) return 0.0;
  return (baseline - value) / baseline * 100.0;
}

void finalize_rows(std::vector<ResultRow>& rows, std::size_t baseline) {
  if (baseline >= rows.size()) throw std::out_of_range("finalize_rows: baseline index out of range");
  const ResultRow base = rows[baseline];
  std::size_t best = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ResultRow& r = rows[i];
    r.baseline = i == baseline;
    r.d_rmse_pct = r.baseline ? 0.0 : relative_change(base.rmse.mean, r.rmse.mean);
    r.d_mae_pct = r.baseline ? 0.0 : relative_change(base.mae.mean, r.mae.mean);
    if (r.rmse.mean < rows[best].rmse.mean) best = i;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].best = i == best;
}

namespace {

std::string epochs_cell(const Aggregate& a) {
  return a.std == 0.0 && a.mean == std::floor(a.mean) ? fixed(a.mean, 0) : fixed(a.mean, 1);
}

std::string metric_cell(const Aggregate& a, std::size_t repeats, int decimals) {
  std::string s = fixed(a.mean, decimals);
  if (repeats > 1) s += " ± " + fixed(a.std, decimals);
  return s;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + '"';
}

}  // namespace

std::string format_report(const std::vector<ResultRow>& rows, ReportFormat format, bool timing) {
  if (rows.empty()) throw std::invalid_argument("format_report: no rows");
  std::ostringstream os;
  if (format == ReportFormat::kCsv) {
    os << "Configuration,Epochs,Runtime[s],MSE,MAE,RMSE,ΔRMSE%,ΔMAE%,"
          "MSE_std,MAE_std,RMSE_std,Runtime_std,Repeats,Baseline,Best\n";
    for (const ResultRow& r : rows) {
      os << csv_quote(r.label) << ',' << epochs_cell(r.epochs) << ','
         << (timing ? fixed(r.seconds.mean, 2) : "-") << ',' << fixed(r.mse.mean, 4) << ','
         << fixed(r.mae.mean, 4) << ',' << fixed(r.rmse.mean, 4) << ',' << fixed(r.d_rmse_pct, 2)
         << ',' << fixed(r.d_mae_pct, 2) << ',' << fixed(r.mse.std, 4) << ',' << fixed(r.mae.std, 4)
         << ',' << fixed(r.rmse.std, 4) << ',' << (timing ? fixed(r.seconds.std, 2) : "-") << ','
         << r.repeats << ',' << (r.baseline ? 1 : 0) << ',' << (r.best ? 1 : 0) << '\n';
    }
    return os.str();
  }
  os << "| Configuration | Epochs | Runtime[s] | MSE | MAE | RMSE | ΔRMSE% | ΔMAE% |\n"
     << "|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const ResultRow& r : rows) {
    std::string label = r.label;
    if (r.baseline) label += " (baseline)";
    if (r.best) label = "**" + label + "**";
    os << "| " << label << " | " << epochs_cell(r.epochs) << " | "
       << (timing ? metric_cell(r.seconds, r.repeats, 2) : "-") << " | "
       << metric_cell(r.mse, r.repeats, 4) << " | " << metric_cell(r.mae, r.repeats, 4) << " | "
       << metric_cell(r.rmse, r.repeats, 4) << " | " << (r.baseline ? "–" : fixed(r.d_rmse_pct, 2))
       << " | " << (r.baseline ? "–" : fixed(r.d_mae_pct, 2)) << " |\n";
  }
  return os.str();
}

void emit_report(const std::vector<ResultRow>& rows, ReportFormat format,
                 const std::filesystem::path& path, bool timing) {
  write_text(path, format_report(rows, format, timing));
}

namespace {

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') cur += '"', ++i;
      else if (c == '"') quoted = false;
      else cur += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double number(const std::string& s) {
  if (s == "-") return 0.0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::invalid_argument("report: bad number '" + s + "'");
  return v;
}

}  // namespace

std::vector<ResultRow> read_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("Configuration,", 0) != 0) {
    throw std::invalid_argument("report: missing header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv_fields(line);
    if (f.size() != 15) throw std::invalid_argument("report: expected 15 fields, got " + std::to_string(f.size()));
    ResultRow r;
    r.label = f[0];
    r.epochs.mean = number(f[1]);
    r.seconds = {number(f[2]), number(f[11])};
    r.mse = {number(f[3]), number(f[8])};
    r.mae = {number(f[4]), number(f[9])};
    r.rmse = {number(f[5]), number(f[10])};
    r.d_rmse_pct = number(f[6]);
    r.d_mae_pct = number(f[7]);
    r.repeats = static_cast<std::size_t>(number(f[12]));
    r.baseline = f[13] == "1";
    r.best = f[14] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

RunOutcome run_repeats(const std::string& label, const ModelConfig& model, const ExperimentConfig& cfg,
                       const WindowedDataset& data, const std::filesystem::path& checkpoint_dir) {
  RunOutcome out;
  std::vector<double> epochs, seconds, mse, mae, rmse;
  for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
    const std::uint64_t seed = cfg.seed_for(rep);
    Rng init(seed);
    NagaModel net = NagaModel::init(model, init);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    TrainReport report = train(net, data, tc);
    const Metrics m = report.has_test ? report.test : evaluate(net, data.val);
    if (!checkpoint_dir.empty()) {
      save_checkpoint(net, checkpoint_dir / (slug(label) + "_seed" + std::to_string(seed) + ".ckpt"));
    }
    if (cfg.verbose) {
      std::cerr << "[" << label << "] seed " << seed << ": " << report.stop_epoch << " epochs (best "
                << report.best_epoch << "), test mse " << fixed(m.mse, 4) << ", mae " << fixed(m.mae, 4)
                << ", " << fixed(report.seconds, 2) << " s\n";
    }
    epochs.push_back(static_cast<double>(report.stop_epoch));
    seconds.push_back(report.seconds);
    mse.push_back(m.mse);
    mae.push_back(m.mae);
    rmse.push_back(m.rmse);
    out.reports.push_back(std::move(report));
  }
  out.row.label = label;
  out.row.repeats = cfg.repeats;
  out.row.epochs = aggregate(epochs);
  out.row.seconds = aggregate(seconds);
  out.row.mse = aggregate(mse);
  out.row.mae = aggregate(mae);
  out.row.rmse = aggregate(rmse);
  return out;
}

std::vector<AblationVariant> ablation_grid(const ModelConfig& base) {
  std::vector<AblationVariant> grid;
  grid.push_back({"Baseline", base});
  ModelConfig v = base;
  v.use_vedic = false;
  grid.push_back({"No Vedic", v});
  v = base;
  v.num_cells = 1;
  grid.push_back({"Single Cell", v});
  v = base;
  v.use_flip = false;
  grid.push_back({"No Flip", v});
  v = base;
  v.mask_prob = 0.1;
  grid.push_back({"Mask 0.1", v});
  return grid;
}

namespace {

std::filesystem::path prepare_out(const ExperimentConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + cfg.out.string() + "': " + ec.message());
  std::filesystem::path ckpt;
  if (cfg.write_checkpoints) {
    ckpt = cfg.out / "checkpoints";
    std::filesystem::create_directories(ckpt, ec);
    if (ec) throw std::runtime_error("cannot create '" + ckpt.string() + "': " + ec.message());
  }
  write_text(cfg.out / "config.txt", to_key_values(cfg));
  return ckpt;
}

}  // namespace

ResultRow cmd_train(ExperimentConfig cfg) {
  PreparedData prepared = prepare_data(cfg);
  const std::filesystem::path ckpt = prepare_out(cfg);
  if (prepared.ingestion) write_text(cfg.out / "ingestion.json", prepared.ingestion->to_json() + "\n");
  std::vector<ResultRow> rows{run_repeats("Naga", cfg.model, cfg, prepared.data, ckpt).row};
  finalize_rows(rows, 0);
  emit_report(rows, ReportFormat::kCsv, cfg.out / "results.csv", cfg.timing);
  emit_report(rows, ReportFormat::kMarkdown, cfg.out / "results.md", cfg.timing);
  return rows.front();
}

std::vector<ResultRow> cmd_ablate(ExperimentConfig cfg) {
  PreparedData prepared = prepare_data(cfg);
  const std::filesystem::path ckpt = prepare_out(cfg);
  if (prepared.ingestion) write_text(cfg.out / "ingestion.json", prepared.ingestion->to_json() + "\n");
  std::vector<ResultRow> rows;
  for (const AblationVariant& v : ablation_grid(cfg.model)) {
    v.model.validate();
    rows.push_back(run_repeats(v.label, v.model, cfg, prepared.data, ckpt).row);
  }
  finalize_rows(rows, 0);
  emit_report(rows, ReportFormat::kCsv, cfg.out / "ablation.csv", cfg.timing);
  emit_report(rows, ReportFormat::kMarkdown, cfg.out / "ablation.md", cfg.timing);
  return rows;
}

}  // namespace naga

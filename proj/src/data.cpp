// SPDX-License-Identifier: Apache-2.0
#include "naga/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "naga/rng.hpp"

namespace naga {

SeriesTable SeriesTable::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > rows()) {
    throw SplitError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") is empty or out of range for " + std::to_string(rows()) + " rows");
  }
  SeriesTable out;
  out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                        timestamps.begin() + static_cast<std::ptrdiff_t>(end));
  out.time_keys.assign(time_keys.begin() + static_cast<std::ptrdiff_t>(begin),
                       time_keys.begin() + static_cast<std::ptrdiff_t>(end));
  const std::size_t n = features();
  std::vector<double> v(values.data().begin() + static_cast<std::ptrdiff_t>(begin * n),
                        values.data().begin() + static_cast<std::ptrdiff_t>(end * n));
  out.values = Tensor(Shape{end - begin, n}, std::move(v));
  out.feature_names = feature_names;
  out.first_row = first_row + begin;
  return out;
}

std::string IngestionReport::to_json() const {
  nlohmann::json j;
  j["source"] = source;
  j["rows"] = rows;
  j["features"] = features;
  j["filled_cells"] = filled_cells;
  j["feature_names"] = feature_names;
  j["target_index"] = target_index;
  j["target"] = feature_names.empty() ? "" : feature_names.at(target_index);
  return j.dump(2);
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  s = s.substr(b, e - b);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
      cur.push_back(ch);
    } else if (ch == delim && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

}  // namespace

std::optional<std::int64_t> parse_time_key(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char sep = ' ';
  int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &sec);
  if (n < 3 || mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
  if (n > 3 && sep != ' ' && sep != 'T') return std::nullopt;
  if (n == 4 || n == 5) return std::nullopt;
  if (h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 60) return std::nullopt;
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
         h * 3600 + mi * 60 + sec;
}

LoadedSeries parse_csv(const std::string& text, const CsvSchema& schema, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    header = split_line(line, schema.delimiter);
    break;
  }
  if (header.size() < 2) {
    throw IngestionError(source + ": no numeric columns (header has " +
                         std::to_string(header.size()) + " column(s))");
  }
  const std::size_t n = header.size() - 1;

  std::vector<std::string> stamps;
  std::vector<std::int64_t> keys;
  std::vector<std::vector<std::optional<double>>> cells(n);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_line(line, schema.delimiter);
    if (fields.size() > header.size()) {
      throw IngestionError(source + ": line " + std::to_string(line_no) + " has " +
                           std::to_string(fields.size()) + " fields, header has " +
                           std::to_string(header.size()));
    }
    fields.resize(header.size());
    const auto key = parse_time_key(fields[0]);
    if (!key) {
      throw IngestionError(source + ": line " + std::to_string(line_no) +
                           ": unparseable timestamp '" + fields[0] + "'");
    }
    if (!keys.empty() && *key <= keys.back()) {
      throw IngestionError(source + ": line " + std::to_string(line_no) +
                           ": timestamps not strictly increasing ('" + fields[0] + "' after '" +
                           stamps.back() + "')");
    }
    stamps.push_back(fields[0]);
    keys.push_back(*key);
    for (std::size_t j = 0; j < n; ++j) cells[j].push_back(parse_number(fields[j + 1]));
  }
  const std::size_t rows = stamps.size();
  if (rows == 0) throw IngestionError(source + ": no data rows");

  LoadedSeries out;
  std::vector<double> values(rows * n);
  std::size_t filled = 0;
  for (std::size_t j = 0; j < n; ++j) {
    auto first_valid = std::find_if(cells[j].begin(), cells[j].end(),
                                    [](const auto& c) { return c.has_value(); });
    if (first_valid == cells[j].end()) {
      throw IngestionError(source + ": column '" + header[j + 1] + "' has no numeric values");
    }
    double last = **first_valid;
    for (std::size_t r = 0; r < rows; ++r) {
      if (cells[j][r]) {
        last = *cells[j][r];
      } else {
        ++filled;
      }
      values[r * n + j] = last;
    }
  }

  std::size_t target = n - 1;
  if (schema.target) {
    auto it = std::find(header.begin() + 1, header.end(), *schema.target);
    if (it == header.end()) throw IngestionError(source + ": target column '" + *schema.target + "' not found");
    target = static_cast<std::size_t>(it - header.begin()) - 1;
  }

  out.table.timestamps = std::move(stamps);
  out.table.time_keys = std::move(keys);
  out.table.values = Tensor(Shape{rows, n}, std::move(values));
  out.table.feature_names.assign(header.begin() + 1, header.end());
  out.report = {source, rows, n, filled, out.table.feature_names, target};
  return out;
}

LoadedSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IngestionError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  std::string text = ss.str();
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);
  return parse_csv(text, schema, path.string());
}

SplitSpec SplitSpec::ratio(double train, double val, double test) {
  SplitSpec s;
  s.mode = Mode::kRatio;
  s.train = train;
  s.val = val;
  s.test = test;
  s.validate();
  return s;
}

SplitSpec SplitSpec::counts(std::size_t train, std::size_t val, std::size_t test) {
  SplitSpec s;
  s.mode = Mode::kCounts;
  s.train_rows = train;
  s.val_rows = val;
  s.test_rows = test;
  s.validate();
  return s;
}

void SplitSpec::validate() const {
  if (mode == Mode::kRatio) {
    if (!(train > 0 && val > 0 && test > 0) || std::abs(train + val + test - 1.0) > 1e-9) {
      throw SplitError("split ratios must be positive and sum to 1");
    }
  } else if (train_rows == 0 || val_rows == 0 || test_rows == 0) {
    throw SplitError("split row counts must be positive");
  }
}

SplitTables split_series(const SeriesTable& table, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = table.rows();
  std::size_t tr, va, te;
  if (spec.mode == SplitSpec::Mode::kRatio) {
    // The small slack keeps exact products such as 100 * 0.7 from flooring to 69.
    tr = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.train + 1e-9));
    va = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.val + 1e-9));
    te = n - std::min(n, tr + va);
  } else {
    tr = spec.train_rows;
    va = spec.val_rows;
    te = spec.test_rows;
    if (tr + va + te > n) {
      throw SplitError("split needs " + std::to_string(tr + va + te) + " rows, table has " +
                       std::to_string(n));
    }
  }
  if (tr == 0 || va == 0 || te == 0) {
    throw SplitError("split of " + std::to_string(n) + " rows leaves an empty segment (" +
                     std::to_string(tr) + "/" + std::to_string(va) + "/" + std::to_string(te) + ")");
  }
  return {table.slice(0, tr), table.slice(tr, tr + va), table.slice(tr + va, tr + va + te)};
}

bool NormStats::any_clamped() const {
  return std::any_of(clamped.begin(), clamped.end(), [](bool b) { return b; });
}

NormStats fit_norm(const SeriesTable& train) {
  const std::size_t rows = train.rows(), n = train.features();
  if (rows == 0) throw std::invalid_argument("fit_norm: empty training split");
  NormStats s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<bool>(n, false)};
  for (std::size_t j = 0; j < n; ++j) {
    double mu = 0.0;
    for (std::size_t r = 0; r < rows; ++r) mu += train.values.at(r, j);
    mu /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = train.values.at(r, j) - mu;
      var += d * d;
    }
    var /= static_cast<double>(rows);
    const double sd = std::sqrt(var);
    s.mean[j] = mu;
    if (sd <= 1e-12 * std::max(1.0, std::abs(mu))) {
      s.std[j] = 1.0;
      s.clamped[j] = true;
    } else {
      s.std[j] = sd;
    }
  }
  return s;
}

SeriesTable apply_norm(const SeriesTable& table, const NormStats& stats) {
  if (stats.mean.size() != table.features()) {
    throw DimensionError("apply_norm: stats for " + std::to_string(stats.mean.size()) +
                         " features, table has " + std::to_string(table.features()));
  }
  SeriesTable out = table;
  const std::size_t n = table.features();
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      out.values.at(r, j) = (table.values.at(r, j) - stats.mean[j]) / stats.std[j];
    }
  }
  return out;
}

SeriesTable invert_norm(const SeriesTable& table, const NormStats& stats) {
  if (stats.mean.size() != table.features()) {
    throw DimensionError("invert_norm: feature count mismatch");
  }
  SeriesTable out = table;
  const std::size_t n = table.features();
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      out.values.at(r, j) = table.values.at(r, j) * stats.std[j] + stats.mean[j];
    }
  }
  return out;
}

WindowSet WindowSet::gather(const std::vector<std::size_t>& idx) const {
  const std::size_t d = x.dim(1), n = x.dim(2), h = y.dim(1);
  WindowSet out;
  out.x = Tensor(Shape{idx.size(), d, n});
  out.y = Tensor(Shape{idx.size(), h});
  out.start_rows.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::size_t src = idx[i];
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(src * d * n), d * n,
                out.x.data().begin() + static_cast<std::ptrdiff_t>(i * d * n));
    std::copy_n(y.data().begin() + static_cast<std::ptrdiff_t>(src * h), h,
                out.y.data().begin() + static_cast<std::ptrdiff_t>(i * h));
    out.start_rows.push_back(start_rows[src]);
  }
  return out;
}

WindowSet make_windows(const SeriesTable& table, std::size_t lookback, std::size_t horizon,
                       std::size_t target_idx) {
  if (lookback == 0 || horizon == 0) throw WindowError("lookback and horizon must be positive");
  const std::size_t rows = table.rows(), n = table.features();
  if (target_idx >= n) throw WindowError("target index " + std::to_string(target_idx) + " out of range");
  if (rows < lookback + horizon) {
    throw WindowError("split of " + std::to_string(rows) + " rows is too short; need at least " +
                      std::to_string(lookback + horizon) + " (lookback " + std::to_string(lookback) +
                      " + horizon " + std::to_string(horizon) + ")");
  }
  const std::size_t count = rows - lookback - horizon + 1;
  WindowSet w;
  w.x = Tensor(Shape{count, lookback, n});
  w.y = Tensor(Shape{count, horizon});
  w.start_rows.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::copy_n(table.values.data().begin() + static_cast<std::ptrdiff_t>(i * n), lookback * n,
                w.x.data().begin() + static_cast<std::ptrdiff_t>(i * lookback * n));
    for (std::size_t k = 0; k < horizon; ++k) {
      w.y.at(i, k) = table.values.at(i + lookback + k, target_idx);
    }
    w.start_rows[i] = table.first_row + i;
  }
  return w;
}

WindowedDataset build_dataset(const SeriesTable& table, const SplitSpec& split,
                              std::size_t lookback, std::size_t horizon, std::size_t target_idx) {
  const SplitTables parts = split_series(table, split);
  WindowedDataset ds;
  ds.lookback = lookback;
  ds.horizon = horizon;
  ds.target = target_idx;
  ds.stats = fit_norm(parts.train);
  ds.train = make_windows(apply_norm(parts.train, ds.stats), lookback, horizon, target_idx);
  ds.val = make_windows(apply_norm(parts.val, ds.stats), lookback, horizon, target_idx);
  ds.test = make_windows(apply_norm(parts.test, ds.stats), lookback, horizon, target_idx);
  return ds;
}

double BilinearTarget::evaluate(const Tensor& window) const {
  const std::size_t d = dim();
  if (!(window.shape() == Shape{steps(), d})) {
    throw DimensionError("BilinearTarget: window " + window.shape().str() + " expected [" +
                         std::to_string(steps()) + "x" + std::to_string(d) + "]");
  }
  double y = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) y += C.at(a, b) * window.at(t, a) * window.at(t_prime, b);
  }
  for (std::size_t i = 0; i < window.size(); ++i) y += linear[i] * window[i];
  return y;
}

namespace {

// Columns of an n x k matrix with orthonormal columns (Gram-Schmidt on normals).
Tensor random_orthonormal(std::size_t n, std::size_t k, Rng& rng) {
  Tensor q(Shape{n, k});
  for (std::size_t c = 0; c < k; ++c) {
    for (int attempt = 0;; ++attempt) {
      std::vector<double> v(n);
      for (auto& x : v) x = rng.normal();
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t p = 0; p < c; ++p) {
          double dot = 0.0;
          for (std::size_t i = 0; i < n; ++i) dot += v[i] * q.at(i, p);
          for (std::size_t i = 0; i < n; ++i) v[i] -= dot * q.at(i, p);
        }
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 1e-6 || attempt > 16) {
        for (std::size_t i = 0; i < n; ++i) q.at(i, c) = v[i] / norm;
        break;
      }
    }
  }
  return q;
}

}  // namespace

Tensor random_rank_matrix(std::size_t d, std::size_t rank, std::uint64_t seed) {
  if (rank > d) throw std::invalid_argument("random_rank_matrix: rank exceeds dimension");
  Tensor c(Shape{d, d});
  if (rank == 0) return c;
  Rng rng(seed);
  const Tensor u = random_orthonormal(d, rank, rng);
  const Tensor v = random_orthonormal(d, rank, rng);
  for (std::size_t k = 0; k < rank; ++k) {
    const double sigma = rng.uniform(0.5, 2.0);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) c.at(a, b) += sigma * u.at(a, k) * v.at(b, k);
    }
  }
  return c;
}

SynthSeries synth_bilinear(const SynthSpec& spec) {
  if (spec.rank > spec.d_in) throw std::invalid_argument("synth_bilinear: rank exceeds d_in");
  if (spec.window == 0 || spec.rows <= spec.window) {
    throw std::invalid_argument("synth_bilinear: need rows > window > 0");
  }
  const std::size_t T = spec.window, d = spec.d_in;
  const std::size_t t = spec.position.value_or(T - 1);
  if (t >= T) throw std::invalid_argument("synth_bilinear: position outside the window");
  Rng rng(spec.seed);

  SynthSeries out;
  BilinearTarget& tgt = out.target;
  tgt.C = random_rank_matrix(d, spec.rank, rng.next_u64());
  tgt.rank = spec.rank;
  tgt.t = t;
  tgt.t_prime = T - 1 - t;
  tgt.linear = rng.normal_tensor(Shape{T, d}, spec.linear_scale);

  const std::size_t n = d + 1;
  SeriesTable& tab = out.table;
  tab.values = Tensor(Shape{spec.rows, n});
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t a = 0; a < d; ++a) tab.values.at(r, a) = rng.normal();
  }
  Tensor window(Shape{T, d});
  for (std::size_t r = 0; r < spec.rows; ++r) {
    double y = 0.0;
    if (r >= T) {
      for (std::size_t s = 0; s < T; ++s) {
        for (std::size_t a = 0; a < d; ++a) window.at(s, a) = tab.values.at(r - T + s, a);
      }
      y = tgt.evaluate(window);
    }
    tab.values.at(r, d) = y + spec.noise * rng.normal();
  }
  for (std::size_t a = 0; a < d; ++a) tab.feature_names.push_back("x" + std::to_string(a));
  tab.feature_names.push_back("target");
  for (std::size_t r = 0; r < spec.rows; ++r) {
    tab.timestamps.push_back(std::to_string(r));
    tab.time_keys.push_back(static_cast<std::int64_t>(r));
  }
  return out;
}

void write_csv(const SeriesTable& table, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << "date";
  for (const auto& name : table.feature_names) f << ',' << name;
  f << '\n';
  f << std::setprecision(17);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    f << table.timestamps[r];
    for (std::size_t j = 0; j < table.features(); ++j) f << ',' << table.values.at(r, j);
    f << '\n';
  }
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace naga

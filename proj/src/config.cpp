// SPDX-License-Identifier: Apache-2.0
#include "naga/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace naga {

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const KeyValue& kv, const char* expected) {
  std::string where = kv.line ? " (line " + std::to_string(kv.line) + ")" : "";
  throw ConfigError("config key '" + kv.key + "'" + where + ": expected " + expected + ", got '" +
                    kv.value + "'");
}

// Shortest round-tripping decimal form.
std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& source) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(n) + ": expected key = value");
    }
    KeyValue kv{strip(line.substr(0, eq)), strip(line.substr(eq + 1)), n};
    if (kv.key.empty()) throw ConfigError(source + ":" + std::to_string(n) + ": empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

KeyValue parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "' is not key=value");
  return {strip(text.substr(0, eq)), strip(text.substr(eq + 1)), 0};
}

double parse_double(const KeyValue& kv) {
  double v = 0.0;
  const char* first = kv.value.data();
  const char* last = first + kv.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) bad_value(kv, "a number");
  return v;
}

std::size_t parse_size(const KeyValue& kv) {
  std::size_t v = 0;
  const char* first = kv.value.data();
  const char* last = first + kv.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) bad_value(kv, "a non-negative integer");
  return v;
}

bool parse_bool(const KeyValue& kv) {
  const std::string& v = kv.value;
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  bad_value(kv, "a boolean (true/false)");
}

bool apply_key(ModelConfig& c, const KeyValue& kv) {
  const std::string& k = kv.key;
  if (k == "d_in") c.d_in = parse_size(kv);
  else if (k == "d_hidden") c.d_hidden = parse_size(kv);
  else if (k == "d_inner") c.d_inner = parse_size(kv);
  else if (k == "d_state") c.d_state = parse_size(kv);
  else if (k == "h_head") c.h_head = parse_size(kv);
  else if (k == "kernel") c.kernel = parse_size(kv);
  else if (k == "pred_len") c.pred_len = parse_size(kv);
  else if (k == "num_cells") c.num_cells = parse_size(kv);
  else if (k == "use_vedic") c.use_vedic = parse_bool(kv);
  else if (k == "use_flip") c.use_flip = parse_bool(kv);
  else if (k == "mask_prob") c.mask_prob = parse_double(kv);
  else if (k == "dropout_p") c.dropout_p = parse_double(kv);
  else if (k == "eps") c.eps = parse_double(kv);
  else return false;
  return true;
}

bool apply_key(TrainConfig& c, const KeyValue& kv) {
  const std::string& k = kv.key;
  if (k == "lr") c.lr = parse_double(kv);
  else if (k == "weight_decay") c.weight_decay = parse_double(kv);
  else if (k == "batch_size") c.batch_size = parse_size(kv);
  else if (k == "seed") c.seed = parse_size(kv);
  else if (k == "patience") c.patience = parse_size(kv);
  else if (k == "min_delta") c.min_delta = parse_double(kv);
  else if (k == "max_epochs") c.max_epochs = parse_size(kv);
  else if (k == "beta1") c.beta1 = parse_double(kv);
  else if (k == "beta2") c.beta2 = parse_double(kv);
  else if (k == "adam_eps") c.adam_eps = parse_double(kv);
  else if (k == "max_train_windows") c.max_train_windows = parse_size(kv);
  else return false;
  return true;
}

std::string to_key_values(const ModelConfig& c) {
  std::ostringstream os;
  os << "d_in=" << c.d_in << '\n'
     << "d_hidden=" << c.d_hidden << '\n'
     << "d_inner=" << c.d_inner << '\n'
     << "d_state=" << c.d_state << '\n'
     << "h_head=" << c.h_head << '\n'
     << "kernel=" << c.kernel << '\n'
     << "pred_len=" << c.pred_len << '\n'
     << "num_cells=" << c.num_cells << '\n'
     << "use_vedic=" << (c.use_vedic ? "true" : "false") << '\n'
     << "use_flip=" << (c.use_flip ? "true" : "false") << '\n'
     << "mask_prob=" << fmt_double(c.mask_prob) << '\n'
     << "dropout_p=" << fmt_double(c.dropout_p) << '\n'
     << "eps=" << fmt_double(c.eps) << '\n';
  return os.str();
}

std::string to_key_values(const TrainConfig& c) {
  std::ostringstream os;
  os << "lr=" << fmt_double(c.lr) << '\n'
     << "weight_decay=" << fmt_double(c.weight_decay) << '\n'
     << "batch_size=" << c.batch_size << '\n'
     << "seed=" << c.seed << '\n'
     << "patience=" << c.patience << '\n'
     << "min_delta=" << fmt_double(c.min_delta) << '\n'
     << "max_epochs=" << c.max_epochs << '\n'
     << "beta1=" << fmt_double(c.beta1) << '\n'
     << "beta2=" << fmt_double(c.beta2) << '\n'
     << "adam_eps=" << fmt_double(c.adam_eps) << '\n'
     << "max_train_windows=" << c.max_train_windows << '\n';
  return os.str();
}

}  // namespace naga

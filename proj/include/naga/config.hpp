// SPDX-License-Identifier: Apache-2.0
//
// Plain-text `key = value` configuration. One pair per line; `#` starts a
// comment; blank lines are ignored; later keys override earlier ones.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "naga/model.hpp"
#include "naga/trainer.hpp"

namespace naga {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& source = "<config>");

/// "key=value" from the command line.
KeyValue parse_override(const std::string& text);

/// Applies one key to the matching struct. Returns false if the key does not
/// belong to it; throws ConfigError on a malformed value.
bool apply_key(ModelConfig& cfg, const KeyValue& kv);
bool apply_key(TrainConfig& cfg, const KeyValue& kv);

std::string to_key_values(const ModelConfig& cfg);
std::string to_key_values(const TrainConfig& cfg);

double parse_double(const KeyValue& kv);
std::size_t parse_size(const KeyValue& kv);
bool parse_bool(const KeyValue& kv);

}  // namespace naga

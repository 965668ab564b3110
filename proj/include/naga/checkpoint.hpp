// SPDX-License-Identifier: Apache-2.0
//
// Text checkpoint, version 1:
//
//   naga-checkpoint 1
//   config <key>=<value>           one line per ModelConfig field
//   param <name> <rank> <dims...>  followed by one line of hex-float values
//   ...
//   end
//
// Values are written with %a so a save/load round trip is bit-exact.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "naga/model.hpp"

namespace naga {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

void write_checkpoint(const NagaModel& model, std::ostream& out);
NagaModel read_checkpoint(std::istream& in);

void save_checkpoint(const NagaModel& model, const std::filesystem::path& path);
NagaModel load_checkpoint(const std::filesystem::path& path);

}  // namespace naga

// SPDX-License-Identifier: Apache-2.0
#include "naga/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "naga/config.hpp"

namespace naga {

void write_checkpoint(const NagaModel& model, std::ostream& out) {
  out << "naga-checkpoint " << kCheckpointVersion << '\n';
  std::istringstream cfg(to_key_values(model.config()));
  for (std::string line; std::getline(cfg, line);) out << "config " << line << '\n';
  char buf[40];
  for (const auto& [name, t] : model.named_parameters()) {
    out << "param " << name << ' ' << t->rank();
    for (std::size_t a = 0; a < t->rank(); ++a) out << ' ' << t->dim(a);
    out << '\n';
    for (std::size_t i = 0; i < t->size(); ++i) {
      std::snprintf(buf, sizeof buf, "%a", (*t)[i]);
      out << (i ? " " : "") << buf;
    }
    out << '\n';
  }
  out << "end\n";
}

NagaModel read_checkpoint(std::istream& in) {
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "naga-checkpoint") {
    throw CheckpointError("not a naga checkpoint");
  }
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig cfg;
  std::map<std::string, Tensor> tensors;
  while (in >> word) {
    if (word == "end") break;
    if (word == "config") {
      std::string kv;
      in >> kv;
      if (!apply_key(cfg, parse_override(kv))) throw CheckpointError("unknown config key in '" + kv + "'");
    } else if (word == "param") {
      std::string name;
      std::size_t rank = 0;
      in >> name >> rank;
      if (rank < 1 || rank > Shape::kMaxRank) throw CheckpointError("bad rank for " + name);
      std::vector<std::size_t> dims(rank);
      for (auto& d : dims) in >> d;
      Tensor t{Shape(std::span<const std::size_t>(dims))};
      std::string tok;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(in >> tok)) throw CheckpointError("truncated values for " + name);
        char* end = nullptr;
        t[i] = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0') throw CheckpointError("bad value '" + tok + "' in " + name);
      }
      tensors.insert_or_assign(name, std::move(t));
    } else {
      throw CheckpointError("unexpected token '" + word + "'");
    }
  }
  if (word != "end") throw CheckpointError("checkpoint is missing its end marker");

  Rng scratch(0);
  NagaModel model = NagaModel::init(cfg, scratch);
  for (auto& [name, t] : model.named_parameters()) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw CheckpointError("checkpoint lacks parameter " + name);
    if (!(it->second.shape() == t->shape())) {
      throw CheckpointError("parameter " + name + " has shape " + it->second.shape().str() +
                            ", config expects " + t->shape().str());
    }
    *t = std::move(it->second);
    tensors.erase(it);
  }
  if (!tensors.empty()) throw CheckpointError("checkpoint has unknown parameter " + tensors.begin()->first);
  return model;
}

void save_checkpoint(const NagaModel& model, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw CheckpointError("cannot write '" + path.string() + "'");
  write_checkpoint(model, f);
  if (!f) throw CheckpointError("write failed for '" + path.string() + "'");
}

NagaModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw CheckpointError("cannot open '" + path.string() + "'");
  return read_checkpoint(f);
}

}  // namespace naga

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "glyphdiff/core/tape.hpp"

namespace gd {

// FNV-1a over a string; used for config hashes embedded in checkpoints and
// reports.
uint64_t fnv1a64(const std::string& s);
std::string hash_hex(const std::string& s);

// Single-file checkpoint: JSON metadata plus named float32 tensors.
class Checkpoint {
 public:
  nlohmann::json meta = nlohmann::json::object();

  void put(const std::string& name, const Tensor<float>& t) { tensors_[name] = t; }
  const Tensor<float>* find(const std::string& name) const;
  const std::map<std::string, Tensor<float>>& tensors() const { return tensors_; }

  // Export/import every parameter of a store, name-prefixed.
  void put_store(const std::string& prefix, const ParamStore<float>& ps);
  void load_store(const std::string& prefix, ParamStore<float>& ps) const;

  // Atomic save (write temp file, then rename).
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  std::map<std::string, Tensor<float>> tensors_;
};

}  // namespace gd

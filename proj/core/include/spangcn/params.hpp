#pragma once

#include <map>
#include <random>
#include <string>

#include "spangcn/tensor.hpp"

namespace spangcn {

// All learnable parameters, keyed by name. std::map keeps iteration order
// deterministic, which training reproducibility relies on.
struct ModelParams {
  std::map<std::string, Tensor> t;

  Tensor& add(const std::string& name, std::vector<int> shape);
  Tensor& add_xavier(const std::string& name, int rows, int cols,
                     std::mt19937_64& rng);
  Tensor& add_vector(const std::string& name, int n, double fill = 0.0);

  bool has(const std::string& name) const { return t.count(name) > 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  int total_size() const;
};

// Gradients mirror the parameter map; absent names mean zero.
using GradMap = std::map<std::string, Tensor>;

// Checkpoint file: JSON with a format tag, an opaque config blob and the
// full parameter table.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::string& config_json);
void load_checkpoint(const std::string& path, ModelParams& params,
                     std::string& config_json);

}  // namespace spangcn

#include "spangcn/params.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "spangcn/error.hpp"

namespace spangcn {

Tensor& ModelParams::add(const std::string& name, std::vector<int> shape) {
  if (has(name)) throw ValidationError("duplicate parameter '" + name + "'");
  return t.emplace(name, Tensor(std::move(shape))).first->second;
}

Tensor& ModelParams::add_xavier(const std::string& name, int rows, int cols,
                                std::mt19937_64& rng) {
  Tensor& w = add(name, {rows, cols});
  double limit = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (double& e : w.v) e = u(rng);
  return w;
}

Tensor& ModelParams::add_vector(const std::string& name, int n, double fill) {
  Tensor& w = add(name, {n});
  for (double& e : w.v) e = fill;
  return w;
}

Tensor& ModelParams::get(const std::string& name) {
  auto it = t.find(name);
  if (it == t.end()) throw ValidationError("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ModelParams::get(const std::string& name) const {
  auto it = t.find(name);
  if (it == t.end()) throw ValidationError("unknown parameter '" + name + "'");
  return it->second;
}

int ModelParams::total_size() const {
  int n = 0;
  for (const auto& [name, tensor] : t) n += tensor.size();
  return n;
}

namespace {
constexpr const char* kFormatTag = "spangcn-checkpoint-v1";
}

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::string& config_json) {
  nlohmann::ordered_json j;
  j["format"] = kFormatTag;
  j["config"] = nlohmann::ordered_json::parse(
      config_json.empty() ? "{}" : config_json);
  nlohmann::ordered_json pj = nlohmann::ordered_json::object();
  for (const auto& [name, tensor] : params.t) {
    pj[name] = {{"shape", tensor.shape}, {"values", tensor.v}};
  }
  j["params"] = std::move(pj);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open checkpoint for writing: " + path);
  out << j.dump() << "\n";
}

void load_checkpoint(const std::string& path, ModelParams& params,
                     std::string& config_json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint JSON: ") + e.what());
  }
  if (!j.contains("format") || j["format"] != kFormatTag)
    throw ParseError("checkpoint format tag missing or unsupported");
  config_json = j.value("config", nlohmann::json::object()).dump();
  params.t.clear();
  for (const auto& [name, entry] : j.at("params").items()) {
    Tensor tensor(entry.at("shape").get<std::vector<int>>());
    auto vals = entry.at("values").get<std::vector<double>>();
    if (static_cast<int>(vals.size()) != tensor.size())
      throw ParseError("checkpoint value count mismatch for '" + name + "'");
    tensor.v = std::move(vals);
    params.t.emplace(name, std::move(tensor));
  }
}

}  // namespace spangcn

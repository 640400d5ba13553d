#include "spangcn/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "spangcn/error.hpp"

namespace spangcn {

EmbeddingTable EmbeddingTable::load_glove(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embedding file: " + path);
  EmbeddingTable table;
  table.file_backed_ = true;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<double> vals;
    double x;
    while (ls >> x) vals.push_back(x);
    if (vals.empty())
      throw ParseError("embedding file line " + std::to_string(lineno) +
                       ": no values");
    if (table.dim_ == 0) table.dim_ = static_cast<int>(vals.size());
    if (static_cast<int>(vals.size()) != table.dim_)
      throw ParseError("embedding file line " + std::to_string(lineno) +
                       ": dimension mismatch");
    table.rows_.emplace(token, Tensor::vec(std::move(vals)));
  }
  if (table.dim_ == 0) throw ParseError("embedding file is empty: " + path);
  return table;
}

EmbeddingTable EmbeddingTable::hashed(int dim) {
  if (dim < 1) throw ValidationError("embedding dim must be positive");
  EmbeddingTable table;
  table.dim_ = dim;
  table.file_backed_ = false;
  return table;
}

Tensor EmbeddingTable::lookup(const std::string& token) const {
  auto it = rows_.find(token);
  if (it != rows_.end()) return it->second;
  if (file_backed_) return Tensor({dim_});  // UNK row: zeros
  // FNV-1a over the token seeds a per-token generator, so the vector is a
  // pure function of the string.
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::mt19937_64 rng(h);
  std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(double(dim_)));
  Tensor t({dim_});
  for (double& e : t.v) e = n(rng);
  return t;
}

}  // namespace spangcn

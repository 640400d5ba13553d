#pragma once

#include <map>
#include <string>
#include <vector>

#include "spangcn/tensor.hpp"

namespace spangcn {

// Frozen pretrained embeddings. Either loaded from a GloVe-style text file
// ("token v1 ... vD" per line) or synthesized deterministically from token
// hashes when no file is given (desk-scale runs on synthetic corpora).
// These vectors are never trained; they are not part of ModelParams.
class EmbeddingTable {
 public:
  static EmbeddingTable load_glove(const std::string& path);
  static EmbeddingTable hashed(int dim);

  // Lookup with UNK fallback (zero vector for file-backed tables, a
  // hash-derived vector otherwise).
  Tensor lookup(const std::string& token) const;
  int dim() const { return dim_; }
  bool file_backed() const { return file_backed_; }

 private:
  int dim_ = 0;
  bool file_backed_ = false;
  std::map<std::string, Tensor> rows_;
};

}  // namespace spangcn

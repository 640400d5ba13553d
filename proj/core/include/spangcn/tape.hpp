#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "spangcn/tensor.hpp"

namespace spangcn {

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode differentiation record. Values are computed eagerly as ops
// are applied; backward() replays the record once, accumulating gradients
// additively at fan-out. A Tape is single-threaded.
class Tape {
 public:
  Var leaf(Tensor value, std::string name = "");

  // -- primitives --------------------------------------------------------
  Var matmul(Var a, Var b);           // (m,k)x(k,n) -> (m,n)
  Var matvec(Var w, Var x);           // (m,n)x(n)   -> (m)
  Var vecmat(Var x, Var w);           // (m)x(m,n)   -> (n)
  Var add(Var a, Var b);              // same shape
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);              // elementwise
  Var scale(Var a, double c);
  Var add_many(const std::vector<Var>& xs);  // pairwise-tree summation
  Var concat(Var a, Var b);           // vectors
  Var slice(Var x, int start, int len);
  Var sigmoid(Var x);
  Var tanh(Var x);
  Var relu(Var x);
  Var softmax(Var x);                 // vector
  Var logsumexp(Var x);               // vector -> scalar
  Var dot(Var a, Var b);              // vectors -> scalar
  Var stack(const std::vector<Var>& scalars);  // -> vector
  Var pick(Var x, int i);             // vector element -> scalar
  Var pick2(Var m, int i, int j);     // matrix element -> scalar
  Var row(Var m, int i);              // gather one matrix row
  Var col(Var m, int j);
  Var gate_scale(Var g, Var x);       // scalar gate times vector
  Var add_scalar(Var x, Var s);       // vector + broadcast scalar
  Var sum(Var x);
  Var mean(Var x);
  Var dropout(Var x, double rate, std::mt19937_64& rng, bool train);
  Var dropout_mask(Var x, const Tensor& mask);  // precomputed (shared) mask
  Var layer_norm(Var x, Var gain, Var bias, double eps);

  // -- access ------------------------------------------------------------
  const Tensor& val(Var v) const { return nodes_[v.id].val; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Runs reverse accumulation from a scalar loss. Throws on a non-scalar
  // loss or a non-finite gradient.
  void backward(Var loss);

  // Draws a fresh inverted-scaling dropout mask for a vector of size n.
  static Tensor make_dropout_mask(int n, double rate, std::mt19937_64& rng);

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    std::function<void(Tape&)> back;  // empty for leaves
    std::string name;
  };

  Var push(Tensor value, std::function<void(Tape&)> back, std::string name);
  Tensor& g(int id) { return nodes_[id].grad; }
  const Tensor& v(int id) const { return nodes_[id].val; }

  std::vector<Node> nodes_;
  int out_ = -1;  // node whose backward closure is currently running
};

}  // namespace spangcn

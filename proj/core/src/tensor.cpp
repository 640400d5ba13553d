#include "spangcn/tensor.hpp"

#include <cmath>
#include <sstream>

#include "spangcn/error.hpp"

namespace spangcn {

namespace {
size_t numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in tensor shape");
    n *= static_cast<size_t>(d);
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)), v(numel(shape), 0.0) {}

Tensor Tensor::vec(std::vector<double> vals) {
  Tensor t;
  t.shape = {static_cast<int>(vals.size())};
  t.v = std::move(vals);
  return t;
}

Tensor Tensor::scalar(double x) {
  Tensor t;
  t.shape = {1};
  t.v = {x};
  return t;
}

bool Tensor::all_finite() const {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() +
                     " vs " + b.shape_str());
  }
}

}  // namespace spangcn

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spangcn {

// Dense row-major tensor of doubles. Rank 1 and 2 cover everything we need.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor vec(std::vector<double> vals);
  static Tensor scalar(double x);

  int size() const { return static_cast<int>(v.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }

  double& at(int i) { return v[i]; }
  double at(int i) const { return v[i]; }
  double& at(int i, int j) { return v[static_cast<size_t>(i) * shape[1] + j]; }
  double at(int i, int j) const { return v[static_cast<size_t>(i) * shape[1] + j]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
  std::string shape_str() const;
};

// Throws ShapeError naming both shapes unless they match.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace spangcn

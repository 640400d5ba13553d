#include "spangcn/tape.hpp"

#include <algorithm>
#include <cmath>

#include "spangcn/error.hpp"

namespace spangcn {

namespace {
void check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
}
}  // namespace

Var Tape::push(Tensor value, std::function<void(Tape&)> back, std::string name) {
  Node n;
  n.grad = Tensor(value.shape);
  n.val = std::move(value);
  n.back = std::move(back);
  n.name = std::move(name);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value, std::string name) {
  check_finite(value, "leaf");
  return push(std::move(value), nullptr, std::move(name));
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& A = v(a.id);
  const Tensor& B = v(b.id);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) {
    throw ShapeError("matmul: shape mismatch " + A.shape_str() + " vs " +
                     B.shape_str());
  }
  int m = A.rows(), k = A.cols(), n = B.cols();
  Tensor C({m, n});
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      double aip = A.at(i, p);
      for (int j = 0; j < n; ++j) C.at(i, j) += aip * B.at(p, j);
    }
  check_finite(C, "matmul");
  int ai = a.id, bi = b.id;
  return push(std::move(C), [ai, bi, m, k, n](Tape& t) {
    const Tensor& dC = t.g(t.out_);
    const Tensor& A = t.v(ai);
    const Tensor& B = t.v(bi);
    Tensor& dA = t.g(ai);
    Tensor& dB = t.g(bi);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        double d = dC.at(i, j);
        if (d == 0.0) continue;
        for (int p = 0; p < k; ++p) {
          dA.at(i, p) += d * B.at(p, j);
          dB.at(p, j) += d * A.at(i, p);
        }
      }
  }, "matmul");
}

Var Tape::matvec(Var w, Var x) {
  const Tensor& W = v(w.id);
  const Tensor& X = v(x.id);
  if (W.rank() != 2 || X.rank() != 1 || W.cols() != X.size()) {
    throw ShapeError("matvec: shape mismatch " + W.shape_str() + " vs " +
                     X.shape_str());
  }
  int m = W.rows(), n = W.cols();
  Tensor y({m});
  for (int i = 0; i < m; ++i) {
    double s = 0;
    for (int j = 0; j < n; ++j) s += W.at(i, j) * X.at(j);
    y.at(i) = s;
  }
  check_finite(y, "matvec");
  int wi = w.id, xi = x.id;
  return push(std::move(y), [wi, xi, m, n](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    const Tensor& W = t.v(wi);
    const Tensor& X = t.v(xi);
    Tensor& dW = t.g(wi);
    Tensor& dX = t.g(xi);
    for (int i = 0; i < m; ++i) {
      double d = dy.at(i);
      if (d == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        dW.at(i, j) += d * X.at(j);
        dX.at(j) += d * W.at(i, j);
      }
    }
  }, "matvec");
}

Var Tape::vecmat(Var x, Var w) {
  const Tensor& X = v(x.id);
  const Tensor& W = v(w.id);
  if (X.rank() != 1 || W.rank() != 2 || X.size() != W.rows()) {
    throw ShapeError("vecmat: shape mismatch " + X.shape_str() + " vs " +
                     W.shape_str());
  }
  int m = W.rows(), n = W.cols();
  Tensor y({n});
  for (int i = 0; i < m; ++i) {
    double xv = X.at(i);
    for (int j = 0; j < n; ++j) y.at(j) += xv * W.at(i, j);
  }
  check_finite(y, "vecmat");
  int wi = w.id, xi = x.id;
  return push(std::move(y), [wi, xi, m, n](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    const Tensor& W = t.v(wi);
    const Tensor& X = t.v(xi);
    Tensor& dW = t.g(wi);
    Tensor& dX = t.g(xi);
    for (int j = 0; j < n; ++j) {
      double d = dy.at(j);
      if (d == 0.0) continue;
      for (int i = 0; i < m; ++i) {
        dW.at(i, j) += d * X.at(i);
        dX.at(i) += d * W.at(i, j);
      }
    }
  }, "vecmat");
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = v(a.id);
  const Tensor& B = v(b.id);
  require_same_shape(A, B, "add");
  Tensor y = A;
  for (int i = 0; i < y.size(); ++i) y.at(i) += B.at(i);
  check_finite(y, "add");
  int ai = a.id, bi = b.id;
  return push(std::move(y), [ai, bi](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    Tensor& dA = t.g(ai);
    Tensor& dB = t.g(bi);
    for (int i = 0; i < dy.size(); ++i) {
      dA.at(i) += dy.at(i);
      dB.at(i) += dy.at(i);
    }
  }, "add");
}

Var Tape::sub(Var a, Var b) {
  const Tensor& A = v(a.id);
  const Tensor& B = v(b.id);
  require_same_shape(A, B, "sub");
  Tensor y = A;
  for (int i = 0; i < y.size(); ++i) y.at(i) -= B.at(i);
  check_finite(y, "sub");
  int ai = a.id, bi = b.id;
  return push(std::move(y), [ai, bi](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    Tensor& dA = t.g(ai);
    Tensor& dB = t.g(bi);
    for (int i = 0; i < dy.size(); ++i) {
      dA.at(i) += dy.at(i);
      dB.at(i) -= dy.at(i);
    }
  }, "sub");
}

Var Tape::mul(Var a, Var b) {
  const Tensor& A = v(a.id);
  const Tensor& B = v(b.id);
  require_same_shape(A, B, "mul");
  Tensor y = A;
  for (int i = 0; i < y.size(); ++i) y.at(i) *= B.at(i);
  check_finite(y, "mul");
  int ai = a.id, bi = b.id;
  return push(std::move(y), [ai, bi](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    const Tensor& A = t.v(ai);
    const Tensor& B = t.v(bi);
    Tensor& dA = t.g(ai);
    Tensor& dB = t.g(bi);
    for (int i = 0; i < dy.size(); ++i) {
      dA.at(i) += dy.at(i) * B.at(i);
      dB.at(i) += dy.at(i) * A.at(i);
    }
  }, "mul");
}

Var Tape::scale(Var a, double c) {
  Tensor y = v(a.id);
  for (double& x : y.v) x *= c;
  check_finite(y, "scale");
  int ai = a.id;
  return push(std::move(y), [ai, c](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    Tensor& dA = t.g(ai);
    for (int i = 0; i < dy.size(); ++i) dA.at(i) += c * dy.at(i);
  }, "scale");
}

Var Tape::add_many(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("add_many: empty input list");
  for (const Var& x : xs) require_same_shape(v(xs[0].id), v(x.id), "add_many");
  // Pairwise-tree summation bounds accumulation nondeterminism.
  std::vector<Tensor> level;
  level.reserve(xs.size());
  for (const Var& x : xs) level.push_back(v(x.id));
  while (level.size() > 1) {
    std::vector<Tensor> next;
    for (size_t i = 0; i + 1 < level.size(); i += 2) {
      Tensor s = level[i];
      for (int k = 0; k < s.size(); ++k) s.at(k) += level[i + 1].at(k);
      next.push_back(std::move(s));
    }
    if (level.size() % 2) next.push_back(std::move(level.back()));
    level = std::move(next);
  }
  Tensor y = std::move(level[0]);
  check_finite(y, "add_many");
  std::vector<int> ids;
  for (const Var& x : xs) ids.push_back(x.id);
  return push(std::move(y), [ids](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    for (int id : ids) {
      Tensor& dX = t.g(id);
      for (int i = 0; i < dy.size(); ++i) dX.at(i) += dy.at(i);
    }
  }, "add_many");
}

Var Tape::concat(Var a, Var b) {
  const Tensor& A = v(a.id);
  const Tensor& B = v(b.id);
  if (A.rank() != 1 || B.rank() != 1) throw ShapeError("concat: vectors only");
  Tensor y({A.size() + B.size()});
  std::copy(A.v.begin(), A.v.end(), y.v.begin());
  std::copy(B.v.begin(), B.v.end(), y.v.begin() + A.size());
  int ai = a.id, bi = b.id, na = A.size();
  return push(std::move(y), [ai, bi, na](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    Tensor& dA = t.g(ai);
    Tensor& dB = t.g(bi);
    for (int i = 0; i < na; ++i) dA.at(i) += dy.at(i);
    for (int i = na; i < dy.size(); ++i) dB.at(i - na) += dy.at(i);
  }, "concat");
}

Var Tape::slice(Var x, int start, int len) {
  const Tensor& X = v(x.id);
  if (X.rank() != 1 || start < 0 || len < 0 || start + len > X.size()) {
    throw ShapeError("slice: out of range for " + X.shape_str());
  }
  Tensor y({len});
  std::copy(X.v.begin() + start, X.v.begin() + start + len, y.v.begin());
  int xi = x.id;
  return push(std::move(y), [xi, start, len](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    Tensor& dX = t.g(xi);
    for (int i = 0; i < len; ++i) dX.at(start + i) += dy.at(i);
  }, "slice");
}

Var Tape::sigmoid(Var x) {
  Tensor y = v(x.id);
  for (double& e : y.v) e = 1.0 / (1.0 + std::exp(-e));
  check_finite(y, "sigmoid");
  int xi = x.id;
  return push(std::move(y), [xi](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    const Tensor& y = t.v(t.out_);
    Tensor& dX = t.g(xi);
    for (int i = 0; i < dy.size(); ++i)
      dX.at(i) += dy.at(i) * y.at(i) * (1.0 - y.at(i));
  }, "sigmoid");
}

Var Tape::tanh(Var x) {
  Tensor y = v(x.id);
  for (double& e : y.v) e = std::tanh(e);
  check_finite(y, "tanh");
  int xi = x.id;
  return push(std::move(y), [xi](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    const Tensor& y = t.v(t.out_);
    Tensor& dX = t.g(xi);
    for (int i = 0; i < dy.size(); ++i)
      dX.at(i) += dy.at(i) * (1.0 - y.at(i) * y.at(i));
  }, "tanh");
}

Var Tape::relu(Var x) {
  Tensor y = v(x.id);
  for (double& e : y.v) e = e > 0 ? e : 0.0;
  int xi = x.id;
  return push(std::move(y), [xi](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    const Tensor& X = t.v(xi);
    Tensor& dX = t.g(xi);
    for (int i = 0; i < dy.size(); ++i)
      if (X.at(i) > 0) dX.at(i) += dy.at(i);
  }, "relu");
}

Var Tape::softmax(Var x) {
  const Tensor& X = v(x.id);
  if (X.rank() != 1) throw ShapeError("softmax: vector expected");
  double mx = *std::max_element(X.v.begin(), X.v.end());
  Tensor y = X;
  double z = 0;
  for (double& e : y.v) {
    e = std::exp(e - mx);
    z += e;
  }
  for (double& e : y.v) e /= z;
  check_finite(y, "softmax");
  int xi = x.id;
  return push(std::move(y), [xi](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    const Tensor& p = t.v(t.out_);
    Tensor& dX = t.g(xi);
    double dp = 0;
    for (int i = 0; i < dy.size(); ++i) dp += dy.at(i) * p.at(i);
    for (int i = 0; i < dy.size(); ++i)
      dX.at(i) += p.at(i) * (dy.at(i) - dp);
  }, "softmax");
}

Var Tape::logsumexp(Var x) {
  const Tensor& X = v(x.id);
  if (X.rank() != 1) throw ShapeError("logsumexp: vector expected");
  double mx = *std::max_element(X.v.begin(), X.v.end());
  double z = 0;
  for (double e : X.v) z += std::exp(e - mx);
  Tensor y = Tensor::scalar(mx + std::log(z));
  check_finite(y, "logsumexp");
  int xi = x.id;
  return push(std::move(y), [xi](Tape& t) {
    double d = t.g(t.out_).at(0);
    if (d == 0.0) return;
    const Tensor& X = t.v(xi);
    double lse = t.v(t.out_).at(0);
    Tensor& dX = t.g(xi);
    for (int i = 0; i < X.size(); ++i) dX.at(i) += d * std::exp(X.at(i) - lse);
  }, "logsumexp");
}

Var Tape::dot(Var a, Var b) {
  const Tensor& A = v(a.id);
  const Tensor& B = v(b.id);
  require_same_shape(A, B, "dot");
  double s = 0;
  for (int i = 0; i < A.size(); ++i) s += A.at(i) * B.at(i);
  Tensor y = Tensor::scalar(s);
  check_finite(y, "dot");
  int ai = a.id, bi = b.id;
  return push(std::move(y), [ai, bi](Tape& t) {
    double d = t.g(t.out_).at(0);
    const Tensor& A = t.v(ai);
    const Tensor& B = t.v(bi);
    Tensor& dA = t.g(ai);
    Tensor& dB = t.g(bi);
    for (int i = 0; i < A.size(); ++i) {
      dA.at(i) += d * B.at(i);
      dB.at(i) += d * A.at(i);
    }
  }, "dot");
}

Var Tape::stack(const std::vector<Var>& scalars) {
  if (scalars.empty()) throw ShapeError("stack: empty input list");
  Tensor y({static_cast<int>(scalars.size())});
  std::vector<int> ids;
  for (size_t i = 0; i < scalars.size(); ++i) {
    const Tensor& s = v(scalars[i].id);
    if (s.size() != 1) throw ShapeError("stack: scalar inputs expected");
    y.at(static_cast<int>(i)) = s.at(0);
    ids.push_back(scalars[i].id);
  }
  return push(std::move(y), [ids](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    for (size_t i = 0; i < ids.size(); ++i)
      t.g(ids[i]).at(0) += dy.at(static_cast<int>(i));
  }, "stack");
}

Var Tape::pick(Var x, int i) {
  const Tensor& X = v(x.id);
  if (X.rank() != 1 || i < 0 || i >= X.size())
    throw ShapeError("pick: index out of range");
  int xi = x.id;
  return push(Tensor::scalar(X.at(i)), [xi, i](Tape& t) {
    t.g(xi).at(i) += t.g(t.out_).at(0);
  }, "pick");
}

Var Tape::pick2(Var m, int i, int j) {
  const Tensor& M = v(m.id);
  if (M.rank() != 2 || i < 0 || i >= M.rows() || j < 0 || j >= M.cols())
    throw ShapeError("pick2: index out of range");
  int mi = m.id;
  return push(Tensor::scalar(M.at(i, j)), [mi, i, j](Tape& t) {
    t.g(mi).at(i, j) += t.g(t.out_).at(0);
  }, "pick2");
}

Var Tape::row(Var m, int i) {
  const Tensor& M = v(m.id);
  if (M.rank() != 2 || i < 0 || i >= M.rows())
    throw ShapeError("row: index out of range");
  int n = M.cols();
  Tensor y({n});
  for (int j = 0; j < n; ++j) y.at(j) = M.at(i, j);
  int mi = m.id;
  return push(std::move(y), [mi, i, n](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    Tensor& dM = t.g(mi);
    for (int j = 0; j < n; ++j) dM.at(i, j) += dy.at(j);
  }, "row");
}

Var Tape::col(Var m, int j) {
  const Tensor& M = v(m.id);
  if (M.rank() != 2 || j < 0 || j >= M.cols())
    throw ShapeError("col: index out of range");
  int n = M.rows();
  Tensor y({n});
  for (int i = 0; i < n; ++i) y.at(i) = M.at(i, j);
  int mi = m.id;
  return push(std::move(y), [mi, j, n](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    Tensor& dM = t.g(mi);
    for (int i = 0; i < n; ++i) dM.at(i, j) += dy.at(i);
  }, "col");
}

Var Tape::gate_scale(Var gv, Var x) {
  const Tensor& G = v(gv.id);
  const Tensor& X = v(x.id);
  if (G.size() != 1) throw ShapeError("gate_scale: scalar gate expected");
  Tensor y = X;
  for (double& e : y.v) e *= G.at(0);
  check_finite(y, "gate_scale");
  int gi = gv.id, xi = x.id;
  return push(std::move(y), [gi, xi](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    const Tensor& X = t.v(xi);
    double g = t.v(gi).at(0);
    Tensor& dX = t.g(xi);
    double dg = 0;
    for (int i = 0; i < dy.size(); ++i) {
      dX.at(i) += g * dy.at(i);
      dg += dy.at(i) * X.at(i);
    }
    t.g(gi).at(0) += dg;
  }, "gate_scale");
}

Var Tape::add_scalar(Var x, Var s) {
  const Tensor& X = v(x.id);
  const Tensor& S = v(s.id);
  if (S.size() != 1) throw ShapeError("add_scalar: scalar expected");
  Tensor y = X;
  for (double& e : y.v) e += S.at(0);
  check_finite(y, "add_scalar");
  int xi = x.id, si = s.id;
  return push(std::move(y), [xi, si](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    Tensor& dX = t.g(xi);
    double acc = 0;
    for (int i = 0; i < dy.size(); ++i) {
      dX.at(i) += dy.at(i);
      acc += dy.at(i);
    }
    t.g(si).at(0) += acc;
  }, "add_scalar");
}

Var Tape::sum(Var x) {
  const Tensor& X = v(x.id);
  double s = 0;
  for (double e : X.v) s += e;
  int xi = x.id;
  Tensor y = Tensor::scalar(s);
  check_finite(y, "sum");
  return push(std::move(y), [xi](Tape& t) {
    double d = t.g(t.out_).at(0);
    Tensor& dX = t.g(xi);
    for (int i = 0; i < dX.size(); ++i) dX.at(i) += d;
  }, "sum");
}

Var Tape::mean(Var x) {
  int n = v(x.id).size();
  return scale(sum(x), 1.0 / n);
}

Tensor Tape::make_dropout_mask(int n, double rate, std::mt19937_64& rng) {
  Tensor mask({n});
  if (rate <= 0.0) {
    for (double& e : mask.v) e = 1.0;
    return mask;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double keep = 1.0 - rate;
  for (double& e : mask.v) e = (u(rng) < keep) ? 1.0 / keep : 0.0;
  return mask;
}

Var Tape::dropout(Var x, double rate, std::mt19937_64& rng, bool train) {
  if (!train || rate <= 0.0) return x;
  return dropout_mask(x, make_dropout_mask(v(x.id).size(), rate, rng));
}

Var Tape::dropout_mask(Var x, const Tensor& mask) {
  const Tensor& X = v(x.id);
  require_same_shape(X, mask, "dropout");
  Tensor y = X;
  for (int i = 0; i < y.size(); ++i) y.at(i) *= mask.at(i);
  int xi = x.id;
  Tensor m = mask;
  return push(std::move(y), [xi, m](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    Tensor& dX = t.g(xi);
    for (int i = 0; i < dy.size(); ++i) dX.at(i) += dy.at(i) * m.at(i);
  }, "dropout");
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& X = v(x.id);
  const Tensor& G = v(gain.id);
  const Tensor& B = v(bias.id);
  require_same_shape(X, G, "layer_norm");
  require_same_shape(X, B, "layer_norm");
  if (eps <= 0) throw ValidationError("layer_norm: eps must be positive");
  int n = X.size();
  double mu = 0;
  for (double e : X.v) mu += e;
  mu /= n;
  double var = 0;
  for (double e : X.v) var += (e - mu) * (e - mu);
  var /= n;  // population variance
  double inv = 1.0 / std::sqrt(var + eps);
  Tensor y({n});
  for (int i = 0; i < n; ++i)
    y.at(i) = G.at(i) * (X.at(i) - mu) * inv + B.at(i);
  check_finite(y, "layer_norm");
  int xi = x.id, gi = gain.id, bi = bias.id;
  return push(std::move(y), [xi, gi, bi, mu, inv, n](Tape& t) {
    const Tensor& dy = t.g(t.out_);
    const Tensor& X = t.v(xi);
    const Tensor& G = t.v(gi);
    Tensor& dX = t.g(xi);
    Tensor& dG = t.g(gi);
    Tensor& dB = t.g(bi);
    // xhat_i = (x_i - mu) * inv;  dx from the standard layer-norm backward.
    double mean_h = 0, mean_hx = 0;
    std::vector<double> h(n), xh(n);
    for (int i = 0; i < n; ++i) {
      xh[i] = (X.at(i) - mu) * inv;
      h[i] = dy.at(i) * G.at(i);
      mean_h += h[i];
      mean_hx += h[i] * xh[i];
      dG.at(i) += dy.at(i) * xh[i];
      dB.at(i) += dy.at(i);
    }
    mean_h /= n;
    mean_hx /= n;
    for (int i = 0; i < n; ++i)
      dX.at(i) += inv * (h[i] - mean_h - xh[i] * mean_hx);
  }, "layer_norm");
}

void Tape::backward(Var loss) {
  if (!loss.valid() || loss.id >= size())
    throw ValidationError("backward: invalid loss ref");
  if (v(loss.id).size() != 1)
    throw ValidationError("backward: loss must be a scalar");
  g(loss.id).at(0) = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    if (!nodes_[i].back) continue;
    out_ = i;
    nodes_[i].back(*this);
  }
  for (const Node& n : nodes_) {
    if (!n.grad.all_finite())
      throw NumericError("non-finite gradient at node '" + n.name + "'");
  }
}

}  // namespace spangcn

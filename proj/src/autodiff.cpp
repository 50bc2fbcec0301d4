#include "accident/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "accident/errors.hpp"
#include "accident/kernels/kernels.hpp"

namespace accident::ad {

// ---------------------------------------------------------------------------
// ParameterSet

Parameter& ParameterSet::add(std::string name, std::string group, Matrix init) {
  if (contains(name)) throw ConfigError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->group = std::move(group);
  p->grad = Matrix(init.rows(), init.cols());
  p->value = std::move(init);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterSet::at(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return *p;
  throw ConfigError("unknown parameter: " + name);
}

const Parameter& ParameterSet::at(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return *p;
  throw ConfigError("unknown parameter: " + name);
}

bool ParameterSet::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const auto& p) { return p->name == name; });
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

void ParameterSet::set_trainable(const std::string& group, bool trainable) {
  for (auto& p : params_)
    if (p->group == group) p->trainable = trainable;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

// ---------------------------------------------------------------------------
// Tape

const Matrix& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, nullptr, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(Parameter& p) {
  const bool needs = record_ && p.trainable;
  nodes_.push_back(Node{p.value, {}, needs, nullptr, needs ? &p : nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::push(Matrix value, std::initializer_list<Var> parents, Backward backward) {
  bool needs = false;
  if (record_) {
    for (const Var& v : parents) needs = needs || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : nullptr, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::push(Matrix value, const std::vector<Var>& parents, Backward backward) {
  bool needs = false;
  if (record_) {
    for (const Var& v : parents) needs = needs || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : nullptr, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root, double seed) {
  if (!record_) throw ConfigError("backward() on a non-recording tape");
  if (!nodes_[root.id()].requires_grad) return;
  grad(root.id()).fill(seed);
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) {
      Matrix& pg = n.param->grad;
      if (!pg.same_shape(n.grad)) pg = Matrix(n.grad.rows(), n.grad.cols());
      kernels::active().axpy(pg.size(), 1.0, n.grad.data(), pg.data());
    }
  }
}

// ---------------------------------------------------------------------------
// Ops

namespace {

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(op) + ": " + detail);
}

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void accumulate(Matrix& dst, const Matrix& src, double alpha = 1.0) {
  kernels::active().axpy(dst.size(), alpha, src.data(), dst.data());
}

}  // namespace

Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require(av.cols() == bv.rows(), "matmul", dims(av) + " * " + dims(bv));
  Tape& t = *a.tape();
  return t.push(accident::matmul(av, bv), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    const auto& k = kernels::active();
    if (t.needs_grad(a)) k.gemm_nt(av.rows(), av.cols(), bv.cols(), g.data(), bv.data(), t.grad(a).data());
    if (t.needs_grad(b)) k.gemm_tn(bv.rows(), bv.cols(), av.rows(), av.data(), g.data(), t.grad(b).data());
  });
}

Var matmul_nt(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require(av.cols() == bv.cols(), "matmul_nt", dims(av) + " * " + dims(bv) + "^T");
  Tape& t = *a.tape();
  return t.push(accident::matmul_nt(av, bv), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    const auto& k = kernels::active();
    if (t.needs_grad(a)) k.gemm_nn(av.rows(), av.cols(), bv.rows(), g.data(), bv.data(), t.grad(a).data());
    if (t.needs_grad(b)) k.gemm_tn(bv.rows(), bv.cols(), av.rows(), g.data(), av.data(), t.grad(b).data());
  });
}

Var add(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require(av.same_shape(bv), "add", dims(av) + " + " + dims(bv));
  Matrix out = av;
  accumulate(out, bv);
  return a.tape()->push(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(a)) accumulate(t.grad(a), g);
    if (t.needs_grad(b)) accumulate(t.grad(b), g);
  });
}

Var sub(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require(av.same_shape(bv), "sub", dims(av) + " - " + dims(bv));
  Matrix out = av;
  accumulate(out, bv, -1.0);
  return a.tape()->push(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(a)) accumulate(t.grad(a), g);
    if (t.needs_grad(b)) accumulate(t.grad(b), g, -1.0);
  });
}

Var mul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require(av.same_shape(bv), "mul", dims(av) + " .* " + dims(bv));
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape()->push(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    if (t.needs_grad(a)) {
      Matrix& ga = t.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.needs_grad(b)) {
      Matrix& gb = t.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var add_row(Var a, Var bias) {
  const Matrix& av = a.value();
  const Matrix& bv = bias.value();
  require(bv.rows() == 1 && bv.cols() == av.cols(), "add_row", dims(av) + " + " + dims(bv));
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  return a.tape()->push(std::move(out), {a, bias}, [a, bias](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(a)) accumulate(t.grad(a), g);
    if (t.needs_grad(bias)) {
      Matrix& gb = t.grad(bias);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
    }
  });
}

Var scale(Var a, double s) {
  Matrix out = a.value();
  for (double& v : out.values()) v *= s;
  return a.tape()->push(std::move(out), {a}, [a, s](Tape& t, int self) {
    accumulate(t.grad(a), t.grad(self), s);
  });
}

Var scale_by(Var a, Var s) {
  require(s.rows() == 1 && s.cols() == 1, "scale_by", "scale must be 1x1");
  const double sv = s.scalar();
  Matrix out = a.value();
  for (double& v : out.values()) v *= sv;
  return a.tape()->push(std::move(out), {a, s}, [a, s](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const double sv = t.value(s)[0];
    if (t.needs_grad(a)) accumulate(t.grad(a), g, sv);
    if (t.needs_grad(s)) {
      t.grad(s)[0] += kernels::active().dot(g.size(), g.data(), t.value(a).data());
    }
  });
}

Var tanh(Var a) {
  Matrix out = a.value();
  for (double& v : out.values()) v = std::tanh(v);
  return a.tape()->push(std::move(out), {a}, [a](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    Matrix& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Var a) {
  Matrix out = a.value();
  for (double& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  return a.tape()->push(std::move(out), {a}, [a](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    Matrix& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var sum_all(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape()->push(Matrix(1, 1, s), {a}, [a](Tape& t, int self) {
    const double g = t.grad(self)[0];
    for (double& v : t.grad(a).values()) v += g;
  });
}

namespace {

// Softmax over `count` entries spaced by `stride`, starting at `base`.
void softmax_strided(const double* x, double* y, std::size_t count, std::size_t stride,
                     const std::uint8_t* mask) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i)
    if (mask == nullptr || mask[i]) mx = std::max(mx, x[i * stride]);
  if (!std::isfinite(mx)) {
    for (std::size_t i = 0; i < count; ++i) y[i * stride] = 0.0;
    return;
  }
  double z = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double e = (mask == nullptr || mask[i]) ? std::exp(x[i * stride] - mx) : 0.0;
    y[i * stride] = e;
    z += e;
  }
  for (std::size_t i = 0; i < count; ++i) y[i * stride] /= z;
}

void softmax_strided_backward(const double* y, const double* g, double* gx, std::size_t count,
                              std::size_t stride) {
  double dotp = 0.0;
  for (std::size_t i = 0; i < count; ++i) dotp += y[i * stride] * g[i * stride];
  for (std::size_t i = 0; i < count; ++i)
    gx[i * stride] += y[i * stride] * (g[i * stride] - dotp);
}

}  // namespace

Var softmax_rows(Var a, const std::vector<std::uint8_t>& mask) {
  const Matrix& av = a.value();
  require(mask.empty() || mask.size() == av.size(), "softmax_rows", "mask size mismatch");
  Matrix out(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    softmax_strided(av.data() + r * av.cols(), out.data() + r * av.cols(), av.cols(), 1,
                    mask.empty() ? nullptr : mask.data() + r * av.cols());
  }
  return a.tape()->push(std::move(out), {a}, [a](Tape& t, int self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const std::size_t o = r * y.cols();
      softmax_strided_backward(y.data() + o, g.data() + o, ga.data() + o, y.cols(), 1);
    }
  });
}

Var softmax_objects(Var a, std::size_t n_objects, const std::vector<std::uint8_t>& mask) {
  const Matrix& av = a.value();
  require(n_objects > 0 && av.rows() % n_objects == 0, "softmax_objects", "rows not divisible by N");
  const std::size_t frames = av.rows() / n_objects;
  require(mask.size() == frames * n_objects, "softmax_objects", "mask must be T x N");
  const std::size_t d = av.cols();
  Matrix out(av.rows(), d);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t o = t * n_objects * d + c;
      softmax_strided(av.data() + o, out.data() + o, n_objects, d, mask.data() + t * n_objects);
    }
  }
  return a.tape()->push(std::move(out), {a}, [a, n_objects, frames, d](Tape& t, int self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t c = 0; c < d; ++c) {
        const std::size_t o = f * n_objects * d + c;
        softmax_strided_backward(y.data() + o, g.data() + o, ga.data() + o, n_objects, d);
      }
    }
  });
}

Var squash_rows(Var a) {
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  std::vector<double> norms(av.rows());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    auto x = av.row(r);
    const double n = std::sqrt(kernels::active().dot(x.size(), x.data(), x.data()));
    norms[r] = n;
    const double s = n / (1.0 + n * n);
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = s * x[c];
  }
  return a.tape()->push(std::move(out), {a}, [a, norms = std::move(norms)](Tape& t, int self) {
    const Matrix& x = t.value(a);
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double n = norms[r];
      if (n == 0.0) continue;  // Jacobian of x*|x|/(1+|x|^2) vanishes at 0
      const double s = n / (1.0 + n * n);
      const double ds = (1.0 - n * n) / ((1.0 + n * n) * (1.0 + n * n));
      double xg = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) xg += x(r, c) * g(r, c);
      const double k = ds / n * xg;
      for (std::size_t c = 0; c < x.cols(); ++c) ga(r, c) += s * g(r, c) + k * x(r, c);
    }
  });
}

Var l2_normalize_rows(Var a) {
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  std::vector<double> norms(av.rows());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    auto x = av.row(r);
    const double n = std::sqrt(kernels::active().dot(x.size(), x.data(), x.data()));
    norms[r] = n;
    if (n == 0.0) continue;
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = x[c] / n;
  }
  return a.tape()->push(std::move(out), {a}, [a, norms = std::move(norms)](Tape& t, int self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      if (norms[r] == 0.0) continue;
      double yg = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) yg += y(r, c) * g(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) += (g(r, c) - y(r, c) * yg) / norms[r];
    }
  });
}

Var concat_cols(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require(av.rows() == bv.rows(), "concat_cols", dims(av) + " | " + dims(bv));
  const std::size_t ca = av.cols(), cb = bv.cols();
  Matrix out(av.rows(), ca + cb);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy_n(av.data() + r * ca, ca, out.data() + r * (ca + cb));
    std::copy_n(bv.data() + r * cb, cb, out.data() + r * (ca + cb) + ca);
  }
  return a.tape()->push(std::move(out), {a, b}, [a, b, ca, cb](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      if (t.needs_grad(a)) kernels::active().axpy(ca, 1.0, g.data() + r * (ca + cb), t.grad(a).data() + r * ca);
      if (t.needs_grad(b)) kernels::active().axpy(cb, 1.0, g.data() + r * (ca + cb) + ca, t.grad(b).data() + r * cb);
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Matrix& av = a.value();
  require(begin <= end && end <= av.cols(), "slice_cols", "range out of bounds");
  const std::size_t w = end - begin;
  Matrix out(av.rows(), w);
  for (std::size_t r = 0; r < av.rows(); ++r)
    std::copy_n(av.data() + r * av.cols() + begin, w, out.data() + r * w);
  return a.tape()->push(std::move(out), {a}, [a, begin, w](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < w; ++c) ga(r, begin + c) += g(r, c);
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Matrix& av = a.value();
  require(begin + count <= av.rows(), "slice_rows", "range out of bounds");
  Matrix out(count, av.cols());
  std::copy_n(av.data() + begin * av.cols(), count * av.cols(), out.data());
  return a.tape()->push(std::move(out), {a}, [a, begin](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    kernels::active().axpy(g.size(), 1.0, g.data(), t.grad(a).data() + begin * g.cols());
  });
}

Var stack_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "stack_rows", "no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == cols, "stack_rows", "column count mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy_n(p.value().data(), p.value().size(), out.data() + off);
    off += p.value().size();
  }
  return parts.front().tape()->push(std::move(out), parts, [parts](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    std::size_t off = 0;
    for (const Var& p : parts) {
      const std::size_t n = t.value(p).size();
      if (t.needs_grad(p)) kernels::active().axpy(n, 1.0, g.data() + off, t.grad(p).data());
      off += n;
    }
  });
}

Var gather_rows(Var a, const std::vector<std::size_t>& index) {
  const Matrix& av = a.value();
  Matrix out(index.size(), av.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] < av.rows(), "gather_rows", "index out of range");
    std::copy_n(av.data() + index[i] * av.cols(), av.cols(), out.data() + i * av.cols());
  }
  return a.tape()->push(std::move(out), {a}, [a, index](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    for (std::size_t i = 0; i < index.size(); ++i)
      kernels::active().axpy(g.cols(), 1.0, g.data() + i * g.cols(), ga.data() + index[i] * g.cols());
  });
}

Var scatter_rows(Var a, const std::vector<std::size_t>& index, std::size_t rows) {
  const Matrix& av = a.value();
  require(index.size() == av.rows(), "scatter_rows", "index length must equal input rows");
  Matrix out(rows, av.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] < rows, "scatter_rows", "index out of range");
    std::copy_n(av.data() + i * av.cols(), av.cols(), out.data() + index[i] * av.cols());
  }
  return a.tape()->push(std::move(out), {a}, [a, index](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    for (std::size_t i = 0; i < index.size(); ++i)
      kernels::active().axpy(g.cols(), 1.0, g.data() + index[i] * g.cols(), ga.data() + i * g.cols());
  });
}

Var masked_mean_objects(Var a, std::size_t n_objects, const std::vector<std::uint8_t>& mask) {
  const Matrix& av = a.value();
  require(n_objects > 0 && av.rows() % n_objects == 0, "masked_mean_objects", "rows not divisible by N");
  const std::size_t frames = av.rows() / n_objects;
  require(mask.size() == frames * n_objects, "masked_mean_objects", "mask must be T x N");
  const std::size_t d = av.cols();
  std::vector<double> inv(frames, 0.0);
  Matrix out(frames, d);
  for (std::size_t t = 0; t < frames; ++t) {
    std::size_t count = 0;
    for (std::size_t n = 0; n < n_objects; ++n) count += mask[t * n_objects + n] ? 1 : 0;
    if (count == 0) continue;
    inv[t] = 1.0 / static_cast<double>(count);
    for (std::size_t n = 0; n < n_objects; ++n) {
      if (!mask[t * n_objects + n]) continue;
      kernels::active().axpy(d, inv[t], av.data() + (t * n_objects + n) * d, out.data() + t * d);
    }
  }
  return a.tape()->push(std::move(out), {a}, [a, n_objects, mask, inv = std::move(inv), d](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    for (std::size_t f = 0; f < g.rows(); ++f) {
      for (std::size_t n = 0; n < n_objects; ++n) {
        if (!mask[f * n_objects + n]) continue;
        kernels::active().axpy(d, inv[f], g.data() + f * d, ga.data() + (f * n_objects + n) * d);
      }
    }
  });
}

Var pool_rows(Var a, std::size_t factor) {
  const Matrix& av = a.value();
  require(factor >= 1, "pool_rows", "factor must be >= 1");
  const std::size_t rows = av.rows();
  const std::size_t blocks = (rows + factor - 1) / factor;
  Matrix out(blocks, av.cols());
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * factor, hi = std::min(rows, lo + factor);
    const double w = 1.0 / static_cast<double>(hi - lo);
    for (std::size_t r = lo; r < hi; ++r)
      kernels::active().axpy(av.cols(), w, av.data() + r * av.cols(), out.data() + b * av.cols());
  }
  return a.tape()->push(std::move(out), {a}, [a, factor, rows](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    for (std::size_t b = 0; b < g.rows(); ++b) {
      const std::size_t lo = b * factor, hi = std::min(rows, lo + factor);
      const double w = 1.0 / static_cast<double>(hi - lo);
      for (std::size_t r = lo; r < hi; ++r)
        kernels::active().axpy(g.cols(), w, g.data() + b * g.cols(), ga.data() + r * g.cols());
    }
  });
}

Var repeat_rows(Var a, std::size_t factor, std::size_t rows) {
  const Matrix& av = a.value();
  require(factor >= 1 && (rows + factor - 1) / factor == av.rows(), "repeat_rows",
          "row count inconsistent with factor");
  Matrix out(rows, av.cols());
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(av.data() + (r / factor) * av.cols(), av.cols(), out.data() + r * av.cols());
  return a.tape()->push(std::move(out), {a}, [a, factor](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    for (std::size_t r = 0; r < g.rows(); ++r)
      kernels::active().axpy(g.cols(), 1.0, g.data() + r * g.cols(), ga.data() + (r / factor) * g.cols());
  });
}

Var frame_object_logits(Var q, Var k, std::size_t n_objects, double scale) {
  const Matrix& qv = q.value();
  const Matrix& kv = k.value();
  require(qv.cols() == kv.cols() && kv.rows() == qv.rows() * n_objects, "frame_object_logits",
          "q " + dims(qv) + " vs k " + dims(kv));
  const std::size_t frames = qv.rows(), d = qv.cols();
  Matrix out(frames, n_objects);
  const auto& kr = kernels::active();
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t n = 0; n < n_objects; ++n)
      out(t, n) = scale * kr.dot(d, qv.data() + t * d, kv.data() + (t * n_objects + n) * d);
  return q.tape()->push(std::move(out), {q, k}, [q, k, n_objects, scale](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& qv = t.value(q);
    const Matrix& kv = t.value(k);
    const std::size_t d = qv.cols();
    const auto& kr = kernels::active();
    for (std::size_t f = 0; f < qv.rows(); ++f) {
      for (std::size_t n = 0; n < n_objects; ++n) {
        const double w = scale * g(f, n);
        if (w == 0.0) continue;
        if (t.needs_grad(q)) kr.axpy(d, w, kv.data() + (f * n_objects + n) * d, t.grad(q).data() + f * d);
        if (t.needs_grad(k)) kr.axpy(d, w, qv.data() + f * d, t.grad(k).data() + (f * n_objects + n) * d);
      }
    }
  });
}

Var weight_rows(Var w, Var v) {
  const Matrix& wv = w.value();
  const Matrix& vv = v.value();
  require(wv.rows() == vv.rows(), "weight_rows", "frame counts differ");
  const std::size_t frames = wv.rows(), n_objects = wv.cols(), d = vv.cols();
  Matrix out(frames * n_objects, d);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t n = 0; n < n_objects; ++n)
      kernels::active().axpy(d, wv(t, n), vv.data() + t * d, out.data() + (t * n_objects + n) * d);
  return w.tape()->push(std::move(out), {w, v}, [w, v](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& wv = t.value(w);
    const Matrix& vv = t.value(v);
    const std::size_t n_objects = wv.cols(), d = vv.cols();
    const auto& kr = kernels::active();
    for (std::size_t f = 0; f < wv.rows(); ++f) {
      for (std::size_t n = 0; n < n_objects; ++n) {
        const double* grow = g.data() + (f * n_objects + n) * d;
        if (t.needs_grad(w)) t.grad(w)(f, n) += kr.dot(d, grow, vv.data() + f * d);
        if (t.needs_grad(v)) kr.axpy(d, wv(f, n), grow, t.grad(v).data() + f * d);
      }
    }
  });
}

Var causal_conv1d(Var x, Var w, Var bias) {
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  const Matrix& bv = bias.value();
  const std::size_t cin = xv.cols();
  require(cin > 0 && wv.rows() % cin == 0, "causal_conv1d", "weight rows must be K*Cin");
  const std::size_t taps = wv.rows() / cin, cout = wv.cols(), frames = xv.rows();
  require(bv.rows() == 1 && bv.cols() == cout, "causal_conv1d", "bias must be 1 x Cout");
  Matrix out(frames, cout);
  for (std::size_t r = 0; r < frames; ++r) std::copy_n(bv.data(), cout, out.data() + r * cout);
  const auto& kr = kernels::active();
  for (std::size_t j = 0; j < taps && j < frames; ++j) {
    kr.gemm_nn(frames - j, cout, cin, xv.data(), wv.data() + j * cin * cout, out.data() + j * cout);
  }
  return x.tape()->push(std::move(out), {x, w, bias}, [x, w, bias, taps, cin, cout, frames](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& xv = t.value(x);
    const Matrix& wv = t.value(w);
    const auto& kr = kernels::active();
    for (std::size_t j = 0; j < taps && j < frames; ++j) {
      if (t.needs_grad(x))
        kr.gemm_nt(frames - j, cin, cout, g.data() + j * cout, wv.data() + j * cin * cout, t.grad(x).data());
      if (t.needs_grad(w))
        kr.gemm_tn(cin, cout, frames - j, xv.data(), g.data() + j * cout, t.grad(w).data() + j * cin * cout);
    }
    if (t.needs_grad(bias)) {
      Matrix& gb = t.grad(bias);
      for (std::size_t r = 0; r < frames; ++r) kr.axpy(cout, 1.0, g.data() + r * cout, gb.data());
    }
  });
}

Var gru_step(Var xp, Var h, Var w_hh, Var b_hh) {
  const Matrix& xv = xp.value();
  const Matrix& hv = h.value();
  const Matrix& wv = w_hh.value();
  const std::size_t batch = hv.rows(), hidden = hv.cols();
  require(xv.rows() == batch && xv.cols() == 3 * hidden, "gru_step", "xp must be B x 3H");
  require(wv.rows() == hidden && wv.cols() == 3 * hidden, "gru_step", "w_hh must be H x 3H");
  require(b_hh.rows() == 1 && b_hh.cols() == 3 * hidden, "gru_step", "b_hh must be 1 x 3H");

  struct Cache {
    Matrix hp, r, z, n;
  };
  auto cache = std::make_shared<Cache>();
  cache->hp = Matrix(batch, 3 * hidden);
  for (std::size_t b = 0; b < batch; ++b)
    std::copy_n(b_hh.value().data(), 3 * hidden, cache->hp.data() + b * 3 * hidden);
  kernels::active().gemm_nn(batch, 3 * hidden, hidden, hv.data(), wv.data(), cache->hp.data());
  cache->r = Matrix(batch, hidden);
  cache->z = Matrix(batch, hidden);
  cache->n = Matrix(batch, hidden);
  Matrix out(batch, hidden);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < hidden; ++i) {
      const double r = 1.0 / (1.0 + std::exp(-(xv(b, i) + cache->hp(b, i))));
      const double z = 1.0 / (1.0 + std::exp(-(xv(b, hidden + i) + cache->hp(b, hidden + i))));
      const double n = std::tanh(xv(b, 2 * hidden + i) + r * cache->hp(b, 2 * hidden + i));
      cache->r(b, i) = r;
      cache->z(b, i) = z;
      cache->n(b, i) = n;
      out(b, i) = (1.0 - z) * n + z * hv(b, i);
    }
  }
  return xp.tape()->push(std::move(out), {xp, h, w_hh, b_hh}, [xp, h, w_hh, b_hh, cache](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& hv = t.value(h);
    const std::size_t batch = hv.rows(), hidden = hv.cols();
    Matrix dpre(batch, 3 * hidden);  // gradient w.r.t. gate pre-activations on the input side
    Matrix dhp(batch, 3 * hidden);   // gradient w.r.t. h * W_hh + b_hh
    const bool need_h = t.needs_grad(h);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < hidden; ++i) {
        const double r = cache->r(b, i), z = cache->z(b, i), n = cache->n(b, i);
        const double gi = g(b, i);
        const double dz = gi * (hv(b, i) - n) * z * (1.0 - z);
        const double dn = gi * (1.0 - z) * (1.0 - n * n);
        const double dr = dn * cache->hp(b, 2 * hidden + i) * r * (1.0 - r);
        dpre(b, i) = dr;
        dpre(b, hidden + i) = dz;
        dpre(b, 2 * hidden + i) = dn;
        dhp(b, i) = dr;
        dhp(b, hidden + i) = dz;
        dhp(b, 2 * hidden + i) = dn * r;
        if (need_h) t.grad(h)(b, i) += gi * z;
      }
    }
    const auto& kr = kernels::active();
    if (t.needs_grad(xp)) accumulate(t.grad(xp), dpre);
    if (need_h) kr.gemm_nt(batch, hidden, 3 * hidden, dhp.data(), t.value(w_hh).data(), t.grad(h).data());
    if (t.needs_grad(w_hh)) kr.gemm_tn(hidden, 3 * hidden, batch, hv.data(), dhp.data(), t.grad(w_hh).data());
    if (t.needs_grad(b_hh)) {
      Matrix& gb = t.grad(b_hh);
      for (std::size_t b = 0; b < batch; ++b) kr.axpy(3 * hidden, 1.0, dhp.data() + b * 3 * hidden, gb.data());
    }
  });
}

}  // namespace accident::ad

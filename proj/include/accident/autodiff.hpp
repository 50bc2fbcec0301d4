#pragma once

// Minimal reverse-mode automatic differentiation over dense matrices.
//
// A Tape records nodes in creation order, which is already a topological
// order, so backward() is a single reverse sweep. Parameters live outside the
// tape; leaf nodes created from a trainable Parameter add their gradient into
// Parameter::grad when the sweep reaches them.

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "accident/tensor.hpp"

namespace accident::ad {

struct Parameter {
  std::string name;
  std::string group;  // "stage1", "anticipation" or "localization"
  Matrix value;
  Matrix grad;
  bool trainable = true;
};

/// Ordered, name-addressable parameter registry. Element addresses are stable.
class ParameterSet {
 public:
  Parameter& add(std::string name, std::string group, Matrix init);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();
  /// Mark every parameter of `group` (in)trainable.
  void set_trainable(const std::string& group, bool trainable);
  std::size_t scalar_count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Tape;

/// Handle to a tape node. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const { return value()[0]; }
  int id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  /// With record=false no backward closures are kept (inference mode).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf bound to `p`. Frozen parameters become constants.
  Var param(Parameter& p);

  /// Append an op result. `backward` runs only if some parent needs a gradient.
  Var push(Matrix value, std::initializer_list<Var> parents, Backward backward);
  Var push(Matrix value, const std::vector<Var>& parents, Backward backward);

  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& value(Var v) const { return nodes_[v.id()].value; }
  /// Gradient buffer of a node, zero-initialised on first access.
  Matrix& grad(int id);
  Matrix& grad(Var v) { return grad(v.id()); }
  bool needs_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  void backward(Var root, double seed = 1.0);
  bool recording() const noexcept { return record_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
    Parameter* param = nullptr;
  };
  std::deque<Node> nodes_;
  bool record_;
};

// ---------------------------------------------------------------------------
// Ops. Shapes are checked; mismatches raise ShapeError.

Var matmul(Var a, Var b);     // a * b
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var add_row(Var a, Var bias);  // bias is 1 x cols, broadcast over rows
Var scale(Var a, double s);
Var scale_by(Var a, Var s);  // s is 1 x 1
Var tanh(Var a);
Var sigmoid(Var a);
Var sum_all(Var a);

/// Row-wise softmax. Entries with mask==0 get probability 0; a fully masked
/// row is all zeros. `mask` may be empty (no masking).
Var softmax_rows(Var a, const std::vector<std::uint8_t>& mask = {});

/// Softmax over the object axis of a (T*N) x D tensor, independently for
/// each (t, d). mask is T x N; masked slots receive 0.
Var softmax_objects(Var a, std::size_t n_objects, const std::vector<std::uint8_t>& mask);

/// squash(x) = (|x|^2 / (1 + |x|^2)) * x / |x|, applied per row; squash(0) = 0.
Var squash_rows(Var a);
/// x / |x| per row; zero rows stay zero.
Var l2_normalize_rows(Var a);

Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var stack_rows(const std::vector<Var>& parts);
/// out.row(i) = a.row(index[i])
Var gather_rows(Var a, const std::vector<std::size_t>& index);
/// out has `rows` rows, zero except out.row(index[i]) = a.row(i).
Var scatter_rows(Var a, const std::vector<std::size_t>& index, std::size_t rows);

/// Masked mean over objects: (T*N) x D -> T x D. Frames with no occupied
/// slot produce zeros.
Var masked_mean_objects(Var a, std::size_t n_objects, const std::vector<std::uint8_t>& mask);

/// Block mean over consecutive groups of `factor` rows (last block may be
/// shorter): T x D -> ceil(T/factor) x D.
Var pool_rows(Var a, std::size_t factor);
/// Inverse layout of pool_rows: repeats each row over its block, T rows out.
Var repeat_rows(Var a, std::size_t factor, std::size_t rows);

/// logits[t][n] = scale * <q.row(t), k.row(t*N+n)>. q: T x d, k: (T*N) x d.
Var frame_object_logits(Var q, Var k, std::size_t n_objects, double scale);
/// out.row(t*N+n) = w(t, n) * v.row(t). w: T x N, v: T x d.
Var weight_rows(Var w, Var v);

/// Causal 1-D convolution over rows (time). x: T x Cin, w: (K*Cin) x Cout
/// where block j holds the taps for x[t-j], bias: 1 x Cout. Left zero padding.
Var causal_conv1d(Var x, Var w, Var bias);

/// One GRU step. xp: B x 3H (input projection incl. bias, gate order r,z,n),
/// h: B x H, w_hh: H x 3H, b_hh: 1 x 3H.
Var gru_step(Var xp, Var h, Var w_hh, Var b_hh);

}  // namespace accident::ad

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "accident/autodiff.hpp"
#include "accident/errors.hpp"
#include "accident/training/grad_check.hpp"
#include "test_util.hpp"

using namespace accident;
using ad::Tape;
using ad::Var;

namespace {

/// Scalar readout <R, x> with a fixed random R so every output entry matters.
Var readout(Tape& tape, Var x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ad::sum_all(ad::mul(x, tape.constant(testutil::random_matrix(x.rows(), x.cols(), rng))));
}

struct Fixture {
  ad::ParameterSet params;
  std::mt19937_64 rng{42};
  ad::Parameter& add(const std::string& name, std::size_t r, std::size_t c, double scale = 1.0) {
    return params.add(name, "stage1", testutil::random_matrix(r, c, rng, scale));
  }
};

double check(Fixture& f, const training::Fragment& frag) {
  return training::grad_check(f.params, frag).max_rel_error;
}

}  // namespace

TEST(Autodiff, ElementwiseAndMatmulGradients) {
  Fixture f;
  auto& a = f.add("a", 4, 3);
  auto& b = f.add("b", 3, 5);
  auto& c = f.add("c", 4, 5);
  auto& bias = f.add("bias", 1, 5);
  auto& s = f.add("s", 1, 1);
  EXPECT_LT(check(f, [&](Tape& t) {
              Var x = ad::matmul(t.param(a), t.param(b));
              x = ad::add_row(ad::sub(ad::mul(x, t.param(c)), t.param(c)), t.param(bias));
              x = ad::scale_by(ad::tanh(x), t.param(s));
              x = ad::add(ad::sigmoid(x), ad::scale(x, 0.3));
              return readout(t, ad::matmul_nt(x, t.param(c)), 1);
            }),
            1e-6);
}

TEST(Autodiff, SoftmaxAndNormalisationGradients) {
  Fixture f;
  auto& a = f.add("a", 6, 4);
  std::vector<std::uint8_t> mask{1, 0, 1, 1, 1, 1, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 0, 1, 1};
  EXPECT_LT(check(f, [&](Tape& t) {
              Var x = t.param(a);
              Var y = ad::add(ad::softmax_rows(x, mask), ad::squash_rows(x));
              y = ad::add(y, ad::l2_normalize_rows(x));
              return readout(t, y, 2);
            }),
            1e-6);
}

TEST(Autodiff, ObjectAxisOpsGradients) {
  Fixture f;
  const std::size_t T = 3, N = 4;
  auto& a = f.add("a", T * N, 3);
  auto& q = f.add("q", T, 3);
  auto& v = f.add("v", T, 2);
  std::vector<std::uint8_t> mask{1, 1, 0, 1, 0, 0, 0, 0, 1, 0, 1, 1};
  EXPECT_LT(check(f, [&](Tape& t) {
              Var x = t.param(a);
              Var s = ad::softmax_objects(x, N, mask);
              Var m = ad::masked_mean_objects(ad::mul(s, x), N, mask);
              Var logits = ad::frame_object_logits(t.param(q), x, N, 0.5);
              Var w = ad::softmax_rows(logits, mask);
              Var out = ad::weight_rows(w, t.param(v));
              return ad::add(readout(t, m, 3), readout(t, out, 4));
            }),
            1e-6);
}

TEST(Autodiff, ReshapingOpsGradients) {
  Fixture f;
  auto& a = f.add("a", 7, 3);
  auto& b = f.add("b", 7, 2);
  EXPECT_LT(check(f, [&](Tape& t) {
              Var x = t.param(a);
              Var p = ad::repeat_rows(ad::pool_rows(x, 3), 3, 7);
              Var c = ad::concat_cols(p, t.param(b));
              Var s = ad::slice_cols(c, 1, 4);
              Var r = ad::stack_rows({ad::slice_rows(s, 0, 2), ad::slice_rows(s, 4, 3)});
              Var g = ad::gather_rows(r, {4, 0, 0, 2});
              Var sc = ad::scatter_rows(g, {1, 5, 6, 2}, 8);
              return readout(t, sc, 5);
            }),
            1e-6);
}

TEST(Autodiff, CausalConvAndGruGradients) {
  Fixture f;
  const std::size_t T = 6, Cin = 3, Cout = 2, K = 3, H = 4, B = 2;
  auto& x = f.add("x", T, Cin);
  auto& w = f.add("w", K * Cin, Cout, 0.5);
  auto& bias = f.add("bias", 1, Cout);
  auto& xp = f.add("xp", B, 3 * H);
  auto& h0 = f.add("h0", B, H);
  auto& whh = f.add("whh", H, 3 * H, 0.5);
  auto& bhh = f.add("bhh", 1, 3 * H);
  EXPECT_LT(check(f, [&](Tape& t) {
              Var y = ad::causal_conv1d(t.param(x), t.param(w), t.param(bias));
              Var h = ad::gru_step(t.param(xp), t.param(h0), t.param(whh), t.param(bhh));
              h = ad::gru_step(t.param(xp), h, t.param(whh), t.param(bhh));
              return ad::add(readout(t, y, 6), readout(t, h, 7));
            }),
            1e-6);
}

TEST(Autodiff, CausalConvUsesOnlyPastRows) {
  std::mt19937_64 rng(9);
  Matrix x = testutil::random_matrix(8, 2, rng);
  Matrix w = testutil::random_matrix(3 * 2, 2, rng);
  Tape t1(false), t2(false);
  Matrix y1 = ad::causal_conv1d(t1.constant(x), t1.constant(w), t1.constant(Matrix(1, 2))).value();
  x(5, 0) += 10.0;
  Matrix y2 = ad::causal_conv1d(t2.constant(x), t2.constant(w), t2.constant(Matrix(1, 2))).value();
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(y1(t, 0), y2(t, 0));
    EXPECT_EQ(y1(t, 1), y2(t, 1));
  }
  EXPECT_NE(y1(5, 0), y2(5, 0));
}

TEST(Autodiff, FrozenParametersReceiveNoGradient) {
  ad::ParameterSet ps;
  auto& a = ps.add("a", "stage1", Matrix(2, 2, 1.0));
  auto& b = ps.add("b", "localization", Matrix(2, 2, 2.0));
  ps.set_trainable("localization", false);
  Tape t;
  t.backward(ad::sum_all(ad::mul(t.param(a), t.param(b))));
  EXPECT_DOUBLE_EQ(a.grad[0], 2.0);
  EXPECT_DOUBLE_EQ(b.grad[0], 0.0);
}

TEST(Autodiff, ZeroRowsStayZeroUnderNormalisation) {
  Tape t(false);
  Matrix m(2, 3);
  m(1, 0) = 3.0;
  m(1, 1) = 4.0;
  Matrix l2 = ad::l2_normalize_rows(t.constant(m)).value();
  Matrix sq = ad::squash_rows(t.constant(m)).value();
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(l2(0, c), 0.0);
    EXPECT_EQ(sq(0, c), 0.0);
  }
  EXPECT_NEAR(l2(1, 0), 0.6, 1e-15);
  EXPECT_NEAR(std::hypot(sq(1, 0), sq(1, 1)), 25.0 / 26.0, 1e-15);
}

TEST(Autodiff, ShapeMismatchRaises) {
  Tape t(false);
  EXPECT_THROW(ad::matmul(t.constant(Matrix(2, 3)), t.constant(Matrix(2, 3))), ShapeError);
  EXPECT_THROW(ad::add(t.constant(Matrix(2, 3)), t.constant(Matrix(3, 2))), ShapeError);
}

TEST(Autodiff, BackwardOnNonRecordingTapeIsAnError) {
  ad::ParameterSet ps;
  auto& a = ps.add("a", "stage1", Matrix(1, 1, 1.0));
  Tape t(false);
  Var y = ad::sum_all(t.param(a));
  EXPECT_THROW(t.backward(y), ConfigError);
}

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "test_helpers.hpp"
#include "tspulse/autodiff.hpp"
#include "tspulse/error.hpp"
#include "tspulse/gradcheck.hpp"

using namespace tspulse;
using tsptest::random_tensor;

namespace {

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Analytic vs central-difference gradients of a scalar composition.
double fd_rel_err(const Builder& f, const std::vector<Tensor>& inputs, double h = 1e-4) {
  ParamMap params;
  for (std::size_t i = 0; i < inputs.size(); ++i) params.emplace("in" + std::to_string(i), inputs[i]);
  auto eval = [&](const ParamMap& p, ParamMap* grads) {
    Tape t;
    std::vector<Var> vs;
    for (std::size_t i = 0; i < inputs.size(); ++i)
      vs.push_back(t.leaf(p.at("in" + std::to_string(i)), true));
    Var loss = f(t, vs);
    if (grads) {
      t.backward(loss);
      for (std::size_t i = 0; i < vs.size(); ++i) (*grads)["in" + std::to_string(i)] = t.grad(vs[i]);
    }
    return loss.value().item();
  };
  ParamMap grads;
  eval(params, &grads);
  FdOptions opt;
  opt.h = h;
  auto rep = finite_difference_check([&](const ParamMap& p) { return eval(p, nullptr); }, params,
                                     grads, opt);
  return rep.max_rel_err;
}

// Random projection to a scalar so every output element gets a distinct weight.
Var project(Tape& t, Var y, std::uint64_t seed) {
  return ad::sum(ad::mul(y, t.constant(random_tensor(y.shape(), seed))));
}

}  // namespace

TEST(Autodiff, SoftmaxUniform) {
  Tape t;
  Var y = ad::softmax(t.constant(Tensor::from({0, 0, 0})));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(y.value()[i], 1.0 / 3.0, 1e-15);
}

TEST(Autodiff, SoftmaxRowsSumToOne) {
  Tape t;
  Var x = t.constant(random_tensor({4, 5, 7}, 3, -20, 20));
  for (int axis : {0, 1, 2}) {
    Var y = ad::softmax(x, axis);
    const Tensor& v = y.value();
    const Shape& s = v.shape();
    std::size_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t j = 0; j < inner; ++j) {
        double sum = 0.0;
        for (std::size_t k = 0; k < s[axis]; ++k) sum += v[(o * s[axis] + k) * inner + j];
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
  }
}

TEST(Autodiff, SoftmaxEmptyAxisThrows) {
  Tape t;
  EXPECT_THROW(ad::softmax(t.constant(Tensor(Shape{2, 0}))), ArgumentError);
}

TEST(Autodiff, MseOfIdenticalIsZero) {
  Tape t;
  Var x = t.constant(random_tensor({3, 4}, 1));
  EXPECT_EQ(ad::mse(x, x).value().item(), 0.0);
}

TEST(Autodiff, MatmulMatchesTripleLoop) {
  auto a = random_tensor({2, 3}, 11);
  auto b = random_tensor({3, 4}, 12);
  Tape t;
  Var c = ad::matmul(t.constant(a), t.constant(b));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < 3; ++p) s += a[i * 3 + p] * b[p * 4 + j];
      EXPECT_NEAR(c.value()[i * 4 + j], s, 1e-12);
    }
}

TEST(Autodiff, ShapeMismatchNamesBothShapes) {
  Tape t;
  try {
    ad::matmul(t.constant(Tensor(Shape{2, 3})), t.constant(Tensor(Shape{4, 5})));
    FAIL();
  } catch (const DimensionError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos);
    EXPECT_NE(msg.find("[4, 5]"), std::string::npos);
  }
  EXPECT_THROW(ad::add(t.constant(Tensor(Shape{2, 3})), t.constant(Tensor(Shape{3, 2}))),
               DimensionError);
}

TEST(Autodiff, LinearSumGradientIsInput) {
  auto x = random_tensor({5}, 21);
  Tape t;
  Var w = t.leaf(random_tensor({5}, 22), true);
  Var loss = ad::sum(ad::mul(w, t.constant(x)));
  t.backward(loss);
  EXPECT_EQ(t.grad(w), x);
}

TEST(Autodiff, SingleLayerMseClosedForm) {
  // d/dW mean((Wx - y)^2) = 2 (Wx - y) x^T / n
  const std::size_t out = 3, in = 4;
  auto W = random_tensor({out, in}, 31);
  auto x = random_tensor({in, 1}, 32);
  auto y = random_tensor({out, 1}, 33);
  Tape t;
  Var w = t.leaf(W, true);
  Var loss = ad::mse(ad::matmul(w, t.constant(x)), t.constant(y));
  t.backward(loss);
  Tensor g = t.grad(w);
  for (std::size_t i = 0; i < out; ++i) {
    double r = -y[i];
    for (std::size_t j = 0; j < in; ++j) r += W[i * in + j] * x[j];
    for (std::size_t j = 0; j < in; ++j)
      EXPECT_NEAR(g[i * in + j], 2.0 * r * x[j] / double(out), 1e-14);
  }
}

TEST(Autodiff, NonScalarLossThrows) {
  Tape t;
  Var x = t.leaf(Tensor(Shape{3}), true);
  EXPECT_THROW(t.backward(x), ArgumentError);
}

TEST(Autodiff, UnusedLeafGetsZeroGradient) {
  Tape t;
  Var a = t.leaf(random_tensor({3}, 1), true);
  Var b = t.leaf(random_tensor({2, 2}, 2), true);
  t.backward(ad::sum(ad::square(a)));
  EXPECT_EQ(t.grad(b), Tensor(Shape{2, 2}, 0.0));
}

TEST(Autodiff, BackwardVisitsEachNodeOnce) {
  Tape t;
  Var a = t.leaf(random_tensor({3}, 1), true);
  Var b = ad::mul(a, a);
  Var c = ad::add(b, a);
  Var loss = ad::sum(c);
  t.backward(loss);
  EXPECT_EQ(t.backward_visits(), 3u);
}

TEST(Autodiff, TwoLayerNetMatchesFiniteDifferences) {
  auto f = [](Tape& t, const std::vector<Var>& v) {
    Var h = ad::tanh(ad::linear(v[0], v[1], v[2]));
    Var y = ad::linear(h, v[3]);
    return ad::mse(y, t.constant(random_tensor(y.shape(), 5)));
  };
  double err = fd_rel_err(f, {random_tensor({6, 4}, 1), random_tensor({4, 5}, 2),
                              random_tensor({5}, 3), random_tensor({5, 2}, 4)});
  EXPECT_LT(err, 1e-4);
}

TEST(Autodiff, LinearOpsExact) {
  auto f = [](Tape& t, const std::vector<Var>& v) {
    return project(t, ad::linear(v[0], v[1], v[2]), 9);
  };
  EXPECT_LT(fd_rel_err(f, {random_tensor({3, 4}, 1), random_tensor({4, 2}, 2),
                           random_tensor({2}, 3)}),
            1e-8);
}

struct OpCase {
  const char* name;
  std::vector<Shape> shapes;
  Builder f;
  double lo = -1.0;
  double hi = 1.0;
};

class OpGradient : public ::testing::TestWithParam<OpCase> {};

TEST_P(OpGradient, MatchesFiniteDifferences) {
  const OpCase& c = GetParam();
  std::vector<Tensor> ins;
  for (std::size_t i = 0; i < c.shapes.size(); ++i)
    ins.push_back(random_tensor(c.shapes[i], 100 + i, c.lo, c.hi));
  EXPECT_LT(fd_rel_err(c.f, ins), 1e-4) << c.name;
}

INSTANTIATE_TEST_SUITE_P(
    AllOps, OpGradient,
    ::testing::Values(
        OpCase{"add_broadcast", {{3, 4}, {4}}, [](Tape& t, auto& v) { return project(t, ad::add(v[0], v[1]), 1); }},
        OpCase{"sub_broadcast", {{3, 1}, {1, 4}}, [](Tape& t, auto& v) { return project(t, ad::sub(v[0], v[1]), 2); }},
        OpCase{"mul", {{2, 3}, {2, 3}}, [](Tape& t, auto& v) { return project(t, ad::mul(v[0], v[1]), 3); }},
        OpCase{"div", {{2, 3}, {3}}, [](Tape& t, auto& v) { return project(t, ad::div(v[0], ad::add_scalar(ad::square(v[1]), 1.0)), 4); }},
        OpCase{"scale_neg", {{5}}, [](Tape& t, auto& v) { return project(t, ad::neg(ad::scale(v[0], 2.5)), 5); }},
        OpCase{"sqrt_exp_log", {{4}}, [](Tape& t, auto& v) { return project(t, ad::log(ad::add_scalar(ad::sqrt(ad::exp(v[0])), 0.5)), 6); }},
        OpCase{"tanh_sigmoid", {{6}}, [](Tape& t, auto& v) { return project(t, ad::mul(ad::tanh(v[0]), ad::sigmoid(v[0])), 7); }},
        OpCase{"gelu", {{8}}, [](Tape& t, auto& v) { return project(t, ad::gelu(v[0]), 8); }, -3.0, 3.0},
        OpCase{"sum_mean_axis", {{2, 3, 4}}, [](Tape& t, auto& v) { return ad::add(project(t, ad::sum_axis(v[0], 1), 9), project(t, ad::mean_axis(v[0], 2, false), 10)); }},
        OpCase{"mean", {{3, 3}}, [](Tape& t, auto& v) { return ad::mean(ad::square(v[0])); }},
        OpCase{"max_abs_last", {{3, 5}}, [](Tape& t, auto& v) { return project(t, ad::div(v[0], ad::max_abs_last(v[0], 1e-8)), 11); }},
        OpCase{"transpose_reshape", {{2, 3, 4}}, [](Tape& t, auto& v) { return project(t, ad::reshape(ad::transpose(v[0]), {6, 4}), 12); }},
        OpCase{"permute", {{2, 3, 4}}, [](Tape& t, auto& v) { return project(t, ad::permute(v[0], {2, 0, 1}), 13); }},
        OpCase{"broadcast_tile", {{3, 1}}, [](Tape& t, auto& v) { return project(t, ad::tile_last(ad::broadcast_to(v[0], {2, 3, 2}), 3), 14); }},
        OpCase{"concat_split", {{2, 3}, {2, 2}}, [](Tape& t, auto& v) {
          Var c = ad::concat({v[0], v[1], v[0]}, 1);
          auto parts = ad::split(c, 1, {4, 4});
          return ad::add(project(t, parts[0], 15), project(t, ad::square(parts[1]), 16));
        }},
        OpCase{"slice", {{4, 5}}, [](Tape& t, auto& v) { return project(t, ad::slice(v[0], 0, 1, 2), 17); }},
        OpCase{"matmul", {{3, 4}, {4, 2}}, [](Tape& t, auto& v) { return project(t, ad::matmul(v[0], v[1]), 18); }},
        OpCase{"mix_axis", {{2, 3, 4}, {5, 3}, {5}}, [](Tape& t, auto& v) { return project(t, ad::mix_axis(v[0], v[1], v[2], 1), 19); }},
        OpCase{"layer_norm", {{3, 6}, {6}, {6}}, [](Tape& t, auto& v) { return project(t, ad::layer_norm(v[0], v[1], v[2]), 20); }},
        OpCase{"softmax_axis1", {{2, 4, 3}}, [](Tape& t, auto& v) { return project(t, ad::softmax(v[0], 1), 21); }},
        OpCase{"log_softmax", {{3, 5}}, [](Tape& t, auto& v) { return project(t, ad::log_softmax(v[0]), 22); }},
        OpCase{"mse", {{3, 4}, {3, 4}}, [](Tape&, auto& v) { return ad::mse(v[0], v[1]); }},
        OpCase{"masked_mse", {{3, 4}, {3, 4}}, [](Tape&, auto& v) {
          Tensor m(Shape{3, 4}, 0.0);
          m[1] = m[5] = m[11] = 1.0;
          return ad::masked_mse(v[0], v[1], m);
        }},
        OpCase{"cross_entropy", {{2, 5}, {2, 5}}, [](Tape&, auto& v) { return ad::cross_entropy(ad::softmax(v[0]), ad::softmax(v[1])); }},
        OpCase{"cross_entropy_logits", {{2, 5}, {2, 5}}, [](Tape&, auto& v) { return ad::cross_entropy_logits(ad::softmax(v[0]), v[1]); }},
        OpCase{"rfft", {{2, 16}}, [](Tape& t, auto& v) {
          auto [re, im] = ad::rfft(v[0]);
          return ad::add(project(t, re, 23), project(t, im, 24));
        }},
        OpCase{"irfft", {{2, 9}, {2, 9}}, [](Tape& t, auto& v) { return project(t, ad::irfft(v[0], v[1], 16), 25); }},
        OpCase{"log_magnitude", {{3, 5}, {3, 5}}, [](Tape& t, auto& v) { return project(t, ad::log_magnitude(v[0], v[1], 1e-8), 26); }}),
    [](const ::testing::TestParamInfo<OpCase>& info) { return std::string(info.param.name); });

TEST(Autodiff, FftGradientsTight) {
  // d(loss)/d(re, im) of an irfft composition, relative error < 1e-5.
  auto f = [](Tape& t, const std::vector<Var>& v) {
    return ad::mse(ad::irfft(v[0], v[1], 64), t.constant(random_tensor({64}, 3)));
  };
  EXPECT_LT(fd_rel_err(f, {random_tensor({33}, 1), random_tensor({33}, 2)}), 1e-5);
}

TEST(Autodiff, CrossEntropyOfSelfIsEntropy) {
  Tape t;
  Var p = ad::softmax(t.constant(random_tensor({4, 7}, 5, -3, 3)));
  double ce = ad::cross_entropy(p, p).value().item();
  double h = 0.0;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t k = 0; k < 7; ++k) {
      const double q = p.value()[r * 7 + k];
      h -= q * std::log(q);
    }
  EXPECT_NEAR(ce, h / 4.0, 1e-10);
}

TEST(Autodiff, IrfftInvertsRfftOnTape) {
  Tape t;
  auto x = random_tensor({3, 512}, 77);
  auto [re, im] = ad::rfft(t.constant(x));
  EXPECT_LT(max_abs_diff(ad::irfft(re, im, 512).value(), x), 1e-10);
}

TEST(Autodiff, DropoutDeterministicAndInactiveInEval) {
  auto x = random_tensor({1000}, 1);
  Tape a(true, 42), b(true, 42), e(false, 42);
  Var ya = ad::dropout(a.constant(x), 0.2);
  Var yb = ad::dropout(b.constant(x), 0.2);
  EXPECT_EQ(ya.value(), yb.value());
  EXPECT_EQ(ad::dropout(e.constant(x), 0.2).value(), x);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < x.size(); ++i) zeros += ya.value()[i] == 0.0;
  EXPECT_GT(zeros, 150u);
  EXPECT_LT(zeros, 250u);
  EXPECT_THROW(ad::dropout(a.constant(x), 1.0), ArgumentError);
}

TEST(Autodiff, NoGradTapeRecordsValuesOnly) {
  Tape t(false, 0, false);
  Var w = t.leaf(random_tensor({3}, 1), true);
  EXPECT_FALSE(t.requires_grad(w));
  Var y = ad::sum(ad::square(w));
  t.backward(y);
  EXPECT_EQ(t.backward_visits(), 0u);
}

#include "chronodce/tensor.hpp"

#include <cmath>

#include "chronodce/rng.hpp"
#include "gtest/gtest.h"

namespace chronodce {
namespace {

Tensor vec(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor::from({n}, std::move(v));
}

TEST(Elementwise, MulIsHadamard) {
  Tensor out = mul(vec({1, 2, 3}), vec({4, 5, 6}));
  EXPECT_EQ(out.value(), (std::vector<double>{4, 10, 18}));
}

TEST(Elementwise, Relu) {
  Tensor out = relu(vec({-1, 0, 2}));
  EXPECT_EQ(out.value(), (std::vector<double>{0, 0, 2}));
}

TEST(Elementwise, AddZerosIsIdentity) {
  Tensor x = vec({0.1, -2.5, 3e17, 7.25e-9});
  Tensor out = add(x, Tensor::zeros({4}));
  EXPECT_EQ(out.value(), x.value());
}

TEST(Elementwise, ShapeMismatchNamesBothShapes) {
  try {
    add(Tensor::zeros({2, 3}), Tensor::zeros({4}));
    FAIL() << "expected shape mismatch";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4]"), std::string::npos) << msg;
  }
}

TEST(Elementwise, ReluGradGatesStrictlyPositive) {
  Tensor x = vec({-1.0, 0.0, 2.0});
  backward(sum_all(relu(x)));
  EXPECT_EQ(x.grad(), (std::vector<double>{0, 0, 1}));
}

TEST(Matmul, IdentityLeavesMatrix) {
  Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor m = Tensor::from({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(matmul(eye, m).value(), m.value());
}

TEST(Matmul, DotProduct) {
  Tensor a = Tensor::from({1, 2}, {1, 2});
  Tensor b = Tensor::from({2, 1}, {3, 4});
  EXPECT_EQ(matmul(a, b).value(), (std::vector<double>{11}));
}

TEST(Matmul, GradOfSumWrtAIsOnesBt) {
  Tensor a = Tensor::from({2, 3}, {0.5, -1, 2, 3, 4, -0.25});
  Tensor b = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  backward(sum_all(matmul(a, b)));
  // ones(2x2) * b^T: row r of da is the column sums of b per inner index.
  const std::vector<double> expect = {3, 7, 11, 3, 7, 11};
  for (std::size_t i = 0; i < expect.size(); ++i)
    EXPECT_DOUBLE_EQ(a.grad()[i], expect[i]);
}

TEST(Matmul, InnerDimensionMismatch) {
  EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), std::invalid_argument);
}

TEST(ConvTemporal, IdentityKernelSizeOne) {
  Tensor x = Tensor::from({1, 5}, {1, 2, 3, 4, 5});
  Tensor w = Tensor::from({1, 1, 1}, {1});
  EXPECT_EQ(conv_temporal(x, w, 1).value(), x.value());
}

TEST(ConvTemporal, CenterTapIdentity) {
  Tensor x = Tensor::from({1, 4}, {5, -1, 2, 0.5});
  Tensor w = Tensor::from({1, 1, 3}, {0, 1, 0});
  EXPECT_EQ(conv_temporal(x, w, 1).value(), x.value());
}

TEST(ConvTemporal, BoxFilterWithZeroPadding) {
  Tensor x = Tensor::from({1, 3}, {1, 2, 3});
  Tensor w = Tensor::from({1, 1, 3}, {1, 1, 1});
  EXPECT_EQ(conv_temporal(x, w, 1).value(), (std::vector<double>{3, 6, 5}));
}

TEST(ConvTemporal, RejectsEvenKernelAndZeroDilation) {
  Tensor x = Tensor::from({1, 4}, {1, 2, 3, 4});
  EXPECT_THROW(conv_temporal(x, Tensor::zeros({1, 1, 2}), 1), std::invalid_argument);
  EXPECT_THROW(conv_temporal(x, Tensor::zeros({1, 1, 3}), 0), std::invalid_argument);
}

TEST(ConvTemporal, DilationReachesFurther) {
  // dilation 2, kernel 3, taps at t-2, t, t+2.
  Tensor x = Tensor::from({1, 5}, {1, 2, 3, 4, 5});
  Tensor w = Tensor::from({1, 1, 3}, {1, 0, 1});
  EXPECT_EQ(conv_temporal(x, w, 2).value(), (std::vector<double>{3, 4, 6, 2, 3}));
}

TEST(Reduce, MeanOfVector) {
  EXPECT_DOUBLE_EQ(reduce(vec({2, 4, 6}), 0, Reduce::mean).item(), 4.0);
}

TEST(Reduce, MaxRoutesGradToFirstArgmax) {
  Tensor x = vec({1, 3, 3});
  backward(reduce(x, 0, Reduce::max));
  EXPECT_EQ(x.grad(), (std::vector<double>{0, 1, 0}));
}

TEST(Reduce, SumOverJointsAxis) {
  Tensor x = Tensor::ones({3, 5});
  EXPECT_EQ(reduce(x, 1, Reduce::sum).value(), (std::vector<double>{5, 5, 5}));
}

TEST(Reduce, InvalidAxis) {
  EXPECT_THROW(reduce(Tensor::zeros({3, 5}), 2, Reduce::sum), std::invalid_argument);
}

TEST(Backward, SumGivesOnes) {
  Tensor x = vec({10, -4, 0.5});
  backward(sum_all(x));
  EXPECT_EQ(x.grad(), (std::vector<double>{1, 1, 1}));
}

TEST(Backward, SquareGivesTwoX) {
  Tensor x = vec({1, 2});
  backward(sum_all(mul(x, x)));
  EXPECT_EQ(x.grad(), (std::vector<double>{2, 4}));
}

TEST(Backward, RepeatedCallsAccumulate) {
  Tensor x = vec({1, 2, 3});
  Tensor loss = sum_all(x);
  backward(loss);
  backward(loss);
  EXPECT_EQ(x.grad(), (std::vector<double>{2, 2, 2}));
  x.zero_grad();
  backward(loss);
  EXPECT_EQ(x.grad(), (std::vector<double>{1, 1, 1}));
}

TEST(Backward, NonScalarLossRejected) {
  EXPECT_THROW(backward(Tensor::zeros({2})), std::invalid_argument);
}

TEST(Backward, LinearCombinationIsLinearInGradients) {
  Rng rng(42);
  std::vector<double> xv(6);
  for (double& v : xv) v = rng.normal();
  auto f = [](const Tensor& x) { return sum_all(mul(x, x)); };
  auto g = [](const Tensor& x) { return sum_all(relu(x)); };
  const double a = 2.25, b = -0.75;

  Tensor x1 = Tensor::from({6}, xv);
  backward(add(scale(f(x1), a), scale(g(x1), b)));
  Tensor x2 = Tensor::from({6}, xv);
  backward(f(x2));
  std::vector<double> gf = x2.grad();
  x2.zero_grad();
  backward(g(x2));
  std::vector<double> gg = x2.grad();
  for (std::size_t i = 0; i < xv.size(); ++i)
    EXPECT_NEAR(x1.grad()[i], a * gf[i] + b * gg[i], 1e-12);
}

TEST(GradCheck, SumIsExactUpToRounding) {
  Tensor zeros = Tensor::zeros({3});
  EXPECT_LT(grad_check([](const Tensor& t) { return sum_all(t); }, zeros), 1e-12);
  // Generic magnitudes pick up central-difference cancellation of order
  // ulp(x)/eps, still far below any tolerance the suite relies on.
  Tensor x = vec({0.3, -1.7, 2.2});
  EXPECT_LT(grad_check([](const Tensor& t) { return sum_all(t); }, x), 1e-10);
}

TEST(GradCheck, ReluAwayFromKink) {
  Rng rng(7);
  std::vector<double> v(8);
  for (double& x : v) {
    x = rng.normal();
    if (std::abs(x) < 0.1) x = x < 0 ? x - 0.1 : x + 0.1;
  }
  Tensor x = Tensor::from({8}, v);
  EXPECT_LT(grad_check([](const Tensor& t) { return sum_all(relu(t)); }, x), 1e-6);
}

TEST(GradCheck, RejectsBadEpsAndNonScalarF) {
  Tensor x = vec({1, 2});
  EXPECT_THROW(grad_check([](const Tensor& t) { return sum_all(t); }, x, 1e-2),
               std::invalid_argument);
  EXPECT_THROW(grad_check([](const Tensor& t) { return add(t, t); }, x),
               std::invalid_argument);
}

// Any value within 2*eps of a relu/max kink is nudged away so the
// finite-difference oracle stays valid.
double away_from_kink(double v, double eps) {
  if (std::abs(v) < 2 * eps) return v < 0 ? v - 2 * eps : v + 2 * eps;
  return v;
}

TEST(GradCheck, EveryOpOverRandomSeeds) {
  const double eps = 1e-5;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(mix_seed(seed, 0xabcdULL));
    auto rand_vec = [&](std::size_t n) {
      std::vector<double> v(n);
      for (double& x : v) x = away_from_kink(rng.normal(), eps);
      return v;
    };

    {
      Tensor x = Tensor::from({6}, rand_vec(6));
      Tensor other = Tensor::from({6}, rand_vec(6));
      auto f = [&](const Tensor& t) {
        return sum_all(mul(add(t, other), sub(relu(t), scale(other, 0.5))));
      };
      EXPECT_LT(grad_check(f, x, eps), 1e-4) << "elementwise seed " << seed;
    }
    {
      Tensor a = Tensor::from({3, 4}, rand_vec(12));
      Tensor b = Tensor::from({4, 2}, rand_vec(8));
      auto f = [&](const Tensor& t) { return sum_all(mul(matmul(t, b), matmul(t, b))); };
      EXPECT_LT(grad_check(f, a, eps), 1e-4) << "matmul-a seed " << seed;
      auto g = [&](const Tensor& t) { return sum_all(mul(matmul(a, t), matmul(a, t))); };
      EXPECT_LT(grad_check(g, b, eps), 1e-4) << "matmul-b seed " << seed;
    }
    {
      const std::size_t dil = 1 + seed % 3;
      Tensor x = Tensor::from({2, 7, 3}, rand_vec(42));
      Tensor w = Tensor::from({2, 2, 3}, rand_vec(12));
      auto f = [&](const Tensor& t) { return sum_all(mul(conv_temporal(t, w, dil),
                                                         conv_temporal(t, w, dil))); };
      EXPECT_LT(grad_check(f, x, eps), 1e-4) << "conv-x seed " << seed;
      auto g = [&](const Tensor& t) { return sum_all(mul(conv_temporal(x, t, dil),
                                                         conv_temporal(x, t, dil))); };
      EXPECT_LT(grad_check(g, w, eps), 1e-4) << "conv-w seed " << seed;
    }
    {
      // Distinct entries keep the max selection stable under perturbation.
      std::vector<double> v(12);
      for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = static_cast<double>((seed * 7 + i * 13) % 23) * 0.11 + 0.01 * i;
      Tensor x = Tensor::from({3, 4}, v);
      for (auto kind : {Reduce::sum, Reduce::mean, Reduce::max}) {
        auto f = [&](const Tensor& t) {
          Tensor r = reduce(t, seed % 2, kind);
          return sum_all(mul(r, r));
        };
        EXPECT_LT(grad_check(f, x, eps), 1e-4) << "reduce seed " << seed;
      }
    }
    {
      Tensor x = Tensor::from({2, 6, 2}, rand_vec(24));
      auto f = [&](const Tensor& t) {
        Tensor s = stride_time(t, 2);
        return sum_all(mul(s, s));
      };
      EXPECT_LT(grad_check(f, x, eps), 1e-4) << "stride seed " << seed;
    }
    {
      Tensor x = Tensor::from({3, 4}, rand_vec(12));
      Tensor b = Tensor::from({3}, rand_vec(3));
      auto f = [&](const Tensor& t) {
        Tensor y = add_bias(reshape(t, {3, 4}), b);
        return sum_all(mul(y, y));
      };
      EXPECT_LT(grad_check(f, x, eps), 1e-4) << "bias-x seed " << seed;
      auto g = [&](const Tensor& t) {
        Tensor y = add_bias(x, t);
        return sum_all(mul(y, y));
      };
      EXPECT_LT(grad_check(g, b, eps), 1e-4) << "bias-b seed " << seed;
    }
  }
}

TEST(Determinism, ForwardBackwardBitwiseRepeatable) {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> xv(24), wv(18);
    for (double& v : xv) v = rng.normal();
    for (double& v : wv) v = rng.normal();
    Tensor x = Tensor::from({2, 6, 2}, xv);
    Tensor w = Tensor::from({3, 2, 3}, wv);
    Tensor loss = sum_all(mul(conv_temporal(x, w, 2), conv_temporal(x, w, 2)));
    backward(loss);
    std::vector<double> out = {loss.item()};
    for (double g : x.grad()) out.push_back(g);
    for (double g : w.grad()) out.push_back(g);
    return out;
  };
  EXPECT_EQ(run(123), run(123));
}

TEST(Tensor, InvariantDataLengthMatchesShape) {
  EXPECT_THROW(Tensor::from({2, 3}, {1, 2, 3}), std::invalid_argument);
  Tensor t = Tensor::zeros({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
}

}  // namespace
}  // namespace chronodce

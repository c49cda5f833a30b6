#include <cmath>
#include <numeric>
#include <utility>

#include <gtest/gtest.h>

#include "nlsal/gradcheck.hpp"
#include "nlsal/kernels.hpp"
#include "nlsal/ops.hpp"
#include "oracles.hpp"

namespace nlsal {
namespace {

using testing::inner;
using testing::max_abs_diff;
using testing::random_tensor;

std::vector<double> bias_of(const Tensor& b) { return {b.data().begin(), b.data().end()}; }

TEST(Conv2d, ZeroInputGivesZeroOutput) {
  const Tensor x({1, 4, 4, 1});
  const Tensor k = random_tensor({3, 3, 1, 2}, 1);
  const std::vector<double> bias(2, 0.0);
  const Tensor y = kernels::conv2d(x, k, bias, 1, Padding::kSame);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, OneByOneKernelIsAffinePerPixel) {
  const Tensor x = random_tensor({1, 3, 3, 1}, 2);
  const Tensor k({1, 1, 1, 1}, 2.0);
  const std::vector<double> bias{1.0};
  const Tensor y = kernels::conv2d(x, k, bias, 1, Padding::kSame);
  ASSERT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(y[i], 2.0 * x[i] + 1.0);
}

TEST(Conv2d, MatchesLoopOracle) {
  const Tensor x = random_tensor({1, 5, 5, 2}, 3);
  const Tensor k = random_tensor({3, 3, 2, 4}, 4);
  const Tensor b = random_tensor({1, 1, 1, 4}, 5);
  for (int stride : {1, 2}) {
    for (bool same : {true, false}) {
      const Tensor got = kernels::conv2d(x, k, bias_of(b), stride, same ? Padding::kSame : Padding::kValid);
      const Tensor want = testing::naive_conv2d(x, k, bias_of(b), stride, same);
      EXPECT_LE(max_abs_diff(got, want), 1e-12) << "stride " << stride << " same " << same;
    }
  }
}

TEST(Conv2d, EvenKernelAndOddSizeMatchOracle) {
  const Tensor x = random_tensor({1, 7, 6, 3}, 6);
  const Tensor k = random_tensor({4, 2, 3, 2}, 7);
  const Tensor got = kernels::conv2d(x, k, {}, 2, Padding::kSame);
  EXPECT_LE(max_abs_diff(got, testing::naive_conv2d(x, k, {}, 2, true)), 1e-12);
}

TEST(Conv2d, ShapeMismatchRejected) {
  const Tensor x({1, 4, 4, 3});
  const Tensor k({3, 3, 2, 1});
  EXPECT_THROW(kernels::conv2d(x, k, {}, 1, Padding::kSame), ShapeError);
  EXPECT_THROW(kernels::conv2d(Tensor({1, 4, 4, 2}), k, std::vector<double>{1.0, 2.0}, 1, Padding::kSame),
               ShapeError);
}

TEST(Conv2d, AdjointsPassInnerProductTest) {
  const Tensor x = random_tensor({1, 6, 5, 3}, 8);
  const Tensor k = random_tensor({3, 3, 3, 2}, 9);
  for (int stride : {1, 2}) {
    const Tensor y = kernels::conv2d(x, k, {}, stride, Padding::kSame);
    const Tensor r = random_tensor(y.shape(), 10);
    const Tensor gx = kernels::conv2d_grad_input(r, k, x.shape(), stride, Padding::kSame);
    EXPECT_NEAR(inner(y, r), inner(x, gx), 1e-10);
    const Tensor gk = kernels::conv2d_grad_kernel(x, r, k.shape(), stride, Padding::kSame);
    EXPECT_NEAR(inner(y, r), inner(k, gk), 1e-10);
  }
}

TEST(ConvTranspose, IdentityKernelAddsBias) {
  const Tensor x = random_tensor({1, 3, 4, 2}, 11);
  Tensor k({1, 1, 2, 2});
  k.at(0, 0, 0, 0) = 1.0;
  k.at(0, 0, 1, 1) = 1.0;
  const std::vector<double> bias{0.5, -0.25};
  const Tensor y = kernels::conv2d_transpose(x, k, bias, 1);
  ASSERT_EQ(y.shape(), x.shape());
  for (int yy = 0; yy < 3; ++yy)
    for (int xx = 0; xx < 4; ++xx)
      for (int c = 0; c < 2; ++c) EXPECT_DOUBLE_EQ(y.at(0, yy, xx, c), x.at(0, yy, xx, c) + bias[c]);
}

TEST(ConvTranspose, StrideTwoDoublesExtent) {
  const Tensor x({1, 2, 2, 1}, 1.0);
  const Tensor k({4, 4, 1, 1}, 1.0);
  EXPECT_EQ(kernels::conv2d_transpose(x, k, {}, 2).shape(), (Shape{1, 4, 4, 1}));
}

TEST(ConvTranspose, IsAdjointOfSameConv) {
  // k as HWIO conv kernel {kh, kw, cin=3, cout=2} doubles as the transposed
  // kernel {kh, kw, out=3, in=2}.
  const Tensor k = random_tensor({4, 4, 3, 2}, 12);
  const Tensor small = random_tensor({1, 3, 5, 2}, 13);
  const Tensor big = random_tensor({1, 6, 10, 3}, 14);
  const Tensor up = kernels::conv2d_transpose(small, k, {}, 2);
  ASSERT_EQ(up.shape(), big.shape());
  const Tensor down = kernels::conv2d(big, k, {}, 2, Padding::kSame);
  EXPECT_NEAR(inner(down, small), inner(big, up), 1e-10);
}

TEST(ConvTranspose, NonPositiveStrideRejected) {
  const Tensor x({1, 2, 2, 1});
  const Tensor k({2, 2, 1, 1});
  EXPECT_THROW(kernels::conv2d_transpose(x, k, {}, 0), std::invalid_argument);
}

TEST(MaxPool, ConstantInputStaysConstant) {
  const Tensor x({1, 6, 6, 2}, 0.7);
  const Tensor y = kernels::maxpool2d(x, 2, nullptr);
  ASSERT_EQ(y.shape(), (Shape{1, 3, 3, 2}));
  for (double v : y.data()) EXPECT_EQ(v, 0.7);
}

TEST(MaxPool, PicksWindowMaximum) {
  const Tensor x({1, 2, 2, 1}, {1.0, 2.0, 3.0, 4.0});
  const Tensor y = kernels::maxpool2d(x, 2, nullptr);
  ASSERT_EQ(y.size(), 1u);
  EXPECT_EQ(y[0], 4.0);
}

TEST(MaxPool, MatchesLoopOracle) {
  const Tensor x = random_tensor({1, 8, 8, 3}, 15);
  EXPECT_EQ(max_abs_diff(kernels::maxpool2d(x, 2, nullptr), testing::naive_maxpool(x, 2)), 0.0);
  const Tensor odd = random_tensor({1, 7, 5, 2}, 16);
  EXPECT_EQ(max_abs_diff(kernels::maxpool2d(odd, 2, nullptr), testing::naive_maxpool(odd, 2)), 0.0);
}

TEST(MaxPool, WindowBelowOneRejected) {
  EXPECT_THROW(kernels::maxpool2d(Tensor({1, 2, 2, 1}), 0, nullptr), std::invalid_argument);
}

TEST(Ops, SoftmaxOfEqualRowIsUniform) {
  Tape tape;
  const Var x = tape.constant(Tensor({1, 1, 3, 5}, 2.5));
  const Tensor& y = softmax_rows(x).value();
  for (double v : y.data()) EXPECT_NEAR(v, 0.2, 1e-15);
}

TEST(Ops, SigmoidOfZeroIsHalf) {
  Tape tape;
  EXPECT_EQ(sigmoid(tape.constant(Tensor::scalar(0.0))).value().item(), 0.5);
}

TEST(Ops, MatmulMatchesLoopOracle) {
  const Tensor a = random_tensor({1, 1, 7, 5}, 17);
  const Tensor b = random_tensor({1, 1, 5, 3}, 18);
  Tape tape;
  const Tensor& c = matmul(tape.constant(a), tape.constant(b)).value();
  const auto want = testing::naive_matmul({a.data().begin(), a.data().end()}, {b.data().begin(), b.data().end()},
                                          7, 5, 3);
  ASSERT_EQ(c.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(c[i], want[i], 1e-13);
}

TEST(Ops, MatmulDimensionMismatchRejected) {
  Tape tape;
  const Var a = tape.constant(Tensor({1, 1, 7, 5}));
  const Var b = tape.constant(Tensor({1, 1, 4, 3}));
  EXPECT_THROW(matmul(a, b), ShapeError);
}

TEST(Ops, PadReplicateThenCropRoundTrips) {
  const Tensor x = random_tensor({1, 3, 5, 2}, 19);
  Tape tape;
  const Var p = pad_replicate(tape.constant(x), 8, 7);
  EXPECT_EQ(p.value().at(0, 7, 6, 1), x.at(0, 2, 4, 1));
  EXPECT_EQ(max_abs_diff(crop(p, 3, 5).value(), x), 0.0);
}

TEST(Tape, GradientOfSumIsOnes) {
  Tensor x = random_tensor({1, 2, 3, 4}, 20);
  Tape tape;
  tape.backward(sum(tape.parameter(x)));
  for (double g : std::as_const(x).grad()) EXPECT_EQ(g, 1.0);
}

TEST(Tape, CompositeMatchesFiniteDifferences) {
  const Tensor w = random_tensor({1, 1, 1, 6}, 21);
  const Tensor x0 = random_tensor({1, 1, 1, 6}, 22);
  Tensor x = x0;
  Tape tape;
  tape.backward(sum(sigmoid(mul(tape.constant(w), tape.parameter(x)))));
  const Tensor numeric = finite_diff_grad(
      [&](const Tensor& p) {
        double acc = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) acc += 1.0 / (1.0 + std::exp(-w[i] * p[i]));
        return acc;
      },
      x0);
  const auto analytic = std::as_const(x).grad();
  EXPECT_LE(gradient_relative_error(analytic, numeric.data()), 1e-8);
}

TEST(Tape, UnusedParameterGetsExactZero) {
  Tensor used = random_tensor({1, 1, 2, 2}, 23);
  Tensor unused = random_tensor({1, 1, 2, 2}, 24);
  unused.zero_grad();
  Tape tape;
  [[maybe_unused]] const Var u = tape.parameter(unused);
  tape.backward(sum(tape.parameter(used)));
  for (double g : std::as_const(unused).grad()) EXPECT_EQ(g, 0.0);
}

TEST(Tape, BackwardOnNonScalarRejected) {
  Tape tape;
  const Var x = tape.leaf(Tensor({1, 1, 2, 2}, 1.0));
  EXPECT_THROW(tape.backward(relu(x)), ShapeError);
}

TEST(FiniteDiff, SquareAtThree) {
  const Tensor g = finite_diff_grad([](const Tensor& p) { return p[0] * p[0]; }, Tensor::scalar(3.0));
  EXPECT_NEAR(g[0], 6.0, 1e-6);
}

TEST(FiniteDiff, ConstantHasZeroGradient) {
  const Tensor g = finite_diff_grad([](const Tensor&) { return 4.2; }, random_tensor({1, 1, 2, 3}, 25));
  for (double v : g.data()) EXPECT_EQ(v, 0.0);
}

TEST(GradCheck, StandardSuitePasses) {
  for (const auto& c : standard_grad_cases(7)) {
    const auto r = run_grad_check(c);
    EXPECT_TRUE(r.passed) << r.name << " rel err " << r.max_relative_error;
    EXPECT_LE(r.max_relative_error, 1e-5) << r.name;
  }
}

TEST(GradCheck, CorruptedBackwardIsDetected) {
  GradCheckCase c{"corrupted_square", {random_tensor({1, 1, 2, 3}, 26)},
                  [](Tape& tape, const std::vector<Var>& in) {
                    const Tensor& x = in[0].value();
                    Tensor y(x.shape());
                    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * x[i];
                    const Var x_var = in[0];
                    // d(x^2)/dx reported as 3x instead of 2x.
                    const Var sq = tape.record(std::move(y), {x_var}, [x_var](Tape& t, const Tensor& g) {
                      const Tensor& xv = x_var.value();
                      Tensor d(xv.shape());
                      for (std::size_t i = 0; i < xv.size(); ++i) d[i] = 3.0 * xv[i] * g[i];
                      t.accumulate(x_var, d);
                    });
                    return sum(sq);
                  }};
  const auto r = run_grad_check(c);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.max_relative_error, 0.1);
}

}  // namespace
}  // namespace nlsal

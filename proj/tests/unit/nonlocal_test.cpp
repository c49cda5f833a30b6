#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "nlsal/nonlocal.hpp"
#include "nlsal/random.hpp"
#include "oracles.hpp"

namespace nlsal {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;

NonLocalParams params_for(int c, int ce, std::uint64_t seed) {
  Rng rng(seed);
  return NonLocalParams::random(c, ce, rng);
}

// W_z y + x evaluated position by position.
Tensor project_and_add(const Tensor& y, const Tensor& wz, const Tensor& x) {
  Tensor z = x;
  const Shape s = x.shape();
  for (int i = 0; i < s.h; ++i)
    for (int j = 0; j < s.w; ++j)
      for (int c = 0; c < s.c; ++c)
        for (int m = 0; m < y.shape().c; ++m) z.at(0, i, j, c) += wz.at(0, 0, m, c) * y.at(0, i, j, m);
  return z;
}

TEST(NonLocal, SinglePositionReturnsG) {
  const NonLocalParams p = params_for(3, 2, 1);
  const Tensor x = random_tensor({1, 1, 1, 3}, 2);
  const auto out = nl_attend(x, p);
  ASSERT_EQ(out.attention.positions, 1u);
  EXPECT_EQ(out.attention.at(0, 0), 1.0);
  for (int m = 0; m < 2; ++m) {
    double g = 0.0;
    for (int c = 0; c < 3; ++c) g += p.w_g.at(0, 0, c, m) * x[c];
    EXPECT_NEAR(out.y[m], g, 1e-15);
    EXPECT_NEAR(nl_oracle(x, p)[m], g, 1e-15);
  }
}

TEST(NonLocal, ConstantInputGivesUniformAttention) {
  const NonLocalParams p = params_for(4, 2, 3);
  const Tensor x({1, 3, 5, 4}, 0.3);
  const auto out = nl_attend(x, p);
  for (double a : out.attention.values) EXPECT_NEAR(a, 1.0 / 15.0, 1e-15);
}

TEST(NonLocal, AttendMatchesOracle) {
  const NonLocalParams p = params_for(3, 2, 4);
  const Tensor x = random_tensor({1, 4, 4, 3}, 5);
  EXPECT_LE(max_abs_diff(nl_attend(x, p).y, nl_oracle(x, p)), 1e-12);
}

TEST(NonLocal, RectifiedAttendMatchesOracle) {
  NonLocalParams p = params_for(5, 3, 6);
  p.activation = EmbedActivation::kRectified;
  const Tensor x = random_tensor({1, 3, 6, 5}, 7);
  EXPECT_LE(max_abs_diff(nl_attend(x, p).y, nl_oracle(x, p)), 1e-12);
}

TEST(NonLocal, AttentionRowsAreStochastic) {
  const NonLocalParams p = params_for(6, 3, 8);
  const Tensor x = random_tensor({1, 5, 4, 6}, 9, -2.0, 2.0);
  const auto att = nl_attend(x, p).attention;
  for (std::size_t q = 0; q < att.positions; ++q) {
    double row = 0.0;
    for (std::size_t k = 0; k < att.positions; ++k) {
      EXPECT_GE(att.at(q, k), 0.0);
      row += att.at(q, k);
    }
    EXPECT_NEAR(row, 1.0, 1e-9);
  }
}

TEST(NonLocal, OracleNormaliserEqualsSoftmaxDenominator) {
  // Row q of the attention matrix times the explicit normaliser reproduces
  // the raw exponentials.
  const NonLocalParams p = params_for(3, 2, 10);
  const Tensor x = random_tensor({1, 2, 3, 3}, 11);
  const auto att = nl_attend(x, p).attention;
  auto embed = [&](const Tensor& w, int pos) {
    std::vector<double> e(2, 0.0);
    for (int m = 0; m < 2; ++m)
      for (int c = 0; c < 3; ++c) e[m] += w.at(0, 0, c, m) * x[pos * 3 + c];
    return e;
  };
  for (int q = 0; q < 6; ++q) {
    std::vector<double> f(6);
    for (int k = 0; k < 6; ++k) {
      const auto t = embed(p.w_theta, q);
      const auto ph = embed(p.w_phi, k);
      f[k] = std::exp(t[0] * ph[0] + t[1] * ph[1]);
    }
    const double cx = std::accumulate(f.begin(), f.end(), 0.0);
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(att.at(q, k) * cx, f[k], 1e-12);
  }
}

TEST(NonLocal, ZeroParamsAreExactIdentity) {
  const Tensor x = random_tensor({1, 4, 3, 5}, 12, -10.0, 10.0);
  const Tensor z = nl_block(x, NonLocalParams::zeros(5, 3));
  ASSERT_EQ(z.shape(), x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(z[i], x[i]);
}

TEST(NonLocal, ZeroWzAloneIsExactIdentity) {
  NonLocalParams p = params_for(5, 3, 13);
  std::fill(p.w_z.data().begin(), p.w_z.data().end(), 0.0);
  const Tensor x = random_tensor({1, 4, 3, 5}, 14, -10.0, 10.0);
  const Tensor z = nl_block(x, p);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(z[i], x[i]);
}

TEST(NonLocal, ZeroInputGivesZeroOutput) {
  const NonLocalParams p = params_for(4, 2, 15);
  const Tensor x({1, 3, 3, 4});
  const auto out = nl_attend(x, p);
  for (double v : out.y.data()) EXPECT_EQ(v, 0.0);
  const Tensor z = nl_block(x, p);
  for (double v : z.data()) EXPECT_EQ(v, 0.0);
}

TEST(NonLocal, BlockEqualsOracleProjectedAndAdded) {
  const NonLocalParams p = params_for(4, 2, 16);
  const Tensor x = random_tensor({1, 3, 4, 4}, 17);
  const Tensor want = project_and_add(nl_oracle(x, p), p.w_z, x);
  EXPECT_LE(max_abs_diff(nl_block(x, p), want), 1e-12);
}

TEST(NonLocal, PermutationEquivariant) {
  const NonLocalParams p = params_for(6, 3, 18);
  const Tensor x = random_tensor({1, 4, 5, 6}, 19);
  std::vector<int> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(20));
  auto permute = [&](const Tensor& t) {
    Tensor out(t.shape());
    const int c = t.shape().c;
    for (int q = 0; q < 20; ++q)
      for (int k = 0; k < c; ++k) out[q * c + k] = t[perm[q] * c + k];
    return out;
  };
  EXPECT_LE(max_abs_diff(nl_block(permute(x), p), permute(nl_block(x, p))), 1e-12);
}

TEST(NonLocal, ChannelMismatchRejected) {
  const NonLocalParams p = params_for(4, 2, 21);
  EXPECT_THROW(nl_attend(Tensor({1, 2, 2, 3}), p), ShapeError);
  NonLocalParams bad = p;
  bad.w_z = Tensor({1, 1, 3, 4});
  EXPECT_THROW(nl_block(Tensor({1, 2, 2, 4}), bad), ShapeError);
}

TEST(NonLocal, DefaultEmbedIsHalfRoundedUp) {
  EXPECT_EQ(default_embed_channels(1024), 512);
  EXPECT_EQ(default_embed_channels(5), 3);
  EXPECT_EQ(default_embed_channels(1), 1);
}

TEST(NonLocal, ForwardCostIsQuadraticInPositions) {
  const NonLocalParams p = params_for(16, 8, 22);
  const Tensor small = random_tensor({1, 32, 32, 16}, 23);
  const Tensor large = random_tensor({1, 64, 32, 16}, 24);
  auto best_time = [&](const Tensor& x) {
    double best = 1e30;
    for (int r = 0; r < 5; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      [[maybe_unused]] const Tensor z = nl_block(x, p);
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
  };
  best_time(small);
  const double ratio = best_time(large) / best_time(small);
  EXPECT_GE(ratio, 3.0);
  EXPECT_LE(ratio, 6.0);
}

}  // namespace
}  // namespace nlsal

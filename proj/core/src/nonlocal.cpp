#include "nlsal/nonlocal.hpp"

#include <cmath>

#include <fmt/format.h>

#include "nlsal/ops.hpp"

namespace nlsal {

void NonLocalParams::validate() const {
  const Shape& t = w_theta.shape();
  require_same_shape(w_phi.shape(), t, "non-local phi vs theta");
  require_same_shape(w_g.shape(), t, "non-local g vs theta");
  if (t.n != 1 || t.h != 1 || t.w < 1 || t.c < 1) {
    throw ShapeError(fmt::format("non-local projections must be 1x1xCxCe, got {}", t.str()));
  }
  require_same_shape(w_z.shape(), Shape{1, 1, t.c, t.w}, "non-local W_z");
}

NonLocalParams NonLocalParams::zeros(int channels, int embed) {
  NonLocalParams p;
  p.w_theta = Tensor({1, 1, channels, embed});
  p.w_phi = Tensor({1, 1, channels, embed});
  p.w_g = Tensor({1, 1, channels, embed});
  p.w_z = Tensor({1, 1, embed, channels});
  return p;
}

NonLocalParams NonLocalParams::random(int channels, int embed, Rng& rng) {
  NonLocalParams p;
  p.w_theta = he_uniform({1, 1, channels, embed}, channels, rng);
  p.w_phi = he_uniform({1, 1, channels, embed}, channels, rng);
  p.w_g = he_uniform({1, 1, channels, embed}, channels, rng);
  p.w_z = he_uniform({1, 1, embed, channels}, embed, rng);
  return p;
}

namespace {

void check_input(const Shape& x, int channels) {
  if (x.n != 1) throw ShapeError(fmt::format("non-local block expects batch 1, got {}", x.str()));
  if (x.c != channels) {
    throw ShapeError(fmt::format("non-local block expects {} channels, input {} has {}", channels,
                                 x.str(), x.c));
  }
}

}  // namespace

NonLocalTrace nonlocal_block(Var x, const NonLocalVars& params) {
  const Shape xs = x.shape();
  check_input(xs, params.theta.shape().w);
  Var theta = matmul(x, params.theta);
  Var phi = matmul(x, params.phi);
  Var g = matmul(x, params.g);
  if (params.activation == EmbedActivation::kRectified) {
    theta = relu(theta);
    phi = relu(phi);
    g = relu(g);
  }
  const Var attention = softmax_rows(matmul(theta, transpose(phi)));
  const Var y = matmul(attention, g);
  const Var z = add(matmul(y, params.z), x);
  return {y, attention, z};
}

NonLocalOutput nl_attend(const Tensor& x, const NonLocalParams& params) {
  params.validate();
  Tape tape;
  const NonLocalTrace tr = nonlocal_block(
      tape.constant(x), {tape.parameter(params.w_theta), tape.parameter(params.w_phi),
                         tape.parameter(params.w_g), tape.parameter(params.w_z),
                         params.activation});
  NonLocalOutput out;
  out.y = tape.value(tr.y);
  const Tensor& a = tape.value(tr.attention);
  out.attention.positions = a.shape().rows();
  out.attention.values.assign(a.data().begin(), a.data().end());
  return out;
}

Tensor nl_block(const Tensor& x, const NonLocalParams& params) {
  params.validate();
  Tape tape;
  const NonLocalTrace tr = nonlocal_block(
      tape.constant(x), {tape.parameter(params.w_theta), tape.parameter(params.w_phi),
                         tape.parameter(params.w_g), tape.parameter(params.w_z),
                         params.activation});
  return tape.value(tr.z);
}

Tensor nl_oracle(const Tensor& x, const NonLocalParams& params) {
  params.validate();
  const Shape& xs = x.shape();
  check_input(xs, params.in_channels());
  const int channels = params.in_channels();
  const int embed = params.embed_channels();
  const bool rectified = params.activation == EmbedActivation::kRectified;

  // 1x1 projection of one position.
  auto project = [&](const Tensor& w, int i, int j) {
    std::vector<double> e(embed, 0.0);
    for (int m = 0; m < embed; ++m) {
      for (int c = 0; c < channels; ++c) e[m] += w.at(0, 0, c, m) * x.at(0, i, j, c);
      if (rectified && e[m] < 0.0) e[m] = 0.0;
    }
    return e;
  };

  Tensor y({1, xs.h, xs.w, embed});
  for (int i = 0; i < xs.h; ++i) {
    for (int j = 0; j < xs.w; ++j) {
      const auto theta = project(params.w_theta, i, j);
      std::vector<double> acc(embed, 0.0);
      double normaliser = 0.0;
      for (int k = 0; k < xs.h; ++k) {
        for (int l = 0; l < xs.w; ++l) {
          const auto phi = project(params.w_phi, k, l);
          const auto g = project(params.w_g, k, l);
          double dot = 0.0;
          for (int m = 0; m < embed; ++m) dot += theta[m] * phi[m];
          const double f = std::exp(dot);
          normaliser += f;
          for (int m = 0; m < embed; ++m) acc[m] += f * g[m];
        }
      }
      for (int m = 0; m < embed; ++m) y.at(0, i, j, m) = acc[m] / normaliser;
    }
  }
  return y;
}

}  // namespace nlsal

#pragma once

#include <cstddef>
#include <vector>

#include "nlsal/random.hpp"
#include "nlsal/tape.hpp"

// Embedded-Gaussian non-local block:
//   y_p = sum_q softmax_q(theta(x_p) . phi(x_q)) g(x_q)
//   z_p = W_z y_p + x_p
// theta, phi, g and W_z are bias-free 1x1 projections.

namespace nlsal {

enum class EmbedActivation { kLinear, kRectified };

/// Embedding width used when none is configured: ceil(C / 2).
constexpr int default_embed_channels(int channels) { return (channels + 1) / 2; }

struct NonLocalParams {
  Tensor w_theta;  // {1, 1, C, Ce}
  Tensor w_phi;    // {1, 1, C, Ce}
  Tensor w_g;      // {1, 1, C, Ce}
  Tensor w_z;      // {1, 1, Ce, C}
  EmbedActivation activation = EmbedActivation::kLinear;

  [[nodiscard]] int in_channels() const { return w_theta.shape().w; }
  [[nodiscard]] int embed_channels() const { return w_theta.shape().c; }
  /// Throws ShapeError when the four kernels are mutually inconsistent.
  void validate() const;

  static NonLocalParams zeros(int channels, int embed);
  static NonLocalParams random(int channels, int embed, Rng& rng);
};

/// Row-stochastic (H*W) x (H*W) matrix; row = query position, column = key.
struct AttentionMatrix {
  std::size_t positions = 0;
  std::vector<double> values;

  [[nodiscard]] double at(std::size_t query, std::size_t key) const { return values[query * positions + key]; }
};

struct NonLocalOutput {
  Tensor y;  // {1, H, W, Ce}
  AttentionMatrix attention;
};

/// Kernels of one block as tape variables.
struct NonLocalVars {
  Var theta;
  Var phi;
  Var g;
  Var z;
  EmbedActivation activation = EmbedActivation::kLinear;
};

struct NonLocalTrace {
  Var y;
  Var attention;  // {1, H, W, H*W}
  Var z;
};

/// Taped block on a {1, H, W, C} feature map.
NonLocalTrace nonlocal_block(Var x, const NonLocalVars& params);

NonLocalOutput nl_attend(const Tensor& x, const NonLocalParams& params);
Tensor nl_block(const Tensor& x, const NonLocalParams& params);

/// Literal quadratic evaluation with explicit exponentials and per-row
/// normaliser. Intended for small maps (H*W <= 256).
Tensor nl_oracle(const Tensor& x, const NonLocalParams& params);

}  // namespace nlsal

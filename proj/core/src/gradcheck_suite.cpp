#include <algorithm>
#include <cmath>
#include <memory>

#include "nlsal/gradcheck.hpp"
#include "nlsal/network.hpp"
#include "nlsal/nonlocal.hpp"
#include "nlsal/ops.hpp"
#include "nlsal/random.hpp"
#include "nlsal/training.hpp"

namespace nlsal {

namespace {

// |v| >= 0.1.
Tensor away_from_zero(Shape shape, Rng& rng) {
  Tensor t(shape);
  for (auto& v : t.data()) {
    const double mag = rng.uniform(0.1, 1.0);
    v = rng.uniform(0.0, 1.0) < 0.5 ? -mag : mag;
  }
  return t;
}

// Distinct shuffled values.
Tensor distinct(Shape shape, Rng& rng) {
  Tensor t(shape);
  const double n = static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (static_cast<double>(i) + 0.5) / n - 0.5;
  auto data = t.data();
  std::shuffle(data.begin(), data.end(), rng.engine());
  return t;
}

// Random linear functional of `out`.
Var project(Tape& tape, Var out, Rng& rng) {
  return sum(mul(out, tape.constant(random_uniform(out.shape(), rng, -1.0, 1.0))));
}

}  // namespace

std::vector<GradCheckCase> standard_grad_cases(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "gradcheck"));
  std::vector<GradCheckCase> cases;
  auto weights_seed = [&](const char* name) { return derive_seed(seed, name); };

  auto add_case = [&](std::string name, std::vector<Tensor> inputs, auto op) {
    const std::uint64_t s = weights_seed(name.c_str());
    cases.push_back({std::move(name), std::move(inputs), [op, s](Tape& t, const std::vector<Var>& v) {
                       Rng r(s);
                       return project(t, op(t, v), r);
                     }});
  };

  const Shape img{1, 5, 6, 3};
  add_case("add", {random_uniform(img, rng, -1, 1), random_uniform(img, rng, -1, 1)},
           [](Tape&, const std::vector<Var>& v) { return add(v[0], v[1]); });
  add_case("mul", {random_uniform(img, rng, -1, 1), random_uniform(img, rng, -1, 1)},
           [](Tape&, const std::vector<Var>& v) { return mul(v[0], v[1]); });
  add_case("scale", {random_uniform(img, rng, -1, 1)},
           [](Tape&, const std::vector<Var>& v) { return scale(v[0], -1.7); });
  add_case("conv2d_same_s1", {random_uniform(img, rng, -1, 1), random_uniform({3, 3, 3, 4}, rng, -1, 1),
                              random_uniform({1, 1, 1, 4}, rng, -1, 1)},
           [](Tape&, const std::vector<Var>& v) { return conv2d(v[0], v[1], v[2], 1, Padding::kSame); });
  add_case("conv2d_same_s2", {random_uniform({1, 7, 6, 2}, rng, -1, 1), random_uniform({3, 3, 2, 3}, rng, -1, 1)},
           [](Tape&, const std::vector<Var>& v) { return conv2d(v[0], v[1], 2, Padding::kSame); });
  add_case("conv2d_valid", {random_uniform({1, 6, 5, 2}, rng, -1, 1), random_uniform({2, 3, 2, 3}, rng, -1, 1)},
           [](Tape&, const std::vector<Var>& v) { return conv2d(v[0], v[1], 1, Padding::kValid); });
  add_case("conv2d_transpose", {random_uniform({1, 3, 4, 3}, rng, -1, 1), random_uniform({4, 4, 2, 3}, rng, -1, 1),
                                random_uniform({1, 1, 1, 2}, rng, -1, 1)},
           [](Tape&, const std::vector<Var>& v) { return conv2d_transpose(v[0], v[1], v[2], 2); });
  add_case("maxpool2d", {distinct({1, 5, 6, 2}, rng)},
           [](Tape&, const std::vector<Var>& v) { return maxpool2d(v[0], 2); });
  add_case("relu", {away_from_zero(img, rng)}, [](Tape&, const std::vector<Var>& v) { return relu(v[0]); });
  add_case("sigmoid", {random_uniform(img, rng, -4, 4)},
           [](Tape&, const std::vector<Var>& v) { return sigmoid(v[0]); });
  add_case("softmax_rows", {random_uniform({1, 2, 3, 5}, rng, -2, 2)},
           [](Tape&, const std::vector<Var>& v) { return softmax_rows(v[0]); });
  add_case("matmul", {random_uniform({1, 2, 3, 4}, rng, -1, 1), random_uniform({1, 1, 4, 5}, rng, -1, 1)},
           [](Tape&, const std::vector<Var>& v) { return matmul(v[0], v[1]); });
  add_case("transpose", {random_uniform({1, 2, 3, 4}, rng, -1, 1)},
           [](Tape&, const std::vector<Var>& v) { return transpose(v[0]); });
  add_case("concat_channels", {random_uniform({1, 3, 3, 2}, rng, -1, 1), random_uniform({1, 3, 3, 3}, rng, -1, 1)},
           [](Tape&, const std::vector<Var>& v) { return concat_channels(v[0], v[1]); });
  add_case("pad_replicate", {random_uniform({1, 3, 4, 2}, rng, -1, 1)},
           [](Tape&, const std::vector<Var>& v) { return pad_replicate(v[0], 5, 7); });
  add_case("crop", {random_uniform({1, 5, 6, 2}, rng, -1, 1)},
           [](Tape&, const std::vector<Var>& v) { return crop(v[0], 3, 4); });
  add_case("reshape", {random_uniform({1, 2, 3, 4}, rng, -1, 1)},
           [](Tape&, const std::vector<Var>& v) { return reshape(v[0], {1, 6, 2, 2}); });

  for (auto act : {EmbedActivation::kLinear, EmbedActivation::kRectified}) {
    const int c = 4;
    const int ce = 2;
    std::vector<Tensor> in{random_uniform({1, 3, 3, c}, rng, -1, 1), away_from_zero({1, 1, c, ce}, rng),
                           away_from_zero({1, 1, c, ce}, rng), away_from_zero({1, 1, c, ce}, rng),
                           random_uniform({1, 1, ce, c}, rng, -1, 1)};
    add_case(act == EmbedActivation::kLinear ? "nonlocal" : "nonlocal_rectified", std::move(in),
             [act](Tape&, const std::vector<Var>& v) {
               return nonlocal_block(v[0], NonLocalVars{v[1], v[2], v[3], v[4], act}).z;
             });
  }

  {
    GroundTruth g(4, 5);
    for (auto& b : g.values) b = rng.uniform(0.0, 1.0) < 0.4 ? 1 : 0;
    cases.push_back({"cross_entropy", {random_uniform({1, 4, 5, 1}, rng, -3, 3)},
                     [g](Tape&, const std::vector<Var>& v) { return cross_entropy_loss(sigmoid(v[0]), g); }});
  }

  {
    NetworkSpec spec;
    spec.encoder_blocks = {{1, 3}, {1, 4}, {1, 4}, {1, 5}, {1, 5}};
    spec.nl_after_block = 3;
    spec.nl_count = 2;
    Network net = build_static_net(spec, weights_seed("static_net"));
    // Random biases.
    for (auto& e : net.parameters()) {
      if (e.name.ends_with(".bias")) e.value = random_uniform(e.value.shape(), rng, -0.1, 0.1);
    }
    std::vector<Tensor> inputs{random_uniform({1, 16, 16, 3}, rng, 0, 1)};
    for (const auto& e : net.parameters()) inputs.push_back(e.value);
    const auto shared = std::make_shared<const Network>(std::move(net));
    add_case("static_net", std::move(inputs), [shared](Tape&, const std::vector<Var>& v) {
      return shared->forward_bound(v[0], std::span(v).subspan(1));
    });
    // Odd-sized input (padding and crop).
    add_case("static_net_padded", {random_uniform({1, 13, 16, 3}, rng, 0, 1)},
             [shared](Tape& t, const std::vector<Var>& v) { return shared->forward_frozen(t, v[0]); });
  }
  return cases;
}

}  // namespace nlsal

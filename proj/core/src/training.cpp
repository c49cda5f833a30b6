#include "nlsal/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <utility>

#include <fmt/format.h>

#include "nlsal/random.hpp"

namespace nlsal {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument(fmt::format("learning_rate must be >= 0, got {}", learning_rate));
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument(fmt::format("momentum must be in [0, 1), got {}", momentum));
  }
  if (!(loss_clamp_eps > 0.0 && loss_clamp_eps < 0.5)) {
    throw std::invalid_argument(fmt::format("loss_clamp_eps must be in (0, 0.5), got {}", loss_clamp_eps));
  }
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
}

namespace {

void check_sizes(int sh, int sw, const GroundTruth& g) {
  if (sh != g.height || sw != g.width) {
    throw ShapeError(fmt::format("loss: prediction {}x{} vs ground truth {}x{}", sh, sw, g.height, g.width));
  }
}

}  // namespace

double cross_entropy_loss(const SaliencyMap& s, const GroundTruth& g, double eps) {
  check_sizes(s.height, s.width, g);
  double loss = 0.0;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const double p = std::clamp(s.values[i], eps, 1.0 - eps);
    loss -= g.values[i] != 0 ? std::log(p) : std::log(1.0 - p);
  }
  return loss;
}

Var cross_entropy_loss(Var s, const GroundTruth& g, double eps) {
  const Shape shape = s.shape();
  if (shape.n != 1 || shape.c != 1) throw ShapeError(fmt::format("loss expects 1xHxWx1, got {}", shape.str()));
  check_sizes(shape.h, shape.w, g);
  Tape& tape = *s.tape;
  const Tensor& sv = tape.value(s);
  double loss = 0.0;
  for (std::size_t i = 0; i < sv.size(); ++i) {
    const double p = std::clamp(sv[i], eps, 1.0 - eps);
    loss -= g.values[i] != 0 ? std::log(p) : std::log(1.0 - p);
  }
  return tape.record(Tensor::scalar(loss), {s}, [s, mask = g.values, eps](Tape& tp, const Tensor& grad) {
    const Tensor& sv = tp.value(s);
    auto gs = tp.grad_buffer(s).data();
    const double d = grad[0];
    for (std::size_t i = 0; i < gs.size(); ++i) {
      const double p = sv[i];
      if (p < eps || p > 1.0 - eps) continue;
      gs[i] += d * (mask[i] != 0 ? -1.0 / p : 1.0 / (1.0 - p));
    }
  });
}

OptimizerState::OptimizerState(const ParameterStore& params) {
  velocity_.reserve(params.size());
  for (const auto& e : params) velocity_.emplace_back(e.value.shape());
}

void sgd_momentum_step(ParameterStore& params, OptimizerState& state, const TrainConfig& cfg) {
  if (state.size() != params.size()) {
    throw TrainingError(fmt::format("optimizer state has {} slots for {} parameters", state.size(), params.size()));
  }
  std::size_t i = 0;
  for (auto& e : params) {
    if (!e.value.has_grad()) throw TrainingError(fmt::format("parameter '{}' has no gradient", e.name));
    require_same_shape(state.velocity(i).shape(), e.value.shape(), "optimizer velocity");
    for (double g : e.value.grad()) {
      if (!std::isfinite(g)) throw TrainingError(fmt::format("non-finite gradient in parameter '{}'", e.name));
    }
    ++i;
  }
  i = 0;
  for (auto& e : params) {
    auto v = state.velocity(i++).data();
    auto p = e.value.data();
    const auto g = std::as_const(e.value).grad();
    for (std::size_t k = 0; k < p.size(); ++k) {
      v[k] = cfg.momentum * v[k] + g[k];
      p[k] -= cfg.learning_rate * v[k];
    }
  }
}

std::vector<TrainingSample> static_samples(const VideoDataset& data) {
  std::vector<TrainingSample> out;
  for (const auto& seq : data.sequences) {
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      if (t < seq.groundtruth.size() && seq.groundtruth[t]) out.push_back({seq.frames[t], *seq.groundtruth[t]});
    }
  }
  return out;
}

std::vector<TrainingSample> dynamic_samples(const VideoDataset& data, const Network& static_net) {
  std::vector<TrainingSample> out;
  for (const auto& seq : data.sequences) {
    if (seq.frames.empty()) continue;
    for (const auto& [t, next] : consecutive_indices(seq.frames.size())) {
      if (t >= seq.groundtruth.size() || !seq.groundtruth[t]) continue;
      const SaliencyMap s = static_forward(static_net, seq.frames[t]);
      out.push_back({make_dynamic_input(seq.frames[t], seq.frames[next], s), *seq.groundtruth[t]});
    }
  }
  return out;
}

TrainResult train_stage(Network& net, std::span<const TrainingSample> samples, const TrainConfig& cfg,
                        const CheckpointFn& checkpoint) {
  cfg.validate();
  if (samples.empty()) throw std::invalid_argument("train_stage: empty dataset");
  const int want_channels = cfg.stage == Stage::kStatic ? 3 : 7;
  if (net.spec().input_channels != want_channels) {
    throw std::invalid_argument(fmt::format("stage needs a {}-channel network, got {}", want_channels,
                                            net.spec().input_channels));
  }
  Rng rng(derive_seed(cfg.seed, "train-order"));
  OptimizerState state(net.parameters());
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  TrainResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int it = 0; it < cfg.iterations; ++it) {
    if (cursor == order.size()) {
      std::shuffle(order.begin(), order.end(), rng.engine());
      cursor = 0;
    }
    const TrainingSample& sample = samples[order[cursor++]];
    net.parameters().zero_grad();
    Tape tape;
    const Var pred = net.forward(tape, tape.constant(sample.input));
    const Var loss = cross_entropy_loss(pred, sample.target, cfg.loss_clamp_eps);
    tape.backward(loss);
    result.loss_trace.push_back(tape.value(loss).item());
    sgd_momentum_step(net.parameters(), state, cfg);
    if (checkpoint && cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0) checkpoint(it + 1, net);
  }
  return result;
}

void write_loss_trace(const std::filesystem::path& path, std::span<const double> trace) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("'{}': cannot write loss trace", path.string()));
  for (std::size_t i = 0; i < trace.size(); ++i) out << fmt::format("{} {:.17g}\n", i, trace[i]);
}

}  // namespace nlsal

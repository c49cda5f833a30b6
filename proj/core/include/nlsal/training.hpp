#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlsal/data_io.hpp"
#include "nlsal/maps.hpp"
#include "nlsal/network.hpp"

namespace nlsal {

enum class Stage { kStatic, kDynamic };

struct TrainConfig {
  double learning_rate = 3e-5;
  double momentum = 0.9;
  int iterations = 2000;
  double loss_clamp_eps = 1e-7;
  Stage stage = Stage::kStatic;
  std::uint64_t seed = 1;
  /// Invoke the checkpoint callback every N iterations; 0 disables.
  int checkpoint_every = 0;

  void validate() const;
};

/// Raised when an optimisation step cannot be applied (e.g. NaN gradient).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// L = -sum_ij [g log s + (1 - g) log(1 - s)] with s clamped to
/// [eps, 1 - eps]. The clamp has zero derivative outside its range.
double cross_entropy_loss(const SaliencyMap& s, const GroundTruth& g, double eps = 1e-7);
/// Taped variant; `s` is a {1, h, w, 1} prediction.
Var cross_entropy_loss(Var s, const GroundTruth& g, double eps = 1e-7);

/// Per-parameter velocities, zero-initialised, keyed by position in the
/// ParameterStore it was created for.
class OptimizerState {
 public:
  explicit OptimizerState(const ParameterStore& params);
  [[nodiscard]] const Tensor& velocity(std::size_t i) const { return velocity_.at(i); }
  Tensor& velocity(std::size_t i) { return velocity_.at(i); }
  [[nodiscard]] std::size_t size() const { return velocity_.size(); }

 private:
  std::vector<Tensor> velocity_;
};

/// Classical momentum on the gradients held in each parameter's grad slot:
///   v <- momentum * v + grad;  p <- p - lr * v
/// Every gradient is checked first; a non-finite value aborts the whole step
/// with TrainingError naming the parameter.
void sgd_momentum_step(ParameterStore& params, OptimizerState& state, const TrainConfig& cfg);

struct TrainingSample {
  Tensor input;  // {1, h, w, 3} or {1, h, w, 7}
  GroundTruth target;
};

/// (I_t, G_t) for every annotated frame.
std::vector<TrainingSample> static_samples(const VideoDataset& data);
/// (I_t, I_{t+1}, S_t) -> G_t for every annotated frame, S_t from the frozen
/// static net. Unannotated frames still serve as I_{t+1}.
std::vector<TrainingSample> dynamic_samples(const VideoDataset& data, const Network& static_net);

struct TrainResult {
  std::vector<double> loss_trace;
};

using CheckpointFn = std::function<void(int iteration, const Network& net)>;

/// Batch-size-1 SGD over `samples`, visiting them in a freshly shuffled
/// order each epoch (seeded from cfg.seed). Loss trace entry i is the loss
/// of iteration i before its update.
TrainResult train_stage(Network& net, std::span<const TrainingSample> samples, const TrainConfig& cfg,
                        const CheckpointFn& checkpoint = {});

/// Two-column "iteration loss" text series.
void write_loss_trace(const std::filesystem::path& path, std::span<const double> trace);

}  // namespace nlsal

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlsal/network.hpp"
#include "nlsal/synth.hpp"
#include "nlsal/training.hpp"

namespace nlsal::cli {

/// Malformed config file or flag value; maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class StageSel { kStatic, kDynamic, kBoth };

/// Plain-text `key = value` run description. `#` starts a comment.
struct RunConfig {
  StageSel stage = StageSel::kStatic;
  /// Training data root; empty selects the synthetic set.
  std::filesystem::path dataset;
  /// Held-out data root for ablate; empty selects a synthetic set drawn
  /// from a different seed.
  std::filesystem::path eval_dataset;
  /// Working resolution; 0 keeps the native frame size.
  int height = 0;
  int width = 0;
  bool flatten_gt = false;

  std::vector<int> widths{16, 32, 64, 128, 128};
  std::vector<int> convs{2, 2, 2, 2, 2};
  int nl_after_block = 5;
  int nl_count = 3;
  int nl_embed_channels = 0;
  EmbedActivation nl_activation = EmbedActivation::kLinear;

  double learning_rate = TrainConfig{}.learning_rate;
  double momentum = TrainConfig{}.momentum;
  int iterations = TrainConfig{}.iterations;
  double loss_clamp_eps = TrainConfig{}.loss_clamp_eps;
  int checkpoint_every = 0;

  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  std::filesystem::path static_weights;

  int synth_sequences = 1;
  int synth_frames = 20;
  int synth_size = 64;
  int synth_square = 14;
  int synth_motion = 4;
  bool synth_distractor = false;

  int ablate_iterations = 200;
  std::vector<int> ablate_blocks{3, 4, 5};
  std::vector<int> ablate_counts{1, 2, 3, 4, 5};
  int timing_size = 512;
  int timing_rounds = 9;
  int timing_frames = 1;

  /// Throws ConfigError on an out-of-range value.
  void validate() const;

  [[nodiscard]] NetworkSpec network_spec(int input_channels) const;
  [[nodiscard]] TrainConfig train_config(Stage stage) const;
  /// Synthetic training / held-out sets; they differ only in seed.
  [[nodiscard]] SynthSpec synth_train() const;
  [[nodiscard]] SynthSpec synth_eval() const;
};

/// Sets one key; unknown keys and unparsable values throw ConfigError.
void set_key(RunConfig& cfg, const std::string& key, const std::string& value);

RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

/// Every key with its resolved value, in a form parse_run_config reads back.
std::string to_text(const RunConfig& cfg);

std::string stage_name(StageSel stage);

}  // namespace nlsal::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "nlsal/cli/run_config.hpp"
#include "nlsal/metrics.hpp"

namespace nlsal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Missing or contradictory command-line inputs; maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses argv, runs the selected subcommand and returns the process exit
/// code: 0 success, 1 usage/config error, 2 runtime/data error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Training set of `cfg` (synthetic when no dataset root is configured),
/// resized to the working resolution.
VideoDataset training_data(const RunConfig& cfg);
/// Held-out set for ablate.
VideoDataset evaluation_data(const RunConfig& cfg);

/// Writes `<out>/config.txt`.
void write_resolved_config(const RunConfig& cfg);

/// Static and/or dynamic training per cfg.stage. Artifacts under cfg.out:
/// static.weights, static_loss.txt, dynamic.weights, dynamic_loss.txt and
/// optional `<stage>_iter<N>.weights` checkpoints.
void cmd_train(const RunConfig& cfg, std::ostream& log);

/// One 8-bit map per frame of `input` (a frame directory or a dataset
/// root) under cfg.out, plus timing.csv and metadata.txt. For the dynamic
/// pipeline `weights` is the dynamic net and cfg.static_weights the static.
void cmd_infer(const RunConfig& cfg, const std::filesystem::path& weights, const std::filesystem::path& input,
               std::ostream& log);

/// Scores every map under `maps` against the ground truth under `gt` with
/// the same relative path and stem (a `gt` directory level is ignored).
EvalReport cmd_eval(const RunConfig& cfg, const std::filesystem::path& maps, const std::filesystem::path& gt,
                    std::ostream& log);

struct AblationRow {
  int nl_after_block = 0;  // 0 for the baseline row
  int nl_count = 0;
  double mae = 0.0;
  double seconds = 0.0;
};

/// Forward time of each network on each frame. Every round visits all
/// networks in turn after one untimed warm-up pass each; a network's time is
/// the median over rounds of its per-round mean over frames.
std::vector<double> time_forward(std::span<const Network* const> nets, std::span<const Tensor> frames, int rounds);

/// The placement x count sweep plus the nl_count = 0 baseline (first row).
std::vector<AblationRow> run_ablation(const RunConfig& cfg, std::ostream& log);
/// Rows grouped by count, one column per placement.
std::string format_ablation(std::span<const AblationRow> rows);
void cmd_ablate(const RunConfig& cfg, std::ostream& log);

/// Runs standard_grad_cases; true when every case passes.
bool cmd_gradcheck(const RunConfig& cfg, std::ostream& log);

/// Writes the synthetic training (or held-out) set in directory form.
void cmd_synth(const RunConfig& cfg, bool holdout, std::ostream& log);

}  // namespace nlsal::cli

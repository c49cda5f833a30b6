#include <algorithm>
#include <chrono>
#include <fstream>
#include <memory>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "nlsal/cli/commands.hpp"
#include "nlsal/data_io.hpp"
#include "nlsal/random.hpp"

namespace nlsal::cli {

std::vector<double> time_forward(std::span<const Network* const> nets, std::span<const Tensor> frames, int rounds) {
  if (nets.empty() || frames.empty() || rounds < 1) throw std::invalid_argument("time_forward: nothing to time");
  for (const Network* net : nets) {
    [[maybe_unused]] const Tensor warm = net->predict(frames.front());
  }
  std::vector<std::vector<double>> per_round(nets.size());
  for (int r = 0; r < rounds; ++r) {
    for (std::size_t i = 0; i < nets.size(); ++i) {
      double sum = 0.0;
      for (const Tensor& frame : frames) {
        const auto t0 = std::chrono::steady_clock::now();
        [[maybe_unused]] const Tensor out = nets[i]->predict(frame);
        sum += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      per_round[i].push_back(sum / static_cast<double>(frames.size()));
    }
  }
  std::vector<double> out;
  for (auto& v : per_round) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    out.push_back(n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]));
  }
  return out;
}

std::vector<AblationRow> run_ablation(const RunConfig& cfg, std::ostream& log) {
  const VideoDataset train = training_data(cfg);
  const VideoDataset held_out = evaluation_data(cfg);
  const auto train_samples = static_samples(train);
  const auto eval_samples = static_samples(held_out);
  if (eval_samples.empty()) throw DataError("ablate: held-out set has no annotated frames");

  std::vector<AblationRow> rows{{0, 0, 0.0, 0.0}};
  for (int count : cfg.ablate_counts) {
    if (count == 0) continue;
    for (int block : cfg.ablate_blocks) rows.push_back({block, count, 0.0, 0.0});
  }

  TrainConfig tc = cfg.train_config(Stage::kStatic);
  tc.iterations = cfg.ablate_iterations;
  std::vector<std::unique_ptr<Network>> nets;
  for (auto& row : rows) {
    NetworkSpec spec = cfg.network_spec(3);
    spec.nl_count = row.nl_count;
    if (row.nl_count > 0) spec.nl_after_block = row.nl_after_block;
    auto net = std::make_unique<Network>(build_static_net(spec, derive_seed(cfg.seed, "static-net")));
    if (tc.iterations > 0) train_stage(*net, train_samples, tc);
    double mae_sum = 0.0;
    for (const auto& s : eval_samples) mae_sum += mae(saliency_from_tensor(net->predict(s.input)), s.target);
    row.mae = mae_sum / static_cast<double>(eval_samples.size());
    fmt::print(log, "trained nl_after_block={} nl_count={}: held-out MAE {:.5f}\n", row.nl_after_block,
               row.nl_count, row.mae);
    nets.push_back(std::move(net));
  }

  std::vector<Tensor> frames;
  for (const auto& seq : held_out.sequences) {
    for (const auto& f : seq.frames) {
      if (frames.size() < static_cast<std::size_t>(cfg.timing_frames)) {
        frames.push_back(resize_frame(f, cfg.timing_size, cfg.timing_size));
      }
    }
  }
  std::vector<const Network*> ptrs;
  for (const auto& n : nets) ptrs.push_back(n.get());
  fmt::print(log, "timing {} networks at {}x{}, {} rounds\n", ptrs.size(), cfg.timing_size, cfg.timing_size,
             cfg.timing_rounds);
  const auto secs = time_forward(ptrs, frames, cfg.timing_rounds);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].seconds = secs[i];
  return rows;
}

std::string format_ablation(std::span<const AblationRow> rows) {
  std::vector<int> blocks;
  std::vector<int> counts;
  for (const auto& r : rows) {
    if (r.nl_count == 0) continue;
    if (std::find(blocks.begin(), blocks.end(), r.nl_after_block) == blocks.end()) blocks.push_back(r.nl_after_block);
    if (std::find(counts.begin(), counts.end(), r.nl_count) == counts.end()) counts.push_back(r.nl_count);
  }
  std::string out = fmt::format("{:>8}", "NL count");
  for (int b : blocks) out += fmt::format(" | after block {}: {:>8} {:>9}", b, "MAE", "time (s)");
  out += "\n";
  for (const auto& r : rows) {
    if (r.nl_count == 0) out += fmt::format("baseline (no NL): MAE {:.5f}, time {:.4f} s\n", r.mae, r.seconds);
  }
  for (int c : counts) {
    out += fmt::format("{:>8}", c);
    for (int b : blocks) {
      const auto it = std::find_if(rows.begin(), rows.end(),
                                   [&](const AblationRow& r) { return r.nl_count == c && r.nl_after_block == b; });
      out += fmt::format(" | {:>15} {:>8.5f} {:>9.4f}", "", it->mae, it->seconds);
    }
    out += "\n";
  }
  return out;
}

void cmd_ablate(const RunConfig& cfg, std::ostream& log) {
  const auto rows = run_ablation(cfg, log);
  write_resolved_config(cfg);
  std::ofstream mae_csv(cfg.out / "ablation_mae.csv");
  std::ofstream time_csv(cfg.out / "ablation_timing.csv");
  if (!mae_csv || !time_csv) throw DataError(fmt::format("'{}': cannot write ablation tables", cfg.out.string()));
  mae_csv << "nl_after_block,nl_count,mae\n";
  time_csv << "nl_after_block,nl_count,seconds\n";
  for (const auto& r : rows) {
    mae_csv << fmt::format("{},{},{:.10f}\n", r.nl_after_block, r.nl_count, r.mae);
    time_csv << fmt::format("{},{},{:.6f}\n", r.nl_after_block, r.nl_count, r.seconds);
  }
  const std::string table = format_ablation(rows);
  std::ofstream(cfg.out / "ablation.txt") << table;
  log << table;
}

}  // namespace nlsal::cli

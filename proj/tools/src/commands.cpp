#include "nlsal/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fmt/ranges.h>

#include "nlsal/data_io.hpp"
#include "nlsal/gradcheck.hpp"
#include "nlsal/random.hpp"
#include "nlsal/weights_io.hpp"

namespace nlsal::cli {

namespace fs = std::filesystem;

namespace {

VideoDataset resize_dataset(VideoDataset data, int height, int width) {
  if (height == 0) return data;
  for (auto& seq : data.sequences) {
    for (auto& f : seq.frames) f = resize_frame(f, height, width);
    for (auto& g : seq.groundtruth) {
      if (g) g = resize_mask(*g, height, width);
    }
  }
  return data;
}

VideoDataset dataset_from(const fs::path& root, const SynthSpec& synth, const RunConfig& cfg) {
  if (root.empty()) return resize_dataset(synth_dataset(synth), cfg.height, cfg.width);
  return load_dataset(scan_dataset(root), cfg.height, cfg.width, cfg.flatten_gt);
}

std::uint64_t net_seed(const RunConfig& cfg, Stage stage) {
  return derive_seed(cfg.seed, stage == Stage::kStatic ? "static-net" : "dynamic-net");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("'{}': cannot write", path.string()));
  out << text;
}

void train_one(const RunConfig& cfg, Network& net, std::span<const TrainingSample> samples, Stage stage,
               std::ostream& log) {
  const char* name = stage == Stage::kStatic ? "static" : "dynamic";
  const TrainConfig tc = cfg.train_config(stage);
  fmt::print(log, "training {} net: {} samples, {} iterations, lr {}\n", name, samples.size(), tc.iterations,
             tc.learning_rate);
  const auto result = train_stage(net, samples, tc, [&](int it, const Network& n) {
    n.save(cfg.out / fmt::format("{}_iter{:06d}.weights", name, it));
  });
  net.save(cfg.out / fmt::format("{}.weights", name));
  write_loss_trace(cfg.out / fmt::format("{}_loss.txt", name), result.loss_trace);
  if (!result.loss_trace.empty()) {
    fmt::print(log, "{} loss: first {:.4f}, last {:.4f}\n", name, result.loss_trace.front(), result.loss_trace.back());
  }
}

Network load_net(const RunConfig& cfg, Stage stage, const fs::path& weights) {
  Network net(cfg.network_spec(stage == Stage::kStatic ? 3 : 7), net_seed(cfg, stage));
  net.load(weights);
  return net;
}

struct InputSequence {
  std::string id;
  std::vector<fs::path> frames;
};

std::vector<InputSequence> input_sequences(const fs::path& input) {
  if (!fs::is_directory(input)) throw DataError(fmt::format("'{}': input is not a directory", input.string()));
  auto direct = list_images(input);
  if (!direct.empty()) return {{"", std::move(direct)}};
  std::vector<InputSequence> out;
  for (const auto& seq : scan_dataset(input).sequences) {
    InputSequence s{seq.id, {}};
    for (const auto& f : seq.frames) s.frames.push_back(f.frame);
    out.push_back(std::move(s));
  }
  return out;
}

// Relative path without extension, generic separators. With `drop_gt`, a
// directory level named "gt" is skipped so <seq>/gt/x matches <seq>/x.
std::string match_key(const fs::path& root, const fs::path& file, bool drop_gt) {
  fs::path key;
  for (const auto& part : fs::relative(file.parent_path(), root)) {
    if (part == "." || (drop_gt && part == "gt")) continue;
    key /= part;
  }
  key /= file.stem();
  return key.generic_string();
}

std::map<std::string, fs::path> collect_images(const fs::path& root, bool groundtruth) {
  if (!fs::is_directory(root)) throw DataError(fmt::format("'{}': not a directory", root.string()));
  std::vector<fs::path> files;
  bool has_gt_dir = false;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_directory() && e.path().filename() == "gt") has_gt_dir = true;
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  }
  std::map<std::string, fs::path> out;
  for (const auto& f : files) {
    if (groundtruth && has_gt_dir) {
      const auto rel = fs::relative(f, root);
      if (std::find(rel.begin(), rel.end(), fs::path("gt")) == rel.end()) continue;
    }
    const auto key = match_key(root, f, groundtruth);
    if (!out.emplace(key, f).second) {
      throw DataError(fmt::format("'{}' and '{}' map to the same stem", out[key].string(), f.string()));
    }
  }
  return out;
}

}  // namespace

VideoDataset training_data(const RunConfig& cfg) { return dataset_from(cfg.dataset, cfg.synth_train(), cfg); }

VideoDataset evaluation_data(const RunConfig& cfg) { return dataset_from(cfg.eval_dataset, cfg.synth_eval(), cfg); }

void write_resolved_config(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  write_text(cfg.out / "config.txt", to_text(cfg));
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  if (cfg.stage == StageSel::kDynamic && cfg.static_weights.empty()) {
    throw UsageError("dynamic training needs static weights (--static-weights)");
  }
  const VideoDataset data = training_data(cfg);
  write_resolved_config(cfg);

  Network static_net(cfg.network_spec(3), net_seed(cfg, Stage::kStatic));
  if (cfg.stage == StageSel::kDynamic) {
    static_net.load(cfg.static_weights);
  } else {
    const auto samples = static_samples(data);
    train_one(cfg, static_net, samples, Stage::kStatic, log);
  }
  if (cfg.stage == StageSel::kStatic) return;

  const auto samples = dynamic_samples(data, static_net);
  Network dynamic_net(cfg.network_spec(7), net_seed(cfg, Stage::kDynamic));
  train_one(cfg, dynamic_net, samples, Stage::kDynamic, log);
}

void cmd_infer(const RunConfig& cfg, const fs::path& weights, const fs::path& input, std::ostream& log) {
  const bool dynamic = cfg.stage != StageSel::kStatic;
  if (weights.empty()) throw UsageError("infer needs --weights");
  if (dynamic && cfg.static_weights.empty()) throw UsageError("dynamic inference needs --static-weights");
  const fs::path static_path = dynamic ? cfg.static_weights : weights;
  const Network static_net = load_net(cfg, Stage::kStatic, static_path);
  std::optional<Network> dynamic_net;
  if (dynamic) dynamic_net.emplace(load_net(cfg, Stage::kDynamic, weights));
  const auto sequences = input_sequences(input);
  write_resolved_config(cfg);

  std::string timing = "sequence,frame,seconds\n";
  double total = 0.0;
  std::size_t frames = 0;
  std::size_t timed = 0;
  std::size_t padded = 0;
  std::set<std::string> padded_sizes;
  for (const auto& seq : sequences) {
    const fs::path dir = cfg.out / seq.id;
    fs::create_directories(dir);
    std::vector<Tensor> images;
    images.reserve(seq.frames.size());
    for (const auto& f : seq.frames) images.push_back(load_frame(f));
    for (const auto& [t, next] : consecutive_indices(images.size())) {
      const auto t0 = std::chrono::steady_clock::now();
      ForwardInfo info;
      SaliencyMap s = static_forward(static_net, images[t], &info);
      if (dynamic_net) s = dynamic_forward(*dynamic_net, images[t], images[next], s);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      save_byte_map(dir / (seq.frames[t].stem().string() + ".png"), to_bytes(s));
      timing += fmt::format("{},{},{:.6f}\n", seq.id, seq.frames[t].stem().string(), secs);
      if (info.padded()) {
        ++padded;
        padded_sizes.insert(fmt::format("{}x{}->{}x{}", info.input_height, info.input_width, info.padded_height,
                                        info.padded_width));
      }
      if (frames++ > 0) {
        total += secs;
        ++timed;
      }
    }
  }
  const double mean = timed > 0 ? total / static_cast<double>(timed) : 0.0;
  write_text(cfg.out / "timing.csv", timing);
  std::string meta = fmt::format("stage = {}\nstatic_weights = {}\nstatic_digest = {}\n",
                                 dynamic ? "dynamic" : "static", static_path.string(), file_digest(static_path));
  if (dynamic) meta += fmt::format("dynamic_weights = {}\ndynamic_digest = {}\n", weights.string(), file_digest(weights));
  meta += fmt::format("frames = {}\npadded_frames = {}\n", frames, padded);
  if (padded > 0) meta += fmt::format("padding = {}\n", fmt::join(padded_sizes, ","));
  write_text(cfg.out / "metadata.txt", meta);
  fmt::print(log, "{} maps written to {}; mean {:.4f} s/frame (warm-up frame excluded)\n", frames, cfg.out.string(),
             mean);
}

EvalReport cmd_eval(const RunConfig& cfg, const fs::path& maps, const fs::path& gt, std::ostream& log) {
  if (maps.empty() || gt.empty()) throw UsageError("eval needs --in MAPS and --gt GROUNDTRUTH");
  const auto map_files = collect_images(maps, false);
  const auto gt_files = collect_images(gt, true);
  std::vector<ByteMap> smaps;
  std::vector<GroundTruth> gts;
  std::size_t unmatched = 0;
  for (const auto& [key, path] : map_files) {
    const auto it = gt_files.find(key);
    if (it == gt_files.end()) {
      ++unmatched;
      continue;
    }
    smaps.push_back(load_byte_map(path));
    gts.push_back(load_groundtruth(it->second, cfg.flatten_gt));
  }
  if (smaps.empty()) {
    throw DataError(fmt::format("no map under '{}' matches a ground truth under '{}'", maps.string(), gt.string()));
  }
  if (unmatched > 0) fmt::print(log, "warning: {} maps without ground truth ignored\n", unmatched);
  if (gt_files.size() > smaps.size()) {
    fmt::print(log, "warning: {} ground-truth frames without a map\n", gt_files.size() - smaps.size());
  }
  const EvalReport report = evaluate_set(smaps, gts);
  if (report.resized > 0) {
    fmt::print(log, "warning: {} maps resized (bilinear) to their ground-truth size\n", report.resized);
  }
  write_resolved_config(cfg);
  write_report(cfg.out, report);
  log << format_summary(report);
  return report;
}

bool cmd_gradcheck(const RunConfig& cfg, std::ostream& log) {
  bool ok = true;
  std::string report;
  for (const auto& c : standard_grad_cases(cfg.seed)) {
    const auto r = run_grad_check(c);
    ok = ok && r.passed;
    report += fmt::format("{:<22} {:.3e} {}\n", r.name, r.max_relative_error, r.passed ? "PASS" : "FAIL");
  }
  write_resolved_config(cfg);
  write_text(cfg.out / "gradcheck.txt", report);
  log << report;
  return ok;
}

void cmd_synth(const RunConfig& cfg, bool holdout, std::ostream& log) {
  const auto data = synth_dataset(holdout ? cfg.synth_eval() : cfg.synth_train());
  const auto set = write_dataset(data, cfg.out);
  write_resolved_config(cfg);
  write_manifest(cfg.out / "manifest.tsv", set);
  fmt::print(log, "{} sequences, {} frames written to {}\n", set.sequences.size(), set.frame_count(),
             cfg.out.string());
}

}  // namespace nlsal::cli

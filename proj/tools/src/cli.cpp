#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "nlsal/cli/commands.hpp"

namespace nlsal::cli {

namespace {

struct Flags {
  std::string config;
  std::string weights;
  std::string static_weights;
  std::string in;
  std::string gt;
  std::string out;
  std::string stage;
  std::optional<std::uint64_t> seed;
  bool holdout = false;
};

RunConfig resolve(const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.stage.empty()) set_key(cfg, "stage", f.stage);
  if (!f.static_weights.empty()) cfg.static_weights = f.static_weights;
  cfg.validate();
  return cfg;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Video salient object detection with non-local blocks"};
  app.name("nlsal");
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sc) {
    sc->add_option("--config", f.config, "Run configuration (key = value lines)");
    sc->add_option("--seed", f.seed, "Override the configured seed");
    sc->add_option("--out", f.out, "Output directory");
  };
  auto stage_opt = [&](CLI::App* sc) {
    sc->add_option("--stage", f.stage, "static | dynamic | both")->check(CLI::IsMember({"static", "dynamic", "both"}));
    sc->add_option("--static-weights", f.static_weights, "Trained static network");
  };

  auto* train = app.add_subcommand("train", "Train the static and/or dynamic network");
  common(train);
  stage_opt(train);

  auto* infer = app.add_subcommand("infer", "Write one saliency map per input frame");
  common(infer);
  stage_opt(infer);
  infer->add_option("--weights", f.weights, "Static weights, or dynamic weights with --stage dynamic|both")->required();
  infer->add_option("--in", f.in, "Frame directory or dataset root")->required();

  auto* eval = app.add_subcommand("eval", "Score saliency maps against ground truth");
  common(eval);
  eval->add_option("--in", f.in, "Directory of 8-bit maps")->required();
  eval->add_option("--gt", f.gt, "Ground-truth directory or dataset root")->required();

  auto* ablate = app.add_subcommand("ablate", "Sweep non-local placement and count");
  common(ablate);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  common(gradcheck);

  auto* synth = app.add_subcommand("synth", "Write the synthetic dataset to disk");
  common(synth);
  synth->add_flag("--holdout", f.holdout, "Write the held-out set instead of the training set");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    const RunConfig cfg = resolve(f);
    if (*train) {
      cmd_train(cfg, out);
    } else if (*infer) {
      cmd_infer(cfg, f.weights, f.in, out);
    } else if (*eval) {
      cmd_eval(cfg, f.in, f.gt, out);
    } else if (*ablate) {
      cmd_ablate(cfg, out);
    } else if (*gradcheck) {
      if (!cmd_gradcheck(cfg, out)) {
        fmt::print(err, "error: gradient check failed\n");
        return kExitRuntime;
      }
    } else if (*synth) {
      cmd_synth(cfg, f.holdout, out);
    }
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitUsage;
  } catch (const UsageError& e) {
    fmt::print(err, "usage error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace nlsal::cli

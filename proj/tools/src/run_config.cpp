#include "nlsal/cli/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "nlsal/random.hpp"

namespace nlsal::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, v));
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, v));
}

std::vector<int> parse_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  if (out.empty()) throw ConfigError(fmt::format("{}: empty list", key));
  return out;
}

struct Key {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Key number_key(const char* name, T RunConfig::*field) {
  return {name, [name, field](RunConfig& c, const std::string& v) { c.*field = parse_number<T>(name, v); },
          [field](const RunConfig& c) { return fmt::format("{}", c.*field); }};
}

Key bool_key(const char* name, bool RunConfig::*field) {
  return {name, [name, field](RunConfig& c, const std::string& v) { c.*field = parse_bool(name, v); },
          [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

Key list_key(const char* name, std::vector<int> RunConfig::*field) {
  return {name, [name, field](RunConfig& c, const std::string& v) { c.*field = parse_list(name, v); },
          [field](const RunConfig& c) { return fmt::format("{}", fmt::join(c.*field, ",")); }};
}

Key path_key(const char* name, std::filesystem::path RunConfig::*field) {
  return {name, [field](RunConfig& c, const std::string& v) { c.*field = v; },
          [field](const RunConfig& c) { return (c.*field).string(); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table{
      {"stage",
       [](RunConfig& c, const std::string& v) {
         if (v == "static") c.stage = StageSel::kStatic;
         else if (v == "dynamic") c.stage = StageSel::kDynamic;
         else if (v == "both") c.stage = StageSel::kBoth;
         else throw ConfigError(fmt::format("stage: '{}' is not one of static|dynamic|both", v));
       },
       [](const RunConfig& c) { return stage_name(c.stage); }},
      path_key("dataset", &RunConfig::dataset),
      path_key("eval_dataset", &RunConfig::eval_dataset),
      number_key("height", &RunConfig::height),
      number_key("width", &RunConfig::width),
      bool_key("flatten_gt", &RunConfig::flatten_gt),
      list_key("widths", &RunConfig::widths),
      list_key("convs", &RunConfig::convs),
      number_key("nl_after_block", &RunConfig::nl_after_block),
      number_key("nl_count", &RunConfig::nl_count),
      number_key("nl_embed_channels", &RunConfig::nl_embed_channels),
      {"nl_activation",
       [](RunConfig& c, const std::string& v) {
         if (v == "linear") c.nl_activation = EmbedActivation::kLinear;
         else if (v == "rectified") c.nl_activation = EmbedActivation::kRectified;
         else throw ConfigError(fmt::format("nl_activation: '{}' is not one of linear|rectified", v));
       },
       [](const RunConfig& c) {
         return std::string(c.nl_activation == EmbedActivation::kLinear ? "linear" : "rectified");
       }},
      number_key("learning_rate", &RunConfig::learning_rate),
      number_key("momentum", &RunConfig::momentum),
      number_key("iterations", &RunConfig::iterations),
      number_key("loss_clamp_eps", &RunConfig::loss_clamp_eps),
      number_key("checkpoint_every", &RunConfig::checkpoint_every),
      number_key("seed", &RunConfig::seed),
      path_key("out", &RunConfig::out),
      path_key("static_weights", &RunConfig::static_weights),
      number_key("synth_sequences", &RunConfig::synth_sequences),
      number_key("synth_frames", &RunConfig::synth_frames),
      number_key("synth_size", &RunConfig::synth_size),
      number_key("synth_square", &RunConfig::synth_square),
      number_key("synth_motion", &RunConfig::synth_motion),
      bool_key("synth_distractor", &RunConfig::synth_distractor),
      number_key("ablate_iterations", &RunConfig::ablate_iterations),
      list_key("ablate_blocks", &RunConfig::ablate_blocks),
      list_key("ablate_counts", &RunConfig::ablate_counts),
      number_key("timing_size", &RunConfig::timing_size),
      number_key("timing_rounds", &RunConfig::timing_rounds),
      number_key("timing_frames", &RunConfig::timing_frames),
  };
  return table;
}

}  // namespace

std::string stage_name(StageSel stage) {
  switch (stage) {
    case StageSel::kStatic: return "static";
    case StageSel::kDynamic: return "dynamic";
    case StageSel::kBoth: return "both";
  }
  return "static";
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : keys()) {
    if (key == k.name) {
      k.set(cfg, value);
      return;
    }
  }
  throw ConfigError(fmt::format("unknown config key '{}'", key));
}

RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", lineno));
    try {
      set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", lineno, e.what()));
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  try {
    return parse_run_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) out += fmt::format("{} = {}\n", k.name, k.get(cfg));
  return out;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (height < 0 || width < 0) fail("height/width must be >= 0");
  if ((height == 0) != (width == 0)) fail("height and width must both be set or both be 0");
  if (widths.size() != static_cast<std::size_t>(kEncoderBlocks)) {
    fail(fmt::format("widths needs {} entries", kEncoderBlocks));
  }
  if (convs.size() != widths.size()) fail("convs needs one entry per encoder block");
  try {
    network_spec(3).validate();
    train_config(Stage::kStatic).validate();
    synth_train().validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (ablate_iterations < 0) fail("ablate_iterations must be >= 0");
  for (int b : ablate_blocks) {
    if (b < 1 || b > kEncoderBlocks) fail(fmt::format("ablate_blocks: {} is not an encoder block", b));
  }
  for (int c : ablate_counts) {
    if (c < 0) fail("ablate_counts must be >= 0");
  }
  if (timing_size < kDownsampleFactor) fail(fmt::format("timing_size must be >= {}", kDownsampleFactor));
  if (timing_rounds < 1 || timing_frames < 1) fail("timing_rounds and timing_frames must be >= 1");
}

NetworkSpec RunConfig::network_spec(int input_channels) const {
  NetworkSpec spec;
  spec.input_channels = input_channels;
  spec.encoder_blocks.clear();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    spec.encoder_blocks.push_back({i < convs.size() ? convs[i] : 2, widths[i]});
  }
  spec.nl_after_block = nl_after_block;
  spec.nl_count = nl_count;
  spec.nl_embed_channels = nl_embed_channels;
  spec.nl_activation = nl_activation;
  return spec;
}

TrainConfig RunConfig::train_config(Stage stage) const {
  TrainConfig t;
  t.learning_rate = learning_rate;
  t.momentum = momentum;
  t.iterations = iterations;
  t.loss_clamp_eps = loss_clamp_eps;
  t.checkpoint_every = checkpoint_every;
  t.stage = stage;
  t.seed = derive_seed(seed, stage == Stage::kStatic ? "train-static" : "train-dynamic");
  return t;
}

SynthSpec RunConfig::synth_train() const {
  SynthSpec s;
  s.sequences = synth_sequences;
  s.frames = synth_frames;
  s.size = synth_size;
  s.square = synth_square;
  s.motion = synth_motion;
  s.distractor = synth_distractor;
  s.seed = derive_seed(seed, "synth-train");
  return s;
}

SynthSpec RunConfig::synth_eval() const {
  SynthSpec s = synth_train();
  s.seed = derive_seed(seed, "synth-eval");
  return s;
}

}  // namespace nlsal::cli

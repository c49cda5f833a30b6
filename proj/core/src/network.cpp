#include "nlsal/network.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

#include "nlsal/ops.hpp"
#include "nlsal/random.hpp"

namespace nlsal {

// ---------------------------------------------------------------- spec

void NetworkSpec::validate() const {
  if (input_channels != 3 && input_channels != 7) {
    throw std::invalid_argument(fmt::format("input_channels must be 3 or 7, got {}", input_channels));
  }
  if (encoder_blocks.size() != kEncoderBlocks) {
    throw std::invalid_argument(
        fmt::format("encoder needs exactly {} blocks, got {}", kEncoderBlocks, encoder_blocks.size()));
  }
  for (const auto& b : encoder_blocks) {
    if (b.convs < 1 || b.width < 1) {
      throw std::invalid_argument(fmt::format("encoder block needs >= 1 conv and width, got ({}, {})",
                                              b.convs, b.width));
    }
  }
  if (nl_after_block < 3 || nl_after_block > 5) {
    throw std::invalid_argument(fmt::format("nl_after_block must be 3, 4 or 5, got {}", nl_after_block));
  }
  if (nl_count < 0 || nl_count > 5) {
    throw std::invalid_argument(fmt::format("nl_count must be in [0, 5], got {}", nl_count));
  }
  if (nl_embed_channels < 0) throw std::invalid_argument("nl_embed_channels must be >= 0");
  if (decoder_stages != kEncoderBlocks) {
    throw std::invalid_argument(fmt::format("decoder_stages must be {}, got {}", kEncoderBlocks, decoder_stages));
  }
  if (decoder_kernel < 1) throw std::invalid_argument("decoder_kernel must be >= 1");
}

int NetworkSpec::nl_embed() const {
  return nl_embed_channels > 0 ? nl_embed_channels : default_embed_channels(nl_channels());
}

NetworkSpec NetworkSpec::static_default() { return NetworkSpec{}; }

NetworkSpec NetworkSpec::dynamic_default() {
  NetworkSpec s;
  s.input_channels = 7;
  return s;
}

std::vector<EncoderBlockSpec> NetworkSpec::vgg16_blocks() {
  return {{2, 64}, {2, 128}, {3, 256}, {3, 512}, {3, 512}};
}

// ---------------------------------------------------------------- parameters

Tensor& ParameterStore::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw std::invalid_argument(fmt::format("duplicate parameter '{}'", name));
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(value)});
  return entries_.back().value;
}

Tensor* ParameterStore::find(std::string_view name) {
  const auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second].value;
}

const Tensor* ParameterStore::find(std::string_view name) const {
  const auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second].value;
}

Tensor& ParameterStore::at(std::string_view name) {
  Tensor* t = find(name);
  if (t == nullptr) throw std::invalid_argument(fmt::format("unknown parameter '{}'", name));
  return *t;
}

const Tensor& ParameterStore::at(std::string_view name) const {
  const Tensor* t = find(name);
  if (t == nullptr) throw std::invalid_argument(fmt::format("unknown parameter '{}'", name));
  return *t;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.value.zero_grad();
}

std::vector<NamedTensor> ParameterStore::to_named() const {
  std::vector<NamedTensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back({e.name, Tensor(e.value.shape(), {e.value.data().begin(), e.value.data().end()})});
  return out;
}

void ParameterStore::assign(std::span<const NamedTensor> tensors, bool require_all) {
  std::map<std::string, const Tensor*, std::less<>> incoming;
  for (const auto& t : tensors) {
    Tensor* dst = find(t.name);
    if (dst == nullptr) throw std::invalid_argument(fmt::format("weight file has unknown parameter '{}'", t.name));
    if (!(dst->shape() == t.tensor.shape())) {
      throw ShapeError(fmt::format("parameter '{}' has shape {} but the weight file stores {}", t.name,
                                   dst->shape().str(), t.tensor.shape().str()));
    }
    incoming[t.name] = &t.tensor;
  }
  if (require_all) {
    for (const auto& e : entries_) {
      if (!incoming.contains(e.name)) {
        throw std::invalid_argument(fmt::format("weight file lacks parameter '{}'", e.name));
      }
    }
  }
  for (auto& [name, src] : incoming) {
    Tensor& dst = at(name);
    std::copy(src->data().begin(), src->data().end(), dst.data().begin());
  }
}

// ---------------------------------------------------------------- network

namespace {

std::string enc_name(int block, int conv, const char* part) {
  return fmt::format("enc{}.conv{}.{}", block, conv, part);
}
std::string dec_name(int stage, const char* part) { return fmt::format("dec{}.{}", stage, part); }
std::string nl_name(int index, const char* part) { return fmt::format("nl{}.{}", index, part); }

// Decoder stage l mirrors encoder block l-1 (stage 1 keeps block 1's width).
int decoder_out_channels(const NetworkSpec& s, int stage) {
  return stage >= 2 ? s.block_width(stage - 1) : s.block_width(1);
}

int decoder_in_channels(const NetworkSpec& s, int stage) {
  if (stage == kEncoderBlocks) return s.block_width(kEncoderBlocks);
  return decoder_out_channels(s, stage + 1) + s.block_width(stage);
}

}  // namespace

Network::Network(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  auto init = [seed](const std::string& name, Shape shape, double fan_in) {
    Rng rng(derive_seed(seed, name));
    return he_uniform(shape, fan_in, rng);
  };
  const int k3 = 3;
  int channels = spec_.input_channels;
  for (int b = 1; b <= kEncoderBlocks; ++b) {
    const auto& block = spec_.encoder_blocks[b - 1];
    for (int i = 1; i <= block.convs; ++i) {
      const std::string kname = enc_name(b, i, "kernel");
      params_.add(kname, init(kname, {k3, k3, channels, block.width}, k3 * k3 * channels));
      params_.add(enc_name(b, i, "bias"), Tensor({1, 1, 1, block.width}));
      channels = block.width;
    }
    if (b == spec_.nl_after_block) {
      const int c = spec_.nl_channels();
      const int e = spec_.nl_embed();
      for (int n = 1; n <= spec_.nl_count; ++n) {
        for (const char* part : {"theta", "phi", "g"}) {
          const std::string name = nl_name(n, part);
          params_.add(name, init(name, {1, 1, c, e}, c));
        }
        const std::string zname = nl_name(n, "z");
        params_.add(zname, init(zname, {1, 1, e, c}, e));
      }
    }
  }
  const int kd = spec_.decoder_kernel;
  for (int l = kEncoderBlocks; l >= 1; --l) {
    const int cin = decoder_in_channels(spec_, l);
    const int cout = decoder_out_channels(spec_, l);
    // Each stride-2 output pixel sees kd*kd/4 taps per input channel.
    const double fan_in = std::max(1.0, kd * kd * cin / 4.0);
    const std::string kname = dec_name(l, "kernel");
    params_.add(kname, init(kname, {kd, kd, cout, cin}, fan_in));
    params_.add(dec_name(l, "bias"), Tensor({1, 1, 1, cout}));
  }
  const int head_in = decoder_out_channels(spec_, 1);
  params_.add("head.kernel", init("head.kernel", {1, 1, head_in, 1}, head_in));
  params_.add("head.bias", Tensor({1, 1, 1, 1}));
}

template <typename Bind>
Var Network::forward_with(Var input, ForwardInfo* info, Bind&& bind) const {
  const Shape in = input.shape();
  if (in.n != 1) throw ShapeError(fmt::format("network expects batch 1, got {}", in.str()));
  if (in.c != spec_.input_channels) {
    throw ShapeError(fmt::format("network expects {} input channels, got {} ({})", spec_.input_channels,
                                 in.c, in.str()));
  }
  if (in.h < 1 || in.w < 1) throw ShapeError(fmt::format("empty network input {}", in.str()));
  const int ph = (in.h + kDownsampleFactor - 1) / kDownsampleFactor * kDownsampleFactor;
  const int pw = (in.w + kDownsampleFactor - 1) / kDownsampleFactor * kDownsampleFactor;
  if (info != nullptr) *info = ForwardInfo{in.h, in.w, ph, pw};

  Var feat = (ph != in.h || pw != in.w) ? pad_replicate(input, ph, pw) : input;
  std::array<Var, kEncoderBlocks + 1> skips{};
  for (int b = 1; b <= kEncoderBlocks; ++b) {
    const auto& block = spec_.encoder_blocks[b - 1];
    for (int i = 1; i <= block.convs; ++i) {
      feat = relu(conv2d(feat, bind(enc_name(b, i, "kernel")), bind(enc_name(b, i, "bias")), 1, Padding::kSame));
    }
    feat = maxpool2d(feat, 2);
    if (b == spec_.nl_after_block) {
      for (int n = 1; n <= spec_.nl_count; ++n) {
        feat = nonlocal_block(feat, {bind(nl_name(n, "theta")), bind(nl_name(n, "phi")), bind(nl_name(n, "g")),
                                     bind(nl_name(n, "z")), spec_.nl_activation})
                   .z;
      }
    }
    skips[b] = feat;
  }

  Var out = skips[kEncoderBlocks];
  for (int l = kEncoderBlocks; l >= 1; --l) {
    const Var stage_in = l == kEncoderBlocks ? out : concat_channels(out, skips[l]);
    out = relu(conv2d_transpose(stage_in, bind(dec_name(l, "kernel")), bind(dec_name(l, "bias")), 2));
  }
  Var s = sigmoid(conv2d(out, bind("head.kernel"), bind("head.bias"), 1, Padding::kSame));
  if (ph != in.h || pw != in.w) s = crop(s, in.h, in.w);
  return s;
}

Var Network::forward(Tape& tape, Var input, ForwardInfo* info) {
  return forward_with(input, info, [&](const std::string& name) { return tape.parameter(params_.at(name)); });
}

Var Network::forward_frozen(Tape& tape, Var input, ForwardInfo* info) const {
  return forward_with(input, info,
                      [&](const std::string& name) { return tape.parameter(params_.at(name)); });
}

Var Network::forward_bound(Var input, std::span<const Var> params, ForwardInfo* info) const {
  if (params.size() != params_.size()) {
    throw std::invalid_argument(fmt::format("forward_bound: {} variables for {} parameters", params.size(),
                                            params_.size()));
  }
  std::map<std::string, Var, std::less<>> by_name;
  std::size_t i = 0;
  for (const auto& e : params_) {
    require_same_shape(params[i].shape(), e.value.shape(), e.name.c_str());
    by_name.emplace(e.name, params[i++]);
  }
  return forward_with(input, info, [&](const std::string& name) { return by_name.at(name); });
}

Tensor Network::predict(const Tensor& input, ForwardInfo* info) const {
  Tape tape;
  const Var out = forward_frozen(tape, tape.constant(input), info);
  return tape.value(out);
}

int Network::nl_group_count() const {
  int n = 0;
  while (params_.find(nl_name(n + 1, "theta")) != nullptr) ++n;
  return n;
}

NonLocalParams Network::nl_params(int index) const {
  NonLocalParams p;
  p.w_theta = params_.at(nl_name(index, "theta"));
  p.w_phi = params_.at(nl_name(index, "phi"));
  p.w_g = params_.at(nl_name(index, "g"));
  p.w_z = params_.at(nl_name(index, "z"));
  p.activation = spec_.nl_activation;
  return p;
}

void Network::save(const std::filesystem::path& path) const { save_weights(path, params_.to_named()); }

void Network::load(const std::filesystem::path& path) { params_.assign(load_weights(path)); }

Network build_static_net(const NetworkSpec& spec, std::uint64_t seed) {
  if (spec.input_channels != 3) {
    throw std::invalid_argument(fmt::format("static net needs 3 input channels, spec has {}", spec.input_channels));
  }
  return Network(spec, seed);
}

Network build_dynamic_net(const NetworkSpec& spec, std::uint64_t seed) {
  if (spec.input_channels != 7) {
    throw std::invalid_argument(fmt::format("dynamic net needs 7 input channels, spec has {}", spec.input_channels));
  }
  return Network(spec, seed);
}

Tensor make_dynamic_input(const Tensor& frame_t, const Tensor& frame_next, const SaliencyMap& static_map) {
  const Shape& a = frame_t.shape();
  const Shape& b = frame_next.shape();
  if (a.n != 1 || a.c != 3 || !(a == b)) {
    throw ShapeError(fmt::format("dynamic input needs two 1xHxWx3 frames of equal size, got {} and {}",
                                 a.str(), b.str()));
  }
  if (static_map.height != a.h || static_map.width != a.w) {
    throw ShapeError(fmt::format("static map {}x{} does not match frames {}", static_map.height,
                                 static_map.width, a.str()));
  }
  Tensor out({1, a.h, a.w, 7});
  const std::size_t pixels = static_cast<std::size_t>(a.h) * a.w;
  for (std::size_t p = 0; p < pixels; ++p) {
    for (int c = 0; c < 3; ++c) {
      out[p * 7 + c] = frame_t[p * 3 + c];
      out[p * 7 + 3 + c] = frame_next[p * 3 + c];
    }
    out[p * 7 + 6] = static_map.values[p];
  }
  return out;
}

SaliencyMap static_forward(const Network& net, const Tensor& frame, ForwardInfo* info) {
  if (net.spec().input_channels != 3) throw std::invalid_argument("static_forward needs a static (3-channel) net");
  return saliency_from_tensor(net.predict(frame, info));
}

SaliencyMap dynamic_forward(const Network& net, const Tensor& frame_t, const Tensor& frame_next,
                            const SaliencyMap& static_map, ForwardInfo* info) {
  if (net.spec().input_channels != 7) throw std::invalid_argument("dynamic_forward needs a dynamic (7-channel) net");
  return saliency_from_tensor(net.predict(make_dynamic_input(frame_t, frame_next, static_map), info));
}

}  // namespace nlsal

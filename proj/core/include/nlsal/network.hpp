#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlsal/maps.hpp"
#include "nlsal/nonlocal.hpp"
#include "nlsal/tape.hpp"
#include "nlsal/weights_io.hpp"

namespace nlsal {

inline constexpr int kEncoderBlocks = 5;
/// Total downsampling of the encoder (five 2x2 poolings).
inline constexpr int kDownsampleFactor = 32;

struct EncoderBlockSpec {
  int convs = 2;
  int width = 16;
  friend bool operator==(const EncoderBlockSpec&, const EncoderBlockSpec&) = default;
};

/// Layer-graph description shared by the static (3-channel) and dynamic
/// (7-channel) networks.
struct NetworkSpec {
  int input_channels = 3;
  std::vector<EncoderBlockSpec> encoder_blocks{{2, 16}, {2, 32}, {2, 64}, {2, 128}, {2, 128}};
  int nl_after_block = 5;
  int nl_count = 3;
  /// 0 selects default_embed_channels() of the tapped block's width.
  int nl_embed_channels = 0;
  EmbedActivation nl_activation = EmbedActivation::kLinear;
  int decoder_stages = 5;
  int decoder_kernel = 4;

  void validate() const;
  [[nodiscard]] int block_width(int block) const { return encoder_blocks.at(block - 1).width; }
  [[nodiscard]] int nl_channels() const { return block_width(nl_after_block); }
  [[nodiscard]] int nl_embed() const;

  static NetworkSpec static_default();
  static NetworkSpec dynamic_default();
  /// Encoder widths of VGG-16 with its 2,2,3,3,3 layer layout.
  static std::vector<EncoderBlockSpec> vgg16_blocks();

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Ordered, uniquely named parameter tensors. References stay valid for the
/// lifetime of the store.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  Tensor& add(std::string name, Tensor value);
  [[nodiscard]] Tensor* find(std::string_view name);
  [[nodiscard]] const Tensor* find(std::string_view name) const;
  Tensor& at(std::string_view name);
  [[nodiscard]] const Tensor& at(std::string_view name) const;

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] std::size_t scalar_count() const;
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  [[nodiscard]] auto begin() const { return entries_.begin(); }
  [[nodiscard]] auto end() const { return entries_.end(); }

  void zero_grad();
  [[nodiscard]] std::vector<NamedTensor> to_named() const;
  /// Copies values from `tensors`. Throws ShapeError naming the offending
  /// parameter on a shape mismatch, and std::invalid_argument for a name the
  /// store lacks (or, when `require_all`, one the file lacks).
  void assign(std::span<const NamedTensor> tensors, bool require_all = true);

 private:
  std::deque<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Set when a forward pass had to replicate-pad its input.
struct ForwardInfo {
  int input_height = 0;
  int input_width = 0;
  int padded_height = 0;
  int padded_width = 0;
  [[nodiscard]] bool padded() const { return padded_height != input_height || padded_width != input_width; }
};

/// Encoder (VGG-style blocks), non-local blocks after one encoder block,
/// skip-connected transposed-conv decoder, 1x1 sigmoid head.
///
/// Parameter names:
///   enc{b}.conv{i}.kernel / .bias   b = 1..5
///   nl{n}.theta / .phi / .g / .z    n = 1..nl_count
///   dec{l}.kernel / .bias           l = 5..1
///   head.kernel / .bias
class Network {
 public:
  Network(NetworkSpec spec, std::uint64_t seed);

  [[nodiscard]] const NetworkSpec& spec() const { return spec_; }
  ParameterStore& parameters() { return params_; }
  [[nodiscard]] const ParameterStore& parameters() const { return params_; }

  /// Taped forward; parameters receive gradients on backward().
  Var forward(Tape& tape, Var input, ForwardInfo* info = nullptr);
  /// Taped forward with read-only parameters.
  Var forward_frozen(Tape& tape, Var input, ForwardInfo* info = nullptr) const;
  /// Taped forward with every parameter supplied as a variable, in store
  /// order (one per ParameterStore entry).
  Var forward_bound(Var input, std::span<const Var> params, ForwardInfo* info = nullptr) const;
  /// {1, h, w, C_in} -> {1, h, w, 1} in (0, 1).
  [[nodiscard]] Tensor predict(const Tensor& input, ForwardInfo* info = nullptr) const;

  [[nodiscard]] int nl_group_count() const;
  NonLocalParams nl_params(int index) const;

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  template <typename Bind>
  Var forward_with(Var input, ForwardInfo* info, Bind&& bind) const;

  NetworkSpec spec_;
  ParameterStore params_;
};

Network build_static_net(const NetworkSpec& spec, std::uint64_t seed);
Network build_dynamic_net(const NetworkSpec& spec, std::uint64_t seed);

/// Channel concatenation (I_t, I_{t+1}, S_t) -> {1, h, w, 7}.
Tensor make_dynamic_input(const Tensor& frame_t, const Tensor& frame_next, const SaliencyMap& static_map);

SaliencyMap static_forward(const Network& net, const Tensor& frame, ForwardInfo* info = nullptr);
SaliencyMap dynamic_forward(const Network& net, const Tensor& frame_t, const Tensor& frame_next,
                            const SaliencyMap& static_map, ForwardInfo* info = nullptr);

}  // namespace nlsal

#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "nlsal/network.hpp"
#include "nlsal/weights_io.hpp"
#include "oracles.hpp"

namespace nlsal {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;

NetworkSpec tiny_spec(int input_channels = 3, int nl_count = 2) {
  NetworkSpec s;
  s.input_channels = input_channels;
  s.encoder_blocks = {{1, 4}, {1, 4}, {1, 6}, {1, 8}, {1, 8}};
  s.nl_after_block = 4;
  s.nl_count = nl_count;
  return s;
}

TEST(NetworkSpec, DefaultsHaveThreeNonLocalGroups) {
  const Network net(NetworkSpec::static_default(), 1);
  EXPECT_EQ(net.nl_group_count(), 3);
  for (const char* name : {"nl1.theta", "nl2.phi", "nl3.g", "nl3.z"}) {
    EXPECT_NE(net.parameters().find(name), nullptr) << name;
  }
  EXPECT_EQ(net.parameters().find("nl4.theta"), nullptr);
}

TEST(NetworkSpec, ZeroCountHasNoNonLocalParameters) {
  const Network plain(tiny_spec(3, 0), 1);
  const Network with_nl(tiny_spec(3, 2), 1);
  for (const auto& e : plain.parameters()) EXPECT_NE(e.name.rfind("nl", 0), 0u) << e.name;
  // Two blocks on 8 channels with 4 embedding channels: 4 kernels of 32 each.
  EXPECT_EQ(with_nl.parameters().scalar_count() - plain.parameters().scalar_count(), 2u * 4u * 32u);
}

TEST(NetworkSpec, InvalidSpecsRejected) {
  NetworkSpec s = tiny_spec();
  s.nl_after_block = 2;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = tiny_spec();
  s.input_channels = 4;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = tiny_spec();
  s.nl_count = 6;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Network, OutputIsSingleChannelProbability) {
  const Network net = build_static_net(tiny_spec(), 2);
  const Tensor out = net.predict(random_tensor({1, 64, 64, 3}, 3, 0.0, 1.0));
  ASSERT_EQ(out.shape(), (Shape{1, 64, 64, 1}));
  for (double v : out.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Network, ZeroParametersGiveSigmoidOfHeadBias) {
  Network net = build_static_net(tiny_spec(), 4);
  for (auto& e : net.parameters()) std::fill(e.value.data().begin(), e.value.data().end(), 0.0);
  net.parameters().at("head.bias")[0] = 0.8;
  const Tensor out = net.predict(random_tensor({1, 32, 32, 3}, 5, 0.0, 1.0));
  const double want = 1.0 / (1.0 + std::exp(-0.8));
  for (double v : out.data()) EXPECT_NEAR(v, want, 1e-15);
}

TEST(Network, RepeatedForwardIsIdentical) {
  const Network net = build_static_net(tiny_spec(), 6);
  const Tensor x = random_tensor({1, 32, 32, 3}, 7, 0.0, 1.0);
  EXPECT_EQ(max_abs_diff(net.predict(x), net.predict(x)), 0.0);
}

TEST(Network, NonMultipleSizeIsPaddedAndCropped) {
  const Network net = build_static_net(tiny_spec(), 8);
  ForwardInfo info;
  const Tensor out = net.predict(random_tensor({1, 37, 50, 3}, 9, 0.0, 1.0), &info);
  EXPECT_EQ(out.shape(), (Shape{1, 37, 50, 1}));
  EXPECT_TRUE(info.padded());
  EXPECT_EQ(info.padded_height, 64);
  EXPECT_EQ(info.padded_width, 64);
}

TEST(Network, WrongChannelCountRejected) {
  const Network net = build_static_net(tiny_spec(), 10);
  EXPECT_THROW(net.predict(Tensor({1, 32, 32, 7})), ShapeError);
  EXPECT_THROW(build_static_net(tiny_spec(7), 1), std::invalid_argument);
  EXPECT_THROW(build_dynamic_net(tiny_spec(3), 1), std::invalid_argument);
}

TEST(Network, ZeroWzMatchesPlainNetwork) {
  // Same seed: every non-NL parameter is shared.
  Network with_nl = build_static_net(tiny_spec(3, 3), 11);
  const Network plain = build_static_net(tiny_spec(3, 0), 11);
  for (int n = 1; n <= 3; ++n) {
    auto& wz = with_nl.parameters().at("nl" + std::to_string(n) + ".z");
    std::fill(wz.data().begin(), wz.data().end(), 0.0);
  }
  const Tensor x = random_tensor({1, 32, 64, 3}, 12, 0.0, 1.0);
  EXPECT_EQ(max_abs_diff(with_nl.predict(x), plain.predict(x)), 0.0);
}

TEST(DynamicNet, InputConcatenatesSevenChannels) {
  const Tensor a = random_tensor({1, 64, 64, 3}, 13, 0.0, 1.0);
  const Tensor b = random_tensor({1, 64, 64, 3}, 14, 0.0, 1.0);
  SaliencyMap s(64, 64, 0.25);
  const Tensor in = make_dynamic_input(a, b, s);
  ASSERT_EQ(in.shape(), (Shape{1, 64, 64, 7}));
  EXPECT_EQ(in.at(0, 5, 6, 1), a.at(0, 5, 6, 1));
  EXPECT_EQ(in.at(0, 5, 6, 4), b.at(0, 5, 6, 1));
  EXPECT_EQ(in.at(0, 5, 6, 6), 0.25);
}

TEST(DynamicNet, SizeMismatchRejected) {
  const Tensor a({1, 32, 32, 3});
  EXPECT_THROW(make_dynamic_input(a, Tensor({1, 32, 31, 3}), SaliencyMap(32, 32)), ShapeError);
  EXPECT_THROW(make_dynamic_input(a, a, SaliencyMap(32, 30)), ShapeError);
}

TEST(DynamicNet, StillFramesStillGiveValidMap) {
  const Network net = build_dynamic_net(tiny_spec(7), 15);
  const Tensor f = random_tensor({1, 32, 32, 3}, 16, 0.0, 1.0);
  const SaliencyMap s = dynamic_forward(net, f, f, SaliencyMap(32, 32, 0.5));
  ASSERT_EQ(s.values.size(), 32u * 32u);
  for (double v : s.values) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Weights, SaveLoadRoundTripsExactly) {
  const testing::TempDir dir("weights");
  const Network a = build_static_net(tiny_spec(), 17);
  a.save(dir / "a.weights");
  Network b = build_static_net(tiny_spec(), 99);
  b.load(dir / "a.weights");
  auto it = b.parameters().begin();
  for (const auto& e : a.parameters()) {
    EXPECT_EQ(e.name, it->name);
    EXPECT_EQ(max_abs_diff(e.value, it->value), 0.0) << e.name;
    ++it;
  }
  b.save(dir / "b.weights");
  EXPECT_EQ(testing::read_file(dir / "a.weights"), testing::read_file(dir / "b.weights"));
}

TEST(Weights, ShapeMismatchNamesParameter) {
  const testing::TempDir dir("weights");
  build_static_net(tiny_spec(), 18).save(dir / "w");
  NetworkSpec wider = tiny_spec();
  wider.encoder_blocks[0].width = 5;
  Network other(wider, 18);
  try {
    other.load(dir / "w");
    FAIL() << "load accepted mismatched weights";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("enc1.conv1.kernel"), std::string::npos) << e.what();
  }
}

TEST(Weights, BadMagicAndTruncationRejected) {
  std::istringstream junk("NOTAWEIGHTFILE");
  EXPECT_THROW(read_weights(junk), WeightFormatError);
  std::ostringstream out;
  const std::vector<NamedTensor> ts{{"x", random_tensor({1, 2, 2, 1}, 19)}};
  write_weights(out, ts);
  const std::string full = out.str();
  std::istringstream cut(full.substr(0, full.size() - 5));
  EXPECT_THROW(read_weights(cut), WeightFormatError);
  std::istringstream whole(full);
  const auto back = read_weights(whole);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].name, "x");
  EXPECT_EQ(max_abs_diff(back[0].tensor, ts[0].tensor), 0.0);
}

}  // namespace
}  // namespace nlsal

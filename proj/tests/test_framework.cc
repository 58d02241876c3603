#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <sstream>

#include "rawcsi/framework.h"
#include "test_util.h"

namespace rawcsi::framework {
namespace {

using rawcsi::testing::codeOf;

// Golden file with comments and blank lines dropped.
std::string golden(const std::string& name) {
  std::ifstream in(std::string(RAWCSI_GOLDEN_DIR) + "/" + name);
  EXPECT_TRUE(in.good()) << name;
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out += line + "\n";
  }
  return out;
}

TEST(Presets, SignfiMatchesGolden) {
  const auto spec = signfiPreset({400, 30, 3}, 276);
  EXPECT_EQ(spec.conv.size(), 4u);
  EXPECT_EQ(spec.poolBank.size(), 5u);
  EXPECT_EQ(serialize(spec, "arch."), golden("signfi_preset.cfg"));
  EXPECT_EQ(parseArchitecture(KeyValueConfig::parse(golden("signfi_preset.cfg")), "arch."), spec);
}

TEST(Presets, ActivityMatchesGolden) {
  const auto spec = activityPreset({10, 52, 1}, 8);
  EXPECT_EQ(spec.conv.size(), 7u);
  EXPECT_EQ(spec.poolBank.size(), 3u);
  EXPECT_EQ(spec.fc.size(), 2u);
  EXPECT_EQ(serialize(spec, "arch."), golden("activity_preset.cfg"));
  EXPECT_EQ(parseArchitecture(KeyValueConfig::parse(golden("activity_preset.cfg")), "arch."), spec);
}

TEST(Presets, IncompatibleInputs) {
  EXPECT_EQ(codeOf([] { signfiPreset({40, 30, 3}, 10); }), Errc::kShapeIncompatible);
  EXPECT_EQ(codeOf([] { signfiPreset({400, 8, 3}, 10); }), Errc::kShapeIncompatible);
  EXPECT_EQ(codeOf([] { activityPreset({10, 8, 1}, 8); }), Errc::kShapeIncompatible);
  EXPECT_EQ(codeOf([] { activityPreset({10, 3, 1}, 8); }), Errc::kShapeIncompatible);
}

TEST(Validate, FrameworkRules) {
  auto spec = activityPreset({10, 30, 1}, 4);
  spec.conv[0].kernel = {3, 3};
  try {
    validate(spec);
    FAIL() << "expected ValidationFailed";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kValidationFailed);
    EXPECT_NE(std::string(e.what()).find("first stage must be 2x1/2x1"), std::string::npos);
  }
  auto noPools = activityPreset({10, 30, 1}, 4);
  noPools.poolBank.clear();
  EXPECT_EQ(codeOf([&] { validate(noPools); }), Errc::kValidationFailed);
  auto oneClass = activityPreset({10, 30, 1}, 4);
  oneClass.numClasses = 1;
  EXPECT_EQ(codeOf([&] { validate(oneClass); }), Errc::kValidationFailed);
}

TEST(Build, SignfiForwardIsProbabilityVector) {
  const auto spec = signfiPreset({400, 30, 3}, 276);
  auto net = build(spec, 4);
  auto e = makeEngine(1, {2});
  Tensor x({1, 400, 30, 3});
  for (double& v : x.data()) v = uniform(e, -1, 1);
  const Tensor p = net.predict(x);
  ASSERT_EQ(p.shape(), (Shape{1, 276}));
  EXPECT_NEAR(std::accumulate(p.data().begin(), p.data().end(), 0.0), 1.0, 1e-12);
}

TEST(Build, SeedDeterminesParameters) {
  const auto spec = activityPreset({10, 30, 1}, 5, 8);
  EXPECT_EQ(build(spec, 17).parameters(), build(spec, 17).parameters());
  EXPECT_NE(build(spec, 17).parameters(), build(spec, 18).parameters());
}

TEST(Ablate, Knobs) {
  const auto signfi = signfiPreset({400, 30, 3}, 276);
  const auto d1 = ablate(signfi, ConvDepth{1});
  ASSERT_EQ(d1.conv.size(), 1u);
  EXPECT_EQ(d1.conv[0].kernel, (Extent2{2, 1}));
  EXPECT_EQ(ablate(signfi, ConvDepth{4}), signfi);
  EXPECT_EQ(codeOf([&] { ablate(signfi, ConvDepth{5}); }), Errc::kInvalidKnob);
  EXPECT_EQ(codeOf([&] { ablate(signfi, ConvDepth{0}); }), Errc::kInvalidKnob);

  const auto activity = ablate(activityPreset({10, 52, 1}, 8), BatchNormOff{});
  EXPECT_EQ(activity.conv.size(), 7u);
  for (const auto& c : activity.conv) EXPECT_FALSE(c.batchNorm);

  const auto flat = ablate(activityPreset({10, 52, 1}, 8, 4), AvgPoolOff{});
  EXPECT_TRUE(flat.poolBypass);
  EXPECT_TRUE(flat.poolBank.empty());
  EXPECT_EQ(nn::shapeCheck(toNetworkSpec(flat)).features, 5u * 52 * 4);

  EXPECT_EQ(knobName(parseKnob("depth:3")), "depth:3");
  EXPECT_EQ(knobName(parseKnob("bn-off")), "bn-off");
  EXPECT_EQ(knobName(parseKnob("pool-off")), "pool-off");
  EXPECT_EQ(codeOf([] { parseKnob("depth:x"); }), Errc::kInvalidKnob);
}

TEST(Serialize, RoundTripsAblatedSpecs) {
  auto spec = ablate(ablate(signfiPreset({400, 30, 3}, 12, 16), BatchNormOff{}), AvgPoolOff{});
  EXPECT_EQ(parseArchitecture(KeyValueConfig::parse(serialize(spec)), ""), spec);
  EXPECT_EQ(parseExtent("40x3"), (Extent2{40, 3}));
  EXPECT_EQ(codeOf([] { parseExtent("40"); }), Errc::kConfigInvalid);
}

}  // namespace
}  // namespace rawcsi::framework

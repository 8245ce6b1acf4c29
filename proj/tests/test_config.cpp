/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <numbers>

#include "oftrack/config.hpp"

namespace oftrack::config {
namespace {

std::string config_error(const std::string& text) {
  try {
    const KeyValueDoc doc = resolve(KeyValueDoc::parse(text, "test.cfg"));
    const sim::Scenario sc = scenario_from(doc);
    fusion_from(doc, sc);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config) << e.what();
    return e.what();
  }
  return "";
}

TEST(KeyValueDoc, ParsesCommentsAndWhitespace) {
  const KeyValueDoc d = KeyValueDoc::parse("# c\n\n  seed = 5 \nfusion.n=30\r\n", "x");
  ASSERT_TRUE(d.has("seed"));
  EXPECT_EQ(d.find("seed")->value, "5");
  EXPECT_EQ(d.find("fusion.n")->origin, "x:4");
  EXPECT_EQ(d.to_string(), "fusion.n=30\nseed=5\n");
}

TEST(KeyValueDoc, RejectsMalformedAndDuplicates) {
  EXPECT_THROW(KeyValueDoc::parse("seed 5\n"), Error);
  EXPECT_THROW(KeyValueDoc::parse("seed=1\nseed=2\n"), Error);
  EXPECT_THROW(KeyValueDoc::parse("=2\n"), Error);
}

TEST(Config, DefaultsWithoutKeys) {
  const KeyValueDoc doc;
  const sim::Scenario sc = scenario_from(doc);
  const FusionConfig cfg = fusion_from(doc, sc);
  EXPECT_EQ(cfg.window, 40u);
  EXPECT_EQ(cfg.velocity_window, 10u);
  EXPECT_DOUBLE_EQ(cfg.sample_period, 0.01);
  EXPECT_DOUBLE_EQ(cfg.alpha, 0.01);
  EXPECT_DOUBLE_EQ(cfg.max_expected_accel, 5.0);
}

TEST(Config, EveryPresetBuilds) {
  for (const std::string& name : preset_names()) {
    const KeyValueDoc doc = resolve(KeyValueDoc{}, name);
    const sim::Scenario sc = scenario_from(doc);
    EXPECT_NO_THROW(fusion_from(doc, sc)) << name;
    EXPECT_NO_THROW(sim::resolve_occlusions(sc.occlusions, sc.trajectory, sc.position_rate)) << name;
  }
  EXPECT_THROW(preset_text("nope"), Error);
}

TEST(Config, PresetThenOverrides) {
  const KeyValueDoc doc = resolve(KeyValueDoc::parse("preset=circular\nfusion.n=24\nseed=9\n"));
  const sim::Scenario sc = scenario_from(doc);
  const FusionConfig cfg = fusion_from(doc, sc);
  EXPECT_EQ(sc.trajectory.kind, sim::TrajectoryKind::Circular);
  EXPECT_DOUBLE_EQ(sc.trajectory.amplitude, 0.3);
  EXPECT_EQ(sc.seed, 9u);
  EXPECT_EQ(cfg.window, 24u);
  EXPECT_EQ(cfg.orientation_mode, OrientationMode::Gyro);
}

TEST(Config, ProfileAppliedBeforeFieldOverrides) {
  const KeyValueDoc doc =
      KeyValueDoc::parse("imu.bias=0.1,0.2,0.3\nimu.profile=high_cost\n");
  const sim::Scenario sc = scenario_from(doc);
  EXPECT_EQ(sc.imu.bias, Vec3(0.1, 0.2, 0.3));
  EXPECT_EQ(sc.imu.noise_sigma, Vec3::Constant(0.005));
}

TEST(Config, ValueShapes) {
  const KeyValueDoc doc = KeyValueDoc::parse(
      "occlusion.generator=windows\n"
      "occlusion.windows=2:0.3; 4.5:0.25\n"
      "fusion.r_imu_body=0,-1,0,1,0,0,0,0,1\n"
      "fusion.initial_orientation=2,0,0,0\n"
      "fusion.gain=1.1,0.9,1\n"
      "position.rate=200\n");
  const sim::Scenario sc = scenario_from(doc);
  const FusionConfig cfg = fusion_from(doc, sc);
  ASSERT_EQ(sc.occlusions.windows.size(), 2u);
  EXPECT_DOUBLE_EQ(sc.occlusions.windows[1].start, 4.5);
  EXPECT_DOUBLE_EQ(sc.occlusions.windows[1].duration, 0.25);
  EXPECT_DOUBLE_EQ(cfg.imu_to_body(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(cfg.initial_orientation.w(), 1.0);
  EXPECT_EQ(cfg.gain, Vec3(1.1, 0.9, 1.0));
  EXPECT_DOUBLE_EQ(cfg.sample_period, 0.005);
}

TEST(Config, MountDefaultsToScenario) {
  const KeyValueDoc doc = resolve(KeyValueDoc{}, "use_case_yz");
  const sim::Scenario sc = scenario_from(doc);
  const FusionConfig cfg = fusion_from(doc, sc);
  EXPECT_EQ(cfg.imu_to_body.matrix(), sc.imu.imu_to_body.matrix());
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(config_error("fusion.bogus=1\n").find("fusion.bogus"), std::string::npos);
  EXPECT_NE(config_error("fusion.n=abc\n").find("'fusion.n' (test.cfg:1)"), std::string::npos);
  EXPECT_NE(config_error("fusion.gain=1,2\n").find("fusion.gain"), std::string::npos);
  EXPECT_NE(config_error("trajectory.kind=spiral\n").find("arm_lift|circular"), std::string::npos);
  EXPECT_NE(config_error("fusion.r_imu_body=1,0,0,0,1,0,0,0,-1\n").find("fusion.r_imu_body"),
            std::string::npos);
  EXPECT_NE(config_error("fusion.nv=50\n").find("fusion.nv"), std::string::npos);
  EXPECT_NE(config_error("imu.rate=10\n").find("imu.rate"), std::string::npos);
  EXPECT_NE(config_error("preset=nope\n").find("unknown preset"), std::string::npos);
}

}  // namespace
}  // namespace oftrack::config

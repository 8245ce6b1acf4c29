/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "oftrack/trace.hpp"

namespace oftrack::trace {
namespace {

Trace round_trip(const Trace& t) {
  std::stringstream buf;
  write_trace(buf, t);
  return read_trace(buf);
}

ErrorCode read_error(const std::string& text) {
  std::istringstream in(text);
  try {
    read_trace(in);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

std::string header(const std::string& streams) {
  std::string h = "#oftrace/1\n#streams=" + streams + "\n#units=m,s,rad/s\n";
  if (streams.find("position") != std::string::npos) h += "#schema.position=t,x,y,z,valid\n";
  if (streams.find("imu") != std::string::npos) h += "#schema.imu=t,ax,ay,az,gx,gy,gz\n";
  return h;
}

TEST(Trace, EmptyStreamIsHeaderOnly) {
  Trace t;
  t.header.streams = {Stream::Position};
  std::stringstream buf;
  write_trace(buf, t);
  EXPECT_EQ(buf.str(), header("position"));
  const Trace back = read_trace(buf);
  EXPECT_TRUE(back.records.empty());
  EXPECT_EQ(back.header.streams, t.header.streams);
  EXPECT_FALSE(back.header.seed);
}

TEST(Trace, SinglePositionRecord) {
  Trace t;
  t.header.seed = 7;
  t.header.streams = {Stream::Position};
  t.records.push_back({PositionSample{0.01, Vec3(0.1, 1.2, -0.3), true}});
  std::stringstream buf;
  write_trace(buf, t);
  EXPECT_NE(buf.str().find("#seed=7\n"), std::string::npos);
  EXPECT_NE(buf.str().find("position,0.01,0.1,1.2,-0.3,1\n"), std::string::npos);
  const Trace back = read_trace(buf);
  ASSERT_EQ(back.records.size(), 1u);
  EXPECT_EQ(back.records[0], t.records[0]);
  EXPECT_EQ(*back.header.seed, 7u);
}

TEST(Trace, MixedStreamsRoundTripBitExact) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::normal_distribution<double> n(0.0, 1.0);
  Trace t;
  t.header.seed = 123456789012345ull;
  t.header.streams = {Stream::Position, Stream::Imu, Stream::Truth, Stream::Fused};
  for (int i = 0; i < 2000; ++i) {
    const double ts = i * 0.01 + 1e-13 * i;
    const Vec3 p(u(rng), u(rng) * 1e-9, u(rng) * 1e7);
    const auto q = UnitQuaternion::normalized(n(rng), n(rng), n(rng), n(rng));
    t.records.push_back({PositionSample{ts, p, i % 3 != 0}});
    t.records.push_back({ImuSample{ts, Vec3(u(rng), u(rng), u(rng)), Vec3(n(rng), n(rng), n(rng))}});
    t.records.push_back({PoseSample{ts, p, q}});
    t.records.push_back(
        {FusedPose{ts, p, q, i % 2 ? PoseSource::Measured : PoseSource::ImuEstimated}});
  }
  const Trace back = round_trip(t);
  ASSERT_EQ(back.records.size(), t.records.size());
  for (std::size_t i = 0; i < t.records.size(); ++i) ASSERT_EQ(back.records[i], t.records[i]) << i;
}

TEST(Trace, FormatDoubleRoundTripsAwkwardValues) {
  for (double v : {0.1, 1.0 / 3.0, 5e-324, 1.7976931348623157e308, -0.0, 123456.789e-300}) {
    const auto back = parse_double(format_double(v));
    ASSERT_TRUE(back);
    EXPECT_EQ(std::bit_cast<std::uint64_t>(*back), std::bit_cast<std::uint64_t>(v));
  }
  EXPECT_FALSE(parse_double("1.0x"));
  EXPECT_FALSE(parse_double(""));
  EXPECT_FALSE(parse_double("nan"));
}

TEST(Trace, ConvertersSplitStreams) {
  std::vector<PositionSample> p{{0.0, Vec3(1, 2, 3), true}, {0.01, Vec3::Zero(), false}};
  const Trace t = round_trip(make_trace(std::span<const PositionSample>(p), 1));
  const auto back = positions(t);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_FALSE(back[1].valid);
  EXPECT_TRUE(imu_samples(t).empty());
}

TEST(Trace, WriteRejectsBrokenInvariants) {
  Trace t;
  t.header.streams = {Stream::Imu};
  t.records.push_back({PositionSample{0.0, {}, true}});
  std::ostringstream out;
  EXPECT_THROW(write_trace(out, t), Error);
  t.header.streams = {Stream::Position};
  t.records.push_back({PositionSample{0.0, {}, true}});
  EXPECT_THROW(write_trace(out, t), Error);
}

TEST(Trace, ParseErrorsCarryLineNumbers) {
  std::istringstream in(header("position") + "position,0,1,2,3,1\nposition,0.01,1,2,3\n");
  try {
    read_trace(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 6"), std::string::npos) << e.what();
  }
  EXPECT_EQ(read_error(header("position") + "position,0,1,x,3,1\n"), ErrorCode::ParseError);
  EXPECT_EQ(read_error(header("position") + "position,0,1,2,3,2\n"), ErrorCode::ParseError);
  EXPECT_EQ(read_error(header("position") + "position,0.1,1,2,3,1\nposition,0.1,1,2,3,1\n"),
            ErrorCode::ParseError);
  EXPECT_EQ(read_error(header("position") + "bogus,0,1,2,3,1\n"), ErrorCode::ParseError);
}

TEST(Trace, SchemaErrors) {
  EXPECT_EQ(read_error("#oftrace/2\n#streams=\n"), ErrorCode::SchemaError);
  EXPECT_EQ(read_error("#oftrace/1\n#streams=position\n#schema.position=t,x,y,valid\n"),
            ErrorCode::SchemaError);
  EXPECT_EQ(read_error("#oftrace/1\n#streams=position\nposition,0,1,2,3,1\n"),
            ErrorCode::SchemaError);
  EXPECT_EQ(read_error("#oftrace/1\n#streams=position\n#units=mm,s,rad/s\n"), ErrorCode::SchemaError);
  EXPECT_EQ(read_error(header("position") + "imu,0,1,2,3,4,5,6\n"), ErrorCode::SchemaError);
  EXPECT_EQ(read_error(header("position") + "#colour=blue\n"), ErrorCode::SchemaError);
  EXPECT_EQ(read_error(""), ErrorCode::SchemaError);
}

TEST(Trace, FileRoundTripAndMissingFile) {
  const auto dir = std::filesystem::temp_directory_path() / "oftrack_trace_test";
  std::filesystem::create_directories(dir);
  std::vector<ImuSample> s{{0.0, Vec3(0, 9.81, 0), Vec3::Zero()}, {0.005, Vec3(0.1, 9.8, 0), Vec3(0, 0, 0.2)}};
  const Trace t = make_trace(std::span<const ImuSample>(s), 3);
  write_trace(dir / "imu.csv", t);
  const Trace back = read_trace(dir / "imu.csv");
  ASSERT_EQ(back.records.size(), 2u);
  EXPECT_EQ(back.records[1], t.records[1]);
  try {
    read_trace(dir / "missing.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

}  // namespace
}  // namespace oftrack::trace

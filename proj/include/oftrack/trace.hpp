/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "oftrack/fusion.hpp"

// Line-oriented record/replay format.
//
//   #oftrace/1
//   #seed=42
//   #streams=position,imu
//   #units=m,s,rad/s
//   #schema.position=t,x,y,z,valid
//   #schema.imu=t,ax,ay,az,gx,gy,gz
//   position,0.01,0.1,1.2,0.5,1
//   imu,0.01,...
//
// Numbers are written in shortest round-trip form, so write -> read is
// bit-exact.

namespace oftrack::trace {

inline constexpr std::string_view kFormatVersion = "oftrace/1";

enum class Stream { Position, Imu, Truth, Fused };

std::string_view to_string(Stream s);
std::string_view schema_of(Stream s);

struct TraceRecord {
  std::variant<PositionSample, ImuSample, PoseSample, FusedPose> payload;

  Stream stream() const { return static_cast<Stream>(payload.index()); }
  double t() const;
};

/// Bitwise comparison of every field.
bool operator==(const TraceRecord& a, const TraceRecord& b);

struct TraceHeader {
  std::optional<std::uint64_t> seed;
  std::vector<Stream> streams;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceRecord> records;
};

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Full-string parse of a finite double; nullopt otherwise.
std::optional<double> parse_double(std::string_view s);

/// Throws InvalidArgument for records that break the stream invariants.
void write_trace(std::ostream& out, const Trace& trace);
void write_trace(const std::filesystem::path& path, const Trace& trace);

/// Throws ParseError (with line number) and SchemaError.
Trace read_trace(std::istream& in);
Trace read_trace(const std::filesystem::path& path);

Trace make_trace(std::span<const PositionSample> s, std::optional<std::uint64_t> seed = {});
Trace make_trace(std::span<const ImuSample> s, std::optional<std::uint64_t> seed = {});
Trace make_trace(std::span<const PoseSample> s, std::optional<std::uint64_t> seed = {});
Trace make_trace(std::span<const FusedPose> s, std::optional<std::uint64_t> seed = {});

std::vector<PositionSample> positions(const Trace& trace);
std::vector<ImuSample> imu_samples(const Trace& trace);
std::vector<PoseSample> truth_samples(const Trace& trace);
std::vector<FusedPose> fused_poses(const Trace& trace);

}  // namespace oftrack::trace

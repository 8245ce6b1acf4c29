/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "oftrack/trace.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace oftrack::trace {

namespace {

constexpr std::array<Stream, 4> kAllStreams = {Stream::Position, Stream::Imu, Stream::Truth,
                                               Stream::Fused};

std::optional<Stream> stream_from(std::string_view s) {
  for (Stream k : kAllStreams) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

bool same(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same(const Vec3& a, const Vec3& b) {
  return same(a.x(), b.x()) && same(a.y(), b.y()) && same(a.z(), b.z());
}

bool same(const UnitQuaternion& a, const UnitQuaternion& b) {
  return same(a.w(), b.w()) && same(a.x(), b.x()) && same(a.y(), b.y()) && same(a.z(), b.z());
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    if (p == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void schema_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ": " + what);
}

void put(std::ostream& out, const Vec3& v) {
  out << ',' << format_double(v.x()) << ',' << format_double(v.y()) << ','
      << format_double(v.z());
}

void put(std::ostream& out, const UnitQuaternion& q) {
  out << ',' << format_double(q.w()) << ',' << format_double(q.x()) << ','
      << format_double(q.y()) << ',' << format_double(q.z());
}

void write_row(std::ostream& out, const TraceRecord& r) {
  out << to_string(r.stream()) << ',' << format_double(r.t());
  std::visit(
      [&out](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PositionSample>) {
          put(out, p.pos);
          out << ',' << (p.valid ? '1' : '0');
        } else if constexpr (std::is_same_v<T, ImuSample>) {
          put(out, p.accel);
          put(out, p.gyro);
        } else if constexpr (std::is_same_v<T, PoseSample>) {
          put(out, p.pos);
          put(out, p.orientation);
        } else {
          put(out, p.pos);
          put(out, p.orientation);
          out << ',' << (p.source == PoseSource::Measured ? "measured" : "estimated");
        }
      },
      r.payload);
  out << '\n';
}

struct RowReader {
  std::vector<std::string_view> fields;
  std::size_t line;
  std::size_t next = 1;

  double num() {
    const auto v = parse_double(fields[next]);
    if (!v) parse_fail(line, "bad number '" + std::string(fields[next]) + "'");
    ++next;
    return *v;
  }
  Vec3 vec3() {
    const double x = num();
    const double y = num();
    const double z = num();
    return Vec3(x, y, z);
  }
  UnitQuaternion quat() {
    const double w = num();
    const double x = num();
    const double y = num();
    const double z = num();
    try {
      return UnitQuaternion::admit(w, x, y, z);
    } catch (const Error& e) {
      parse_fail(line, e.what());
    }
  }
  std::string_view word() { return fields[next++]; }
};

std::size_t field_count(Stream s) { return split(schema_of(s), ',').size() + 1; }

TraceRecord parse_row(Stream s, const std::vector<std::string_view>& fields, std::size_t line) {
  if (fields.size() != field_count(s)) {
    parse_fail(line, "expected " + std::to_string(field_count(s)) + " fields, got " +
                         std::to_string(fields.size()));
  }
  RowReader r{fields, line};
  const double t = r.num();
  switch (s) {
    case Stream::Position: {
      const Vec3 p = r.vec3();
      const std::string_view v = r.word();
      if (v != "0" && v != "1") parse_fail(line, "valid must be 0 or 1");
      return TraceRecord{PositionSample{t, p, v == "1"}};
    }
    case Stream::Imu: {
      const Vec3 a = r.vec3();
      const Vec3 g = r.vec3();
      return TraceRecord{ImuSample{t, a, g}};
    }
    case Stream::Truth: {
      const Vec3 p = r.vec3();
      const UnitQuaternion q = r.quat();
      return TraceRecord{PoseSample{t, p, q}};
    }
    case Stream::Fused: {
      const Vec3 p = r.vec3();
      const UnitQuaternion q = r.quat();
      const std::string_view src = r.word();
      if (src != "measured" && src != "estimated") {
        parse_fail(line, "source must be measured or estimated");
      }
      return TraceRecord{
          FusedPose{t, p, q, src == "measured" ? PoseSource::Measured : PoseSource::ImuEstimated}};
    }
  }
  parse_fail(line, "unknown stream");
}

template <typename T>
Trace make_trace_impl(std::span<const T> s, Stream stream, std::optional<std::uint64_t> seed) {
  Trace tr;
  tr.header.seed = seed;
  tr.header.streams = {stream};
  tr.records.reserve(s.size());
  for (const T& x : s) tr.records.push_back(TraceRecord{x});
  return tr;
}

template <typename T>
std::vector<T> extract(const Trace& trace) {
  std::vector<T> out;
  for (const TraceRecord& r : trace.records) {
    if (const T* p = std::get_if<T>(&r.payload)) out.push_back(*p);
  }
  return out;
}

}  // namespace

std::string_view to_string(Stream s) {
  switch (s) {
    case Stream::Position: return "position";
    case Stream::Imu: return "imu";
    case Stream::Truth: return "truth";
    case Stream::Fused: return "fused";
  }
  return "unknown";
}

std::string_view schema_of(Stream s) {
  switch (s) {
    case Stream::Position: return "t,x,y,z,valid";
    case Stream::Imu: return "t,ax,ay,az,gx,gy,gz";
    case Stream::Truth: return "t,x,y,z,qw,qx,qy,qz";
    case Stream::Fused: return "t,x,y,z,qw,qx,qy,qz,source";
  }
  return "";
}

double TraceRecord::t() const {
  return std::visit([](const auto& p) { return p.t; }, payload);
}

bool operator==(const TraceRecord& a, const TraceRecord& b) {
  if (a.payload.index() != b.payload.index()) return false;
  return std::visit(
      [&b](const auto& pa) {
        using T = std::decay_t<decltype(pa)>;
        const T& pb = std::get<T>(b.payload);
        if (!same(pa.t, pb.t)) return false;
        if constexpr (std::is_same_v<T, PositionSample>) {
          return same(pa.pos, pb.pos) && pa.valid == pb.valid;
        } else if constexpr (std::is_same_v<T, ImuSample>) {
          return same(pa.accel, pb.accel) && same(pa.gyro, pb.gyro);
        } else if constexpr (std::is_same_v<T, PoseSample>) {
          return same(pa.pos, pb.pos) && same(pa.orientation, pb.orientation);
        } else {
          return same(pa.pos, pb.pos) && same(pa.orientation, pb.orientation) &&
                 pa.source == pb.source;
        }
      },
      a.payload);
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

void write_trace(std::ostream& out, const Trace& trace) {
  std::map<Stream, double> last_t;
  for (const TraceRecord& r : trace.records) {
    bool declared = false;
    for (Stream s : trace.header.streams) declared = declared || s == r.stream();
    if (!declared) {
      throw Error(ErrorCode::InvalidArgument,
                  "record stream '" + std::string(to_string(r.stream())) + "' not in header");
    }
    const double t = r.t();
    if (!std::isfinite(t)) throw Error(ErrorCode::InvalidArgument, "non-finite record time");
    const auto it = last_t.find(r.stream());
    if (it != last_t.end() && !(t > it->second)) {
      throw Error(ErrorCode::InvalidArgument, "record times must strictly increase per stream");
    }
    last_t[r.stream()] = t;
  }

  out << '#' << kFormatVersion << '\n';
  if (trace.header.seed) out << "#seed=" << *trace.header.seed << '\n';
  out << "#streams=";
  for (std::size_t i = 0; i < trace.header.streams.size(); ++i) {
    out << (i ? "," : "") << to_string(trace.header.streams[i]);
  }
  out << "\n#units=m,s,rad/s\n";
  for (Stream s : trace.header.streams) {
    out << "#schema." << to_string(s) << '=' << schema_of(s) << '\n';
  }
  for (const TraceRecord& r : trace.records) write_row(out, r);
}

void write_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ostringstream buf;
  write_trace(buf, trace);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  f << buf.str();
  if (!f) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

Trace read_trace(std::istream& in) {
  Trace tr;
  std::string raw;
  std::size_t line = 0;
  bool have_version = false;
  bool have_streams = false;
  bool in_header = true;
  std::map<Stream, bool> schema_seen;
  std::map<Stream, double> last_t;

  while (std::getline(in, raw)) {
    ++line;
    std::string_view l(raw);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    if (l.empty()) continue;

    if (l.front() == '#') {
      if (!in_header) schema_fail(line, "header line after data rows");
      l.remove_prefix(1);
      if (!have_version) {
        if (l != kFormatVersion) {
          schema_fail(line, "expected '#" + std::string(kFormatVersion) + "', got '#" +
                                std::string(l) + "'");
        }
        have_version = true;
        continue;
      }
      const std::size_t eq = l.find('=');
      if (eq == std::string_view::npos) schema_fail(line, "header line without '='");
      const std::string_view key = l.substr(0, eq);
      const std::string_view value = l.substr(eq + 1);
      if (key == "seed") {
        std::uint64_t seed = 0;
        const auto res = std::from_chars(value.data(), value.data() + value.size(), seed);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
          schema_fail(line, "bad seed");
        }
        tr.header.seed = seed;
      } else if (key == "streams") {
        if (!value.empty()) {
          for (std::string_view name : split(value, ',')) {
            const auto s = stream_from(name);
            if (!s) schema_fail(line, "unknown stream '" + std::string(name) + "'");
            tr.header.streams.push_back(*s);
          }
        }
        have_streams = true;
      } else if (key == "units") {
        if (value != "m,s,rad/s") schema_fail(line, "unsupported units '" + std::string(value) + "'");
      } else if (key.starts_with("schema.")) {
        const auto s = stream_from(key.substr(7));
        if (!s) schema_fail(line, "schema for unknown stream");
        if (value != schema_of(*s)) {
          schema_fail(line, "schema mismatch for " + std::string(to_string(*s)) + ": expected '" +
                                std::string(schema_of(*s)) + "'");
        }
        schema_seen[*s] = true;
      } else {
        schema_fail(line, "unknown header key '" + std::string(key) + "'");
      }
      continue;
    }

    if (in_header) {
      if (!have_version) schema_fail(line, "missing '#" + std::string(kFormatVersion) + "' header");
      if (!have_streams) schema_fail(line, "missing '#streams=' header");
      for (Stream s : tr.header.streams) {
        if (!schema_seen[s]) schema_fail(line, "missing schema for " + std::string(to_string(s)));
      }
      in_header = false;
    }
    const auto fields = split(l, ',');
    const auto s = stream_from(fields.front());
    if (!s) parse_fail(line, "unknown stream '" + std::string(fields.front()) + "'");
    bool declared = false;
    for (Stream d : tr.header.streams) declared = declared || d == *s;
    if (!declared) schema_fail(line, "stream '" + std::string(fields.front()) + "' not declared");
    TraceRecord rec = parse_row(*s, fields, line);
    const auto it = last_t.find(*s);
    if (it != last_t.end() && !(rec.t() > it->second)) {
      parse_fail(line, "time does not increase within stream");
    }
    last_t[*s] = rec.t();
    tr.records.push_back(std::move(rec));
  }
  if (!have_version) schema_fail(line, "missing '#" + std::string(kFormatVersion) + "' header");
  if (!have_streams) schema_fail(line, "missing '#streams=' header");
  return tr;
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  try {
    return read_trace(f);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

Trace make_trace(std::span<const PositionSample> s, std::optional<std::uint64_t> seed) {
  return make_trace_impl(s, Stream::Position, seed);
}
Trace make_trace(std::span<const ImuSample> s, std::optional<std::uint64_t> seed) {
  return make_trace_impl(s, Stream::Imu, seed);
}
Trace make_trace(std::span<const PoseSample> s, std::optional<std::uint64_t> seed) {
  return make_trace_impl(s, Stream::Truth, seed);
}
Trace make_trace(std::span<const FusedPose> s, std::optional<std::uint64_t> seed) {
  return make_trace_impl(s, Stream::Fused, seed);
}

std::vector<PositionSample> positions(const Trace& trace) { return extract<PositionSample>(trace); }
std::vector<ImuSample> imu_samples(const Trace& trace) { return extract<ImuSample>(trace); }
std::vector<PoseSample> truth_samples(const Trace& trace) { return extract<PoseSample>(trace); }
std::vector<FusedPose> fused_poses(const Trace& trace) { return extract<FusedPose>(trace); }

}  // namespace oftrack::trace

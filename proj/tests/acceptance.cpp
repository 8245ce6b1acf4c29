/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

// Acceptance suite. One PASS/FAIL line per criterion; exits nonzero when any
// criterion fails. Tolerances are fixed here.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oftrack/calibration.hpp"
#include "oftrack/config.hpp"
#include "oftrack/fusion.hpp"
#include "oftrack/metrics.hpp"
#include "oftrack/sim.hpp"
#include "oftrack/trace.hpp"

namespace {

using namespace oftrack;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Run {
  sim::SimStreams streams;
  std::vector<FusedPose> fused;
  std::vector<GapMetrics> gaps;
};

Run run_preset(const std::string& preset, const std::vector<std::pair<std::string, std::string>>& keys) {
  config::KeyValueDoc doc;
  for (const auto& [k, v] : keys) doc.set(k, v);
  const config::KeyValueDoc resolved = config::resolve(doc, preset);
  const sim::Scenario sc = config::scenario_from(resolved);
  const FusionConfig cfg = config::fusion_from(resolved, sc);
  Run r;
  r.streams = sim::generate(sc);
  r.fused = run_tracker(r.streams.position, r.streams.imu, cfg);
  r.gaps = compute_gap_metrics(r.fused, r.streams.truth, r.streams.occlusions);
  return r;
}

Verdict cubic_fit_exactness() {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FusionConfig cfg;
  cfg.window = 40;
  cfg.sample_period = 0.01;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const Vec3 y0(u(rng), u(rng), u(rng));
    const Vec3 v0 = 2.0 * Vec3(u(rng), u(rng), u(rng));
    const Vec3 a0 = 10.0 * Vec3(u(rng), u(rng), u(rng));
    const Vec3 jerk = 50.0 * Vec3(u(rng), u(rng), u(rng));
    const double start = 5.0 * (u(rng) + 1.0);
    std::vector<PositionSample> buf(cfg.window);
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const double s = i * cfg.sample_period;
      buf[i].t = start + s;
      buf[i].pos = y0 + v0 * s + a0 * s * s / 2 + jerk * s * s * s / 6;
    }
    const MotionCoefficients m = fit_motion_polynomial(buf, cfg);
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const double s = i * cfg.sample_period;
      const Vec3 model = buf[0].pos + m.v0 * s + m.a0 * s * s / 2 + m.jerk * s * s * s / 6;
      worst = std::max(worst, (model - buf[i].pos).cwiseAbs().maxCoeff());
    }
    worst = std::max(worst, (m.v0 - v0).cwiseAbs().maxCoeff());
    worst = std::max(worst, (m.a0 - a0).cwiseAbs().maxCoeff() * cfg.sample_period);
    worst = std::max(worst, (m.jerk - jerk).cwiseAbs().maxCoeff() * cfg.sample_period *
                                cfg.sample_period);
  }
  const double elapsed = seconds_since(t0);
  return {worst < 1e-8 && elapsed < 5.0,
          fmt("1000 cases, worst residual %.2e (< 1e-8), %.3f s (< 5 s)", worst, elapsed)};
}

Vec3 mean_offset_error(std::uint64_t seed) {
  sim::Scenario sc;
  sc.trajectory.kind = sim::TrajectoryKind::ArmLift;
  sc.trajectory.duration = 5.0;
  sc.imu = sim::ImuModel::low_cost();
  sc.seed = seed;
  const sim::SimStreams st = sim::generate(sc);
  FusionConfig cfg;
  cfg.orientation_mode = OrientationMode::HoldWhileTracking;
  const std::vector<std::size_t> pair = pair_nearest(st.position, st.imu, cfg.sample_period / 2);
  Tracker tracker(cfg);
  Vec3 sum = Vec3::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < st.position.size(); ++i) {
    tracker.step(st.position[i], st.imu[pair[i]]);
    if (tracker.state().offset.initialized) {
      sum += tracker.state().offset.value;
      ++n;
    }
  }
  return n ? Vec3((sum / double(n) - sc.imu.bias).cwiseAbs()) : Vec3::Constant(1.0);
}

// Gated on one fixed seed; the sweep over seeds 1..20 is reported alongside.
Verdict offset_recovery() {
  const Vec3 err = mean_offset_error(7);
  int within = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double e = mean_offset_error(seed).maxCoeff();
    within += e < 0.01 ? 1 : 0;
    worst = std::max(worst, e);
  }
  return {err.maxCoeff() < 0.01,
          fmt("seed 7 mean offset error (%.4f, %.4f, %.4f) m/s^2 (< 0.01); seeds 1-20: %d/20 "
              "within, worst axis %.4f",
              err.x(), err.y(), err.z(), within, worst)};
}

Verdict gap_band(const std::string& generator, double bound_mm, double time_limit) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t gaps = 0;
  for (int seed = 1; seed <= 5; ++seed) {
    const Run r = run_preset("arm_lift", {{"seed", std::to_string(seed)},
                                          {"imu.profile", "low_cost"},
                                          {"occlusion.generator", generator},
                                          {"occlusion.gap_duration", "0.3"}});
    for (const GapMetrics& g : r.gaps) worst = std::max(worst, g.max_error);
    gaps += r.gaps.size();
  }
  const double elapsed = seconds_since(t0);
  const bool timed = time_limit > 0.0;
  return {gaps > 0 && worst <= bound_mm && (!timed || elapsed < time_limit),
          fmt("%zu gaps over 5 seeds, worst max error %.2f mm (<= %.0f mm)%s", gaps, worst, bound_mm,
              timed ? fmt(", %.2f s (< %.0f s)", elapsed, time_limit).c_str() : "")};
}

Verdict circular() {
  const Run r = run_preset("circular", {});
  const GapSummary s = summarize(r.gaps);
  return {s.gaps > 0 && s.max_error <= 25.0 && s.max_orientation_error <= 3.0,
          fmt("%zu gaps, max error %.2f mm (<= 25 mm), orientation %.3f deg (<= 3 deg)", s.gaps,
              s.max_error, s.max_orientation_error)};
}

Verdict imu_quality() {
  double total[2] = {0.0, 0.0};
  double worst[2] = {0.0, 0.0};
  const char* profiles[2] = {"high_cost", "low_cost"};
  for (int p = 0; p < 2; ++p) {
    for (int seed = 1; seed <= 5; ++seed) {
      const Run r = run_preset("use_case_yz", {{"seed", std::to_string(seed)},
                                               {"imu.profile", profiles[p]}});
      for (const GapMetrics& g : r.gaps) {
        total[p] += g.max_error;
        worst[p] = std::max(worst[p], g.max_error);
      }
    }
  }
  return {total[0] < total[1] && worst[0] <= 25.0 && worst[1] <= 25.0,
          fmt("summed per-gap max error: high_cost %.2f mm < low_cost %.2f mm; worst gap %.2f / "
              "%.2f mm (<= 25 mm)",
              total[0], total[1], worst[0], worst[1])};
}

Verdict constant_accel_exact() {
  double worst = 0.0;
  const double lengths[] = {0.1, 0.3, 0.6, 1.0, 1.5, 2.0};
  for (double d : lengths) {
    const Run r = run_preset("constant_accel", {{"occlusion.windows", fmt("2.5:%g", d)}});
    if (r.gaps.empty()) return {false, "no gap evaluated"};
    worst = std::max(worst, summarize(r.gaps).max_error * 1e-3);
  }
  return {worst < 1e-6, fmt("gaps 0.1 to 2.0 s, worst error %.2e m (< 1e-6 m)", worst)};
}

Verdict monotonicity() {
  const double durations[] = {0.1, 0.3, 0.6, 1.0};
  std::vector<double> medians;
  for (double d : durations) {
    std::vector<double> per_seed;
    for (int seed = 1; seed <= 9; ++seed) {
      const Run r = run_preset("arm_lift", {{"seed", std::to_string(seed)},
                                            {"occlusion.gap_duration", fmt("%g", d)}});
      per_seed.push_back(summarize(r.gaps).max_error);
    }
    medians.push_back(median(per_seed));
  }
  const bool ok = std::is_sorted(medians.begin(), medians.end());
  return {ok, fmt("median max error %.2f, %.2f, %.2f, %.2f mm for 0.1/0.3/0.6/1.0 s", medians[0],
                  medians[1], medians[2], medians[3])};
}

RotationMatrix random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  const UnitQuaternion q = UnitQuaternion::normalized(n(rng), n(rng), n(rng), n(rng));
  return quat_to_matrix(q);
}

Verdict kabsch_recovery() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  double exact = 0.0;
  double noisy = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const RotationMatrix r = random_rotation(rng);
    std::vector<calib::PointPair> clean(100);
    std::vector<calib::PointPair> dirty(100);
    for (std::size_t i = 0; i < clean.size(); ++i) {
      clean[i].source = Vec3(n(rng), n(rng), n(rng));
      clean[i].target = r * clean[i].source;
      dirty[i] = clean[i];
      dirty[i].target += 1e-3 * Vec3(n(rng), n(rng), n(rng));
    }
    exact = std::max(exact, (calib::kabsch(clean).matrix() - r.matrix()).cwiseAbs().maxCoeff());
    noisy = std::max(noisy, geodesic_angle(calib::kabsch(dirty), r) * 180.0 / std::numbers::pi);
  }
  // Targets are the sources mirrored through a plane: the unconstrained
  // orthogonal optimum is a reflection.
  double det_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<calib::PointPair> trap(30);
    for (calib::PointPair& p : trap) {
      p.source = Vec3(n(rng), n(rng), n(rng));
      p.target = Vec3(-p.source.x(), p.source.y(), p.source.z());
    }
    const RotationMatrix est = calib::kabsch(trap);
    det_err = std::max(det_err, std::abs(est.matrix().determinant() - 1.0));
  }
  return {exact < 1e-10 && noisy < 0.5 && det_err < 1e-12,
          fmt("noiseless %.1e (< 1e-10), sigma 1e-3 %.4f deg (< 0.5 deg), trap |det-1| %.1e",
              exact, noisy, det_err)};
}

Verdict gain_sweep() {
  const double scales[] = {0.8, 1.0, 1.25};
  double worst = 0.0;
  std::string values;
  for (double s : scales) {
    config::KeyValueDoc doc;
    doc.set("imu.gain", fmt("%g,%g,%g", s, s, s));
    const config::KeyValueDoc resolved = config::resolve(doc, std::string("calib_motion"));
    const sim::Scenario sc = config::scenario_from(resolved);
    const sim::SimStreams st = sim::generate(sc);
    const RotationMatrix imu_to_global = quat_to_matrix(st.truth.front().orientation) * sc.imu.imu_to_body;
    const calib::GainCalibration g = calib::calibrate_gain(st.position, st.imu, imu_to_global);
    const double rel = (g.gain * s - Vec3::Ones()).cwiseAbs().maxCoeff();
    worst = std::max(worst, rel);
    values += fmt(" %g->(%.4f,%.4f,%.4f)", s, g.gain.x(), g.gain.y(), g.gain.z());
  }
  return {worst < 0.03, fmt("worst deviation from 1/scale %.2f%% (< 3%%);%s", worst * 100.0,
                            values.c_str())};
}

Verdict trace_round_trip() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n;
  trace::Trace tr;
  tr.header.seed = 123456789012345ull;
  tr.header.streams = {trace::Stream::Position, trace::Stream::Imu, trace::Stream::Truth,
                       trace::Stream::Fused};
  double t[4] = {0.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < 10000; ++i) {
    const int k = i % 4;
    t[k] += 0.01 * (1.0 + 0.1 * std::abs(n(rng))) + 1e-13 * i;
    const Vec3 p(n(rng), n(rng) * 1e-7, n(rng) * 1e5);
    const UnitQuaternion q = UnitQuaternion::normalized(n(rng), n(rng), n(rng), n(rng));
    switch (k) {
      case 0: tr.records.push_back({PositionSample{t[k], p, i % 7 != 0}}); break;
      case 1: tr.records.push_back({ImuSample{t[k], p, Vec3(n(rng), n(rng), n(rng))}}); break;
      case 2: tr.records.push_back({PoseSample{t[k], p, q}}); break;
      default:
        tr.records.push_back(
            {FusedPose{t[k], p, q, i % 3 ? PoseSource::Measured : PoseSource::ImuEstimated}});
    }
  }
  std::stringstream buf;
  trace::write_trace(buf, tr);
  const std::string first = buf.str();
  const trace::Trace back = trace::read_trace(buf);
  std::stringstream again;
  trace::write_trace(again, back);
  const bool same = back.records == tr.records && back.header.seed == tr.header.seed &&
                    back.header.streams == tr.header.streams && again.str() == first;
  return {same, fmt("%zu records, bitwise equal after write/read: %s", back.records.size(),
                    same ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"cubic_fit_exactness", cubic_fit_exactness},
      {"offset_recovery", offset_recovery},
      {"type1_gap_error", [] { return gap_band("mid_stroke", 30.0, 10.0); }},
      {"type2_gap_error", [] { return gap_band("direction_change", 45.0, 0.0); }},
      {"circular_trajectory", circular},
      {"imu_quality_comparison", imu_quality},
      {"constant_accel_exactness", constant_accel_exact},
      {"error_monotonicity", monotonicity},
      {"kabsch_recovery", kabsch_recovery},
      {"gain_calibration", gain_sweep},
      {"trace_round_trip", trace_round_trip},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    failures += v.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "oftrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>

#include "oftrack/trace.hpp"

namespace oftrack {

namespace {

constexpr double kTimeMatch = 1e-6;  // s
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

const PoseSample& truth_at(std::span<const PoseSample> truth, double t) {
  const auto it = std::lower_bound(truth.begin(), truth.end(), t - kTimeMatch,
                                   [](const PoseSample& p, double x) { return p.t < x; });
  if (it == truth.end() || std::abs(it->t - t) > kTimeMatch) {
    throw Error(ErrorCode::MissingTruth, "no truth sample at t=" + trace::format_double(t));
  }
  return *it;
}

int gap_of(std::span<const sim::OcclusionWindow> windows, double t) {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].contains(t)) return static_cast<int>(i);
  }
  return -1;
}

std::string num(double v) { return trace::format_double(v); }

}  // namespace

std::vector<GapMetrics> compute_gap_metrics(std::span<const FusedPose> fused,
                                            std::span<const PoseSample> truth,
                                            std::span<const sim::OcclusionWindow> windows) {
  std::vector<GapMetrics> out;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const sim::OcclusionWindow& win = windows[w];
    if (truth.empty() || truth.front().t > win.start + kTimeMatch ||
        truth.back().t < win.end() - kTimeMatch) {
      throw Error(ErrorCode::MissingTruth, "truth does not cover gap " + std::to_string(w) +
                                               " [" + num(win.start) + ", " + num(win.end()) + ")");
    }
    GapMetrics m;
    m.gap_id = w;
    m.start = win.start;
    m.duration = win.duration;
    double sum_sq = 0.0;
    const FusedPose* last_estimate = nullptr;
    for (std::size_t i = 0; i < fused.size(); ++i) {
      const FusedPose& f = fused[i];
      if (f.t < win.start) continue;
      if (!win.contains(f.t)) {
        if (last_estimate && f.source == PoseSource::Measured) {
          const Vec3 true_step = truth_at(truth, f.t).pos - truth_at(truth, last_estimate->t).pos;
          m.seam_jump = 1e3 * (f.pos - last_estimate->pos - true_step).norm();
          m.reacquired = true;
        }
        break;
      }
      if (f.source != PoseSource::ImuEstimated) continue;
      const PoseSample& tr = truth_at(truth, f.t);
      const Vec3 e = 1e3 * (f.pos - tr.pos);
      m.max_error = std::max(m.max_error, e.norm());
      m.per_axis_max = m.per_axis_max.cwiseMax(e.cwiseAbs());
      m.max_orientation_error =
          std::max(m.max_orientation_error, kRadToDeg * geodesic_angle(f.orientation, tr.orientation));
      sum_sq += e.squaredNorm();
      ++m.samples;
      last_estimate = &f;
    }
    if (m.samples > 0) m.rms_error = std::sqrt(sum_sq / static_cast<double>(m.samples));
    out.push_back(m);
  }
  return out;
}

GapSummary summarize(std::span<const GapMetrics> gaps) {
  GapSummary s;
  s.gaps = gaps.size();
  for (const GapMetrics& g : gaps) {
    s.samples += g.samples;
    s.max_error = std::max(s.max_error, g.max_error);
    s.rms_error = std::max(s.rms_error, g.rms_error);
    s.per_axis_max = s.per_axis_max.cwiseMax(g.per_axis_max);
    s.seam_jump = std::max(s.seam_jump, g.seam_jump);
    s.max_orientation_error = std::max(s.max_orientation_error, g.max_orientation_error);
  }
  return s;
}

void write_gap_csv(std::ostream& out, std::span<const GapMetrics> gaps) {
  out << "gap_id,start_s,duration_s,samples,max_error_mm,rms_error_mm,max_x_mm,max_y_mm,"
         "max_z_mm,seam_jump_mm,reacquired,max_orientation_error_deg\n";
  for (const GapMetrics& g : gaps) {
    out << g.gap_id << ',' << num(g.start) << ',' << num(g.duration) << ',' << g.samples << ','
        << num(g.max_error) << ',' << num(g.rms_error) << ',' << num(g.per_axis_max.x()) << ','
        << num(g.per_axis_max.y()) << ',' << num(g.per_axis_max.z()) << ',' << num(g.seam_jump)
        << ',' << (g.reacquired ? 1 : 0) << ',' << num(g.max_orientation_error) << '\n';
  }
  const GapSummary s = summarize(gaps);
  out << "max,,," << s.samples << ',' << num(s.max_error) << ',' << num(s.rms_error) << ','
      << num(s.per_axis_max.x()) << ',' << num(s.per_axis_max.y()) << ','
      << num(s.per_axis_max.z()) << ',' << num(s.seam_jump) << ",," << num(s.max_orientation_error)
      << '\n';
}

void write_gap_table(std::ostream& out, std::span<const GapMetrics> gaps) {
  char line[160];
  std::snprintf(line, sizeof line, "%4s %9s %8s %5s %9s %9s %8s %8s %8s %9s %8s\n", "gap",
                "start[s]", "dur[s]", "n", "max[mm]", "rms[mm]", "x[mm]", "y[mm]", "z[mm]",
                "seam[mm]", "rot[deg]");
  out << line;
  auto row = [&](const char* id, const GapMetrics& g) {
    std::snprintf(line, sizeof line,
                  "%4s %9.3f %8.3f %5zu %9.2f %9.2f %8.2f %8.2f %8.2f %9.2f %8.3f\n", id, g.start,
                  g.duration, g.samples, g.max_error, g.rms_error, g.per_axis_max.x(),
                  g.per_axis_max.y(), g.per_axis_max.z(), g.seam_jump, g.max_orientation_error);
    out << line;
  };
  for (const GapMetrics& g : gaps) row(std::to_string(g.gap_id).c_str(), g);
  const GapSummary s = summarize(gaps);
  GapMetrics m;
  m.samples = s.samples;
  m.max_error = s.max_error;
  m.rms_error = s.rms_error;
  m.per_axis_max = s.per_axis_max;
  m.seam_jump = s.seam_jump;
  m.max_orientation_error = s.max_orientation_error;
  std::snprintf(line, sizeof line,
                "%4s %9s %8s %5zu %9.2f %9.2f %8.2f %8.2f %8.2f %9.2f %8.3f\n", "max", "", "",
                m.samples, m.max_error, m.rms_error, m.per_axis_max.x(), m.per_axis_max.y(),
                m.per_axis_max.z(), m.seam_jump, m.max_orientation_error);
  out << line;
}

void write_error_csv(std::ostream& out, std::span<const FusedPose> fused,
                     std::span<const PoseSample> truth,
                     std::span<const sim::OcclusionWindow> windows) {
  out << "t,source,gap_id,x,y,z,truth_x,truth_y,truth_z,err_x_mm,err_y_mm,err_z_mm,err_mm,"
         "orientation_err_deg\n";
  for (const FusedPose& f : fused) {
    const PoseSample& tr = truth_at(truth, f.t);
    const Vec3 e = 1e3 * (f.pos - tr.pos);
    const int gap = f.source == PoseSource::ImuEstimated ? gap_of(windows, f.t) : -1;
    out << num(f.t) << ',' << (f.source == PoseSource::Measured ? "measured" : "estimated") << ','
        << gap << ',' << num(f.pos.x()) << ',' << num(f.pos.y()) << ',' << num(f.pos.z()) << ','
        << num(tr.pos.x()) << ',' << num(tr.pos.y()) << ',' << num(tr.pos.z()) << ','
        << num(e.x()) << ',' << num(e.y()) << ',' << num(e.z()) << ',' << num(e.norm()) << ','
        << num(kRadToDeg * geodesic_angle(f.orientation, tr.orientation)) << '\n';
  }
}

}  // namespace oftrack

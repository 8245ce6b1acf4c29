/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "oftrack/fusion.hpp"
#include "oftrack/sim.hpp"

// Per-gap error statistics of a fused stream against ground truth. Lengths in
// reports are millimetres, angles degrees.

namespace oftrack {

struct GapMetrics {
  std::size_t gap_id = 0;
  double start = 0.0;     // s
  double duration = 0.0;  // s
  std::size_t samples = 0;  // estimated samples inside the window
  double max_error = 0.0;   // mm
  double rms_error = 0.0;   // mm
  Vec3 per_axis_max = Vec3::Zero();  // mm
  // mm, step from the last estimate to the first reacquired measurement, less
  // the true motion over that step
  double seam_jump = 0.0;
  bool reacquired = false;
  double max_orientation_error = 0.0;  // deg
};

/// Maximum of each field over the gaps.
struct GapSummary {
  std::size_t gaps = 0;
  std::size_t samples = 0;
  double max_error = 0.0;
  double rms_error = 0.0;
  Vec3 per_axis_max = Vec3::Zero();
  double seam_jump = 0.0;
  double max_orientation_error = 0.0;
};

/// Truth is matched to fused samples by time (same clock). Throws MissingTruth
/// when the truth stream does not cover a window or lacks a fused instant.
std::vector<GapMetrics> compute_gap_metrics(std::span<const FusedPose> fused,
                                            std::span<const PoseSample> truth,
                                            std::span<const sim::OcclusionWindow> windows);

GapSummary summarize(std::span<const GapMetrics> gaps);

/// Machine-readable rows, one per gap plus a trailing "max" row.
void write_gap_csv(std::ostream& out, std::span<const GapMetrics> gaps);

/// Fixed-width table for terminals.
void write_gap_table(std::ostream& out, std::span<const GapMetrics> gaps);

/// Plot-ready per-sample rows: fused and truth positions, error components
/// (mm) and the gap each estimated sample belongs to (-1 outside gaps).
void write_error_csv(std::ostream& out, std::span<const FusedPose> fused,
                     std::span<const PoseSample> truth,
                     std::span<const sim::OcclusionWindow> windows);

}  // namespace oftrack

/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "oftrack/calibration.hpp"
#include "oftrack/config.hpp"
#include "oftrack/metrics.hpp"
#include "oftrack/trace.hpp"

namespace oftrack::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config;
  std::string preset;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  std::optional<std::size_t> nv;
  std::optional<double> alpha;
  std::optional<double> a_max;
  std::string gain;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Key-value configuration file");
  cmd->add_option("--preset", o.preset, "Built-in scenario preset");
  cmd->add_option("--out-dir", o.out_dir, "Output directory (default: $OFTRACK_OUT_DIR or .)");
  cmd->add_option("--seed", o.seed, "Scenario seed");
  cmd->add_option("--n", o.n, "Cubic fit window length");
  cmd->add_option("--nv", o.nv, "Velocity fit window length");
  cmd->add_option("--alpha", o.alpha, "Offset adjustment factor");
  cmd->add_option("--a-max", o.a_max, "Skip offset adjustment above this |a| (m/s^2)");
  cmd->add_option("--gain", o.gain, "Accelerometer gain K: one value or kx,ky,kz");
}

std::string num(double v) { return trace::format_double(v); }

config::KeyValueDoc build_doc(const CommonOptions& o) {
  config::KeyValueDoc file;
  if (!o.config.empty()) file = config::KeyValueDoc::load(o.config);
  config::KeyValueDoc doc =
      config::resolve(file, o.preset.empty() ? std::nullopt : std::optional<std::string>(o.preset));
  if (o.seed) doc.set("seed", std::to_string(*o.seed), "--seed");
  if (o.n) doc.set("fusion.n", std::to_string(*o.n), "--n");
  if (o.nv) doc.set("fusion.nv", std::to_string(*o.nv), "--nv");
  if (o.alpha) doc.set("fusion.alpha", num(*o.alpha), "--alpha");
  if (o.a_max) doc.set("fusion.a_max", num(*o.a_max), "--a-max");
  if (!o.gain.empty()) {
    const bool single = o.gain.find(',') == std::string::npos;
    doc.set("fusion.gain", single ? o.gain + "," + o.gain + "," + o.gain : o.gain, "--gain");
  }
  config::check_keys(doc);
  return doc;
}

fs::path out_dir(const CommonOptions& o) {
  fs::path dir = ".";
  if (!o.out_dir.empty()) {
    dir = o.out_dir;
  } else if (const char* env = std::getenv(kOutDirEnv); env && *env) {
    dir = env;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory '" + dir.string() + "'");
  return dir;
}

fs::path input_or(const std::string& given, const fs::path& dir, const char* name) {
  return given.empty() ? dir / name : fs::path(given);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config:
    case ErrorCode::InvalidArgument:
      return kConfigError;
    case ErrorCode::Io:
    case ErrorCode::ParseError:
    case ErrorCode::SchemaError:
    case ErrorCode::MissingTruth:
    case ErrorCode::Misaligned:
    case ErrorCode::NonMonotonicTime:
      return kIoError;
    case ErrorCode::OcclusionInWindow:
    case ErrorCode::SingularSystem:
    case ErrorCode::NotInitialized:
    case ErrorCode::DegenerateGeometry:
    case ErrorCode::InsufficientExcitation:
      return kNumericalError;
  }
  return kFailure;
}

void cmd_simulate(const CommonOptions& o, std::ostream& out) {
  const config::KeyValueDoc doc = build_doc(o);
  const sim::Scenario sc = config::scenario_from(doc);
  config::fusion_from(doc, sc);
  const sim::SimStreams st = sim::generate(sc);
  const fs::path dir = out_dir(o);

  const fs::path pos = dir / "position.csv";
  const fs::path imu = dir / "imu.csv";
  const fs::path truth = dir / "truth.csv";
  const fs::path cfg = dir / "scenario.cfg";
  trace::write_trace(pos, trace::make_trace(std::span<const PositionSample>(st.position), sc.seed));
  trace::write_trace(imu, trace::make_trace(std::span<const ImuSample>(st.imu), sc.seed));
  trace::write_trace(truth, trace::make_trace(std::span<const PoseSample>(st.truth), sc.seed));
  config::KeyValueDoc saved = doc;
  saved.set("seed", std::to_string(sc.seed));
  write_text(cfg, saved.to_string());

  out << "seed=" << sc.seed << '\n';
  out << "occlusions=" << st.occlusions.size() << '\n';
  for (const sim::OcclusionWindow& w : st.occlusions) {
    out << "  gap start=" << num(w.start) << " duration=" << num(w.duration) << '\n';
  }
  out << "position " << pos.string() << " (" << st.position.size() << " records)\n";
  out << "imu " << imu.string() << " (" << st.imu.size() << " records)\n";
  out << "truth " << truth.string() << " (" << st.truth.size() << " records)\n";
  out << "scenario " << cfg.string() << '\n';
}

void cmd_track(const CommonOptions& o, const std::string& pos_path, const std::string& imu_path,
               std::ostream& out) {
  const config::KeyValueDoc doc = build_doc(o);
  const sim::Scenario sc = config::scenario_from(doc);
  const FusionConfig cfg = config::fusion_from(doc, sc);
  const fs::path dir = out_dir(o);

  const trace::Trace pt = trace::read_trace(input_or(pos_path, dir, "position.csv"));
  const trace::Trace it = trace::read_trace(input_or(imu_path, dir, "imu.csv"));
  const auto positions = trace::positions(pt);
  const auto imu = trace::imu_samples(it);
  if (positions.empty()) throw Error(ErrorCode::Io, "position trace has no position records");
  if (imu.empty()) throw Error(ErrorCode::Io, "imu trace has no imu records");

  const std::vector<FusedPose> fused = run_tracker(positions, imu, cfg);
  const fs::path fused_path = dir / "fused.csv";
  trace::write_trace(fused_path,
                     trace::make_trace(std::span<const FusedPose>(fused), pt.header.seed));

  std::size_t estimated = 0;
  for (const FusedPose& f : fused) estimated += f.source == PoseSource::ImuEstimated ? 1 : 0;
  out << "fused " << fused_path.string() << " (" << fused.size() << " records, " << estimated
      << " estimated)\n";
}

void cmd_metrics(const CommonOptions& o, const std::string& fused_path,
                 const std::string& truth_path, std::ostream& out) {
  const fs::path dir = out_dir(o);
  CommonOptions with_cfg = o;
  if (with_cfg.config.empty() && with_cfg.preset.empty()) {
    with_cfg.config = (dir / "scenario.cfg").string();
  }
  const config::KeyValueDoc doc = build_doc(with_cfg);
  const sim::Scenario sc = config::scenario_from(doc);
  const auto windows = sim::resolve_occlusions(sc.occlusions, sc.trajectory, sc.position_rate);

  const auto fused = trace::fused_poses(trace::read_trace(input_or(fused_path, dir, "fused.csv")));
  const auto truth = trace::truth_samples(trace::read_trace(input_or(truth_path, dir, "truth.csv")));
  const std::vector<GapMetrics> gaps = compute_gap_metrics(fused, truth, windows);

  std::ostringstream gap_csv;
  write_gap_csv(gap_csv, gaps);
  std::ostringstream err_csv;
  write_error_csv(err_csv, fused, truth, windows);
  const fs::path gap_path = dir / "gaps.csv";
  const fs::path err_path = dir / "errors.csv";
  write_text(gap_path, gap_csv.str());
  write_text(err_path, err_csv.str());

  write_gap_table(out, gaps);
  out << "gaps " << gap_path.string() << '\n';
  out << "errors " << err_path.string() << '\n';
}

struct CalibrateInputs {
  std::string mount_imu;
  std::string mount_truth;
  std::string gain_position;
  std::string gain_imu;
};

void cmd_calibrate(const CommonOptions& o, const CalibrateInputs& in, std::ostream& out) {
  const bool mount = !in.mount_imu.empty() || !in.mount_truth.empty();
  const bool gain = !in.gain_position.empty() || !in.gain_imu.empty();
  if (!mount && !gain) {
    throw Error(ErrorCode::Config,
                "calibrate needs --mount-imu/--mount-truth and/or --gain-position/--gain-imu");
  }
  if (mount && (in.mount_imu.empty() || in.mount_truth.empty())) {
    throw Error(ErrorCode::Config, "mount calibration needs both --mount-imu and --mount-truth");
  }
  if (gain && (in.gain_position.empty() || in.gain_imu.empty())) {
    throw Error(ErrorCode::Config, "gain calibration needs both --gain-position and --gain-imu");
  }
  const config::KeyValueDoc doc = build_doc(o);
  const sim::Scenario sc = config::scenario_from(doc);
  FusionConfig cfg = config::fusion_from(doc, sc);
  const fs::path dir = out_dir(o);

  std::string text = "# calibration\n";
  if (mount) {
    const auto imu = trace::imu_samples(trace::read_trace(fs::path(in.mount_imu)));
    const auto poses = trace::truth_samples(trace::read_trace(fs::path(in.mount_truth)));
    const auto segments = calib::find_static_segments(imu, poses);
    const auto pairs = calib::gravity_pairs(segments, cfg.gravity);
    const RotationMatrix r = calib::kabsch(pairs);
    cfg.imu_to_body = r;
    std::string m;
    for (int i = 0; i < 9; ++i) m += (i ? "," : "") + num(r(i / 3, i % 3));
    text += "# static segments: " + std::to_string(segments.size()) + "\n";
    text += "# mount registration rms (m/s^2): " + num(calib::registration_rms(pairs, r)) + "\n";
    text += "fusion.r_imu_body=" + m + "\n";
    out << "mount from " << segments.size() << " static segments\n";
  }
  if (gain) {
    const auto positions = trace::positions(trace::read_trace(fs::path(in.gain_position)));
    const auto imu = trace::imu_samples(trace::read_trace(fs::path(in.gain_imu)));
    const RotationMatrix imu_to_global = quat_to_matrix(cfg.initial_orientation) * cfg.imu_to_body;
    const calib::GainCalibration g = calib::calibrate_gain(positions, imu, imu_to_global);
    text += "# gain residual rms (m/s): " + num(g.residual_rms.x()) + "," +
            num(g.residual_rms.y()) + "," + num(g.residual_rms.z()) + "\n";
    text += "fusion.gain=" + num(g.gain.x()) + "," + num(g.gain.y()) + "," + num(g.gain.z()) + "\n";
    out << "gain " << num(g.gain.x()) << ',' << num(g.gain.y()) << ',' << num(g.gain.z()) << '\n';
  }
  const fs::path path = dir / "calibration.cfg";
  write_text(path, text);
  out << "calibration " << path.string() << '\n';
}

void cmd_presets(const std::string& show, std::ostream& out) {
  if (!show.empty()) {
    out << config::preset_text(show);
    return;
  }
  for (const std::string& name : config::preset_names()) out << name << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optical tracking with IMU gap filling"};
  app.require_subcommand(1);

  CommonOptions sim_o;
  CLI::App* simulate = app.add_subcommand("simulate", "Generate position, IMU and truth traces");
  add_common(simulate, sim_o);

  CommonOptions track_o;
  std::string pos_path;
  std::string imu_path;
  CLI::App* track = app.add_subcommand("track", "Run the tracker over recorded traces");
  add_common(track, track_o);
  track->add_option("--position", pos_path, "Position trace (default: <out-dir>/position.csv)");
  track->add_option("--imu", imu_path, "IMU trace (default: <out-dir>/imu.csv)");

  CommonOptions metrics_o;
  std::string fused_path;
  std::string truth_path;
  CLI::App* metrics = app.add_subcommand("metrics", "Per-gap error report against truth");
  add_common(metrics, metrics_o);
  metrics->add_option("--fused", fused_path, "Fused trace (default: <out-dir>/fused.csv)");
  metrics->add_option("--truth", truth_path, "Truth trace (default: <out-dir>/truth.csv)");

  CommonOptions calib_o;
  CalibrateInputs calib_in;
  CLI::App* calibrate = app.add_subcommand("calibrate", "Estimate the IMU mount and gain");
  add_common(calibrate, calib_o);
  calibrate->add_option("--mount-imu", calib_in.mount_imu, "IMU trace of static attitudes");
  calibrate->add_option("--mount-truth", calib_in.mount_truth, "Pose trace of the same capture");
  calibrate->add_option("--gain-position", calib_in.gain_position, "Position trace, rest then motion");
  calibrate->add_option("--gain-imu", calib_in.gain_imu, "IMU trace of the same capture");

  std::string show;
  CLI::App* presets = app.add_subcommand("presets", "List built-in presets");
  presets->add_option("--show", show, "Print one preset's configuration");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*simulate) cmd_simulate(sim_o, out);
    if (*track) cmd_track(track_o, pos_path, imu_path, out);
    if (*metrics) cmd_metrics(metrics_o, fused_path, truth_path, out);
    if (*calibrate) cmd_calibrate(calib_o, calib_in, out);
    if (*presets) cmd_presets(show, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace oftrack::cli

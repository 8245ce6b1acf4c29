/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "oftrack/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "oftrack/trace.hpp"

namespace oftrack::config {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    out.push_back(trim(s.substr(start, p == std::string_view::npos ? p : p - start)));
    if (p == std::string_view::npos) return out;
    start = p + 1;
  }
}

constexpr const char* kScenarioKeys[] = {
    "seed",
    "position.rate",
    "position.noise_sigma",
    "trajectory.kind",
    "trajectory.amplitude",
    "trajectory.period",
    "trajectory.duration",
    "trajectory.center",
    "trajectory.velocity",
    "trajectory.accel",
    "trajectory.amplitudes",
    "trajectory.periods",
    "trajectory.phases",
    "trajectory.hold",
    "trajectory.pose_hold",
    "trajectory.pose_transition",
    "imu.profile",
    "imu.bias",
    "imu.bias_drift",
    "imu.noise_sigma",
    "imu.gain",
    "imu.gyro_noise_sigma",
    "imu.rate",
    "imu.r_imu_body",
    "gravity",
    "occlusion.generator",
    "occlusion.windows",
    "occlusion.gap_duration",
    "occlusion.start_after",
    "occlusion.min_separation",
    "occlusion.end_margin",
    "occlusion.random_rate",
    "occlusion.random_seed",
};

constexpr const char* kFusionKeys[] = {
    "fusion.n",
    "fusion.nv",
    "fusion.ta",
    "fusion.gain",
    "fusion.alpha",
    "fusion.a_max",
    "fusion.jitter_tolerance",
    "fusion.offset_eval_fraction",
    "fusion.orientation_mode",
    "fusion.r_imu_body",
    "fusion.initial_orientation",
};

template <std::size_t N>
bool contains(const char* const (&keys)[N], const std::string& k) {
  return std::find_if(std::begin(keys), std::end(keys),
                      [&k](const char* s) { return k == s; }) != std::end(keys);
}

class Reader {
 public:
  explicit Reader(const KeyValueDoc& doc) : doc_(doc) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const KeyValueDoc::Entry* e = doc_.find(key);
    throw Error(ErrorCode::Config, "config key '" + key + "'" +
                                       (e ? " (" + e->origin + ")" : std::string()) + ": " + what);
  }

  std::optional<std::string> raw(const std::string& key) const {
    const KeyValueDoc::Entry* e = doc_.find(key);
    if (!e) return std::nullopt;
    return e->value;
  }

  double number(std::string_view s, const std::string& key) const {
    const auto v = trace::parse_double(s);
    if (!v) fail(key, "expected a number, got '" + std::string(s) + "'");
    return *v;
  }

  void real(const std::string& key, double& out) const {
    if (const auto v = raw(key)) out = number(*v, key);
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) const {
    const auto v = raw(key);
    if (!v) return;
    Int x = 0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), x);
    if (res.ec != std::errc() || res.ptr != v->data() + v->size()) {
      fail(key, "expected a non-negative integer, got '" + *v + "'");
    }
    out = x;
  }

  std::vector<double> numbers(const std::string& key, std::size_t count) const {
    const auto v = raw(key);
    const auto parts = split(*v, ',');
    if (parts.size() != count) {
      fail(key, "expected " + std::to_string(count) + " comma-separated numbers");
    }
    std::vector<double> out;
    for (std::string_view p : parts) out.push_back(number(p, key));
    return out;
  }

  void vec3(const std::string& key, Vec3& out) const {
    if (!raw(key)) return;
    const auto n = numbers(key, 3);
    out = Vec3(n[0], n[1], n[2]);
  }

  void rotation(const std::string& key, RotationMatrix& out) const {
    if (!raw(key)) return;
    const auto n = numbers(key, 9);
    Mat3 m;
    m << n[0], n[1], n[2], n[3], n[4], n[5], n[6], n[7], n[8];
    try {
      out = RotationMatrix(m);
    } catch (const Error& e) {
      fail(key, e.what());
    }
  }

  void quaternion(const std::string& key, UnitQuaternion& out) const {
    if (!raw(key)) return;
    const auto n = numbers(key, 4);
    try {
      out = UnitQuaternion::normalized(n[0], n[1], n[2], n[3]);
    } catch (const Error& e) {
      fail(key, e.what());
    }
  }

  template <typename E>
  void choice(const std::string& key, E& out,
              std::initializer_list<std::pair<const char*, E>> options) const {
    const auto v = raw(key);
    if (!v) return;
    std::string names;
    for (const auto& [name, value] : options) {
      if (*v == name) {
        out = value;
        return;
      }
      names += (names.empty() ? "" : "|") + std::string(name);
    }
    fail(key, "expected one of " + names + ", got '" + *v + "'");
  }

  void windows(const std::string& key, std::vector<sim::OcclusionWindow>& out) const {
    const auto v = raw(key);
    if (!v) return;
    out.clear();
    if (trim(*v).empty()) return;
    for (std::string_view item : split(*v, ';')) {
      const auto sd = split(item, ':');
      if (sd.size() != 2) fail(key, "expected start:duration entries separated by ';'");
      out.push_back(sim::OcclusionWindow{number(sd[0], key), number(sd[1], key)});
    }
  }

 private:
  const KeyValueDoc& doc_;
};

constexpr std::string_view kArmLift = R"(# Arm lift along global y with mid-stroke gaps.
trajectory.kind=arm_lift
trajectory.amplitude=0.35
trajectory.period=2
trajectory.duration=10
imu.profile=low_cost
occlusion.generator=mid_stroke
occlusion.gap_duration=0.3
fusion.orientation_mode=hold
)";

constexpr std::string_view kCircular = R"(# Circle in the x-y plane, gaps at velocity reversals.
trajectory.kind=circular
trajectory.amplitude=0.3
trajectory.period=2.5
trajectory.duration=12
imu.profile=low_cost
occlusion.generator=direction_change
occlusion.gap_duration=0.3
fusion.orientation_mode=gyro
)";

constexpr std::string_view kUseCaseYz = R"(# Motion in the global y-z plane, gaps on the downward stroke.
trajectory.kind=lissajous
trajectory.amplitudes=0,0.3,0.2
trajectory.periods=3,3,3
trajectory.phases=0,0,3.141592653589793
trajectory.duration=12
imu.profile=low_cost
imu.r_imu_body=0,-1,0,1,0,0,0,0,1
occlusion.generator=windows
occlusion.windows=4.35:0.3;7.35:0.3;10.35:0.3
fusion.orientation_mode=hold
)";

constexpr std::string_view kConstantAccel = R"(# Constant acceleration, ideal sensors, one long gap.
trajectory.kind=constant_accel
trajectory.velocity=0.2,0.5,-0.1
trajectory.accel=0.3,-2,0.5
trajectory.duration=6
imu.profile=ideal
position.noise_sigma=0
occlusion.generator=windows
occlusion.windows=3:2
fusion.orientation_mode=hold
)";

constexpr std::string_view kCalibPoses = R"(# Static attitudes for mount registration against gravity.
trajectory.kind=poses
trajectory.pose_hold=1.5
trajectory.pose_transition=1
trajectory.duration=14
imu.profile=low_cost
imu.r_imu_body=0.6644630243886746,-0.733294817019782,0.14410968236790922,0.6644630243886746,0.4914500543718068,-0.5629970988186381,0.34202014332566866,0.46984631039295405,0.8137976813493736
occlusion.generator=none
)";

constexpr std::string_view kCalibMotion = R"(# Rest then three-axis motion for accelerometer gain estimation.
trajectory.kind=lissajous
trajectory.amplitudes=0.2,0.2,0.2
trajectory.periods=2,2.5,3
trajectory.phases=-1.5707963267948966,-1.5707963267948966,-1.5707963267948966
trajectory.hold=1
trajectory.duration=8
imu.profile=low_cost
imu.r_imu_body=0.6644630243886746,-0.733294817019782,0.14410968236790922,0.6644630243886746,0.4914500543718068,-0.5629970988186381,0.34202014332566866,0.46984631039295405,0.8137976813493736
occlusion.generator=none
)";

struct Preset {
  const char* name;
  std::string_view text;
};

constexpr Preset kPresets[] = {
    {"arm_lift", kArmLift},           {"circular", kCircular},
    {"use_case_yz", kUseCaseYz},      {"constant_accel", kConstantAccel},
    {"calib_poses", kCalibPoses},     {"calib_motion", kCalibMotion},
};

}  // namespace

KeyValueDoc KeyValueDoc::parse(std::string_view text, const std::string& source) {
  KeyValueDoc doc;
  std::size_t line = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::string_view l =
        trim(text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
    ++line;
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (l.empty() || l.front() == '#') continue;
    const std::string origin = source + ":" + std::to_string(line);
    const std::size_t eq = l.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::Config, origin + ": expected key=value");
    }
    const std::string key(trim(l.substr(0, eq)));
    if (key.empty()) throw Error(ErrorCode::Config, origin + ": empty key");
    if (doc.has(key)) throw Error(ErrorCode::Config, origin + ": duplicate key '" + key + "'");
    doc.set(key, std::string(trim(l.substr(eq + 1))), origin);
  }
  return doc;
}

KeyValueDoc KeyValueDoc::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse(buf.str(), path.string());
}

void KeyValueDoc::set(const std::string& key, const std::string& value, const std::string& origin) {
  entries_[key] = Entry{value, origin};
}

const KeyValueDoc::Entry* KeyValueDoc::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void KeyValueDoc::merge(const KeyValueDoc& other) {
  for (const auto& [k, e] : other.entries_) entries_[k] = e;
}

std::string KeyValueDoc::to_string() const {
  std::string out;
  for (const auto& [k, e] : entries_) out += k + "=" + e.value + "\n";
  return out;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const Preset& p : kPresets) out.emplace_back(p.name);
  return out;
}

std::string_view preset_text(std::string_view name) {
  for (const Preset& p : kPresets) {
    if (name == p.name) return p.text;
  }
  std::string names;
  for (const Preset& p : kPresets) names += (names.empty() ? "" : ", ") + std::string(p.name);
  throw Error(ErrorCode::Config, "unknown preset '" + std::string(name) + "' (known: " + names + ")");
}

KeyValueDoc resolve(const KeyValueDoc& doc, std::optional<std::string> preset_override) {
  std::optional<std::string> name = preset_override;
  if (!name) {
    if (const KeyValueDoc::Entry* e = doc.find("preset")) name = e->value;
  }
  KeyValueDoc out;
  if (name) out = KeyValueDoc::parse(preset_text(*name), "preset " + *name);
  KeyValueDoc own = doc;
  own.erase("preset");
  out.merge(own);
  return out;
}

void check_keys(const KeyValueDoc& doc) {
  for (const auto& [k, e] : doc.entries()) {
    if (!contains(kScenarioKeys, k) && !contains(kFusionKeys, k)) {
      throw Error(ErrorCode::Config, "unknown config key '" + k + "' (" + e.origin + ")");
    }
  }
}

sim::Scenario scenario_from(const KeyValueDoc& doc) {
  check_keys(doc);
  const Reader r(doc);
  sim::Scenario sc;

  r.integer("seed", sc.seed);
  r.real("position.rate", sc.position_rate);
  r.real("position.noise_sigma", sc.position_noise_sigma);

  sim::Trajectory& tr = sc.trajectory;
  r.choice("trajectory.kind", tr.kind,
           {{"arm_lift", sim::TrajectoryKind::ArmLift},
            {"circular", sim::TrajectoryKind::Circular},
            {"constant_accel", sim::TrajectoryKind::ConstantAccel},
            {"lissajous", sim::TrajectoryKind::Lissajous},
            {"poses", sim::TrajectoryKind::Poses}});
  r.real("trajectory.amplitude", tr.amplitude);
  r.real("trajectory.period", tr.period);
  r.real("trajectory.duration", tr.duration);
  r.vec3("trajectory.center", tr.center);
  r.vec3("trajectory.velocity", tr.velocity);
  r.vec3("trajectory.accel", tr.accel);
  r.vec3("trajectory.amplitudes", tr.amplitudes);
  r.vec3("trajectory.periods", tr.periods);
  r.vec3("trajectory.phases", tr.phases);
  r.real("trajectory.hold", tr.hold);
  r.real("trajectory.pose_hold", tr.pose_hold);
  r.real("trajectory.pose_transition", tr.pose_transition);
  if (tr.kind == sim::TrajectoryKind::Poses) tr.poses = sim::default_calibration_poses();

  enum class Profile { Ideal, Low, High };
  Profile profile = Profile::Low;
  r.choice("imu.profile", profile,
           {{"ideal", Profile::Ideal}, {"low_cost", Profile::Low}, {"high_cost", Profile::High}});
  sc.imu = profile == Profile::Ideal  ? sim::ImuModel::ideal()
           : profile == Profile::High ? sim::ImuModel::high_cost()
                                      : sim::ImuModel::low_cost();
  r.vec3("imu.bias", sc.imu.bias);
  r.vec3("imu.bias_drift", sc.imu.bias_drift);
  r.vec3("imu.noise_sigma", sc.imu.noise_sigma);
  r.vec3("imu.gain", sc.imu.gain);
  r.vec3("imu.gyro_noise_sigma", sc.imu.gyro_noise_sigma);
  r.real("imu.rate", sc.imu.rate);
  r.rotation("imu.r_imu_body", sc.imu.imu_to_body);
  r.vec3("gravity", sc.imu.gravity);

  sim::OcclusionSchedule& oc = sc.occlusions;
  r.choice("occlusion.generator", oc.generator,
           {{"none", sim::OcclusionGenerator::None},
            {"windows", sim::OcclusionGenerator::Windows},
            {"mid_stroke", sim::OcclusionGenerator::MidStroke},
            {"direction_change", sim::OcclusionGenerator::DirectionChange},
            {"random", sim::OcclusionGenerator::Random}});
  r.windows("occlusion.windows", oc.windows);
  r.real("occlusion.gap_duration", oc.gap_duration);
  r.real("occlusion.start_after", oc.start_after);
  r.real("occlusion.min_separation", oc.min_separation);
  r.real("occlusion.end_margin", oc.end_margin);
  r.real("occlusion.random_rate", oc.random_rate);
  r.integer("occlusion.random_seed", oc.random_seed);

  try {
    sc.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("scenario: ") + e.what());
  }
  return sc;
}

FusionConfig fusion_from(const KeyValueDoc& doc, const sim::Scenario& scenario) {
  check_keys(doc);
  const Reader r(doc);
  FusionConfig cfg;
  cfg.sample_period = 1.0 / scenario.position_rate;
  cfg.gravity = scenario.imu.gravity;
  cfg.imu_to_body = scenario.imu.imu_to_body;

  r.integer("fusion.n", cfg.window);
  r.integer("fusion.nv", cfg.velocity_window);
  r.real("fusion.ta", cfg.sample_period);
  r.vec3("fusion.gain", cfg.gain);
  r.real("fusion.alpha", cfg.alpha);
  r.real("fusion.a_max", cfg.max_expected_accel);
  r.real("fusion.jitter_tolerance", cfg.jitter_tolerance);
  r.real("fusion.offset_eval_fraction", cfg.offset_eval_fraction);
  r.choice("fusion.orientation_mode", cfg.orientation_mode,
           {{"gyro", OrientationMode::Gyro}, {"hold", OrientationMode::HoldWhileTracking}});
  r.rotation("fusion.r_imu_body", cfg.imu_to_body);
  r.quaternion("fusion.initial_orientation", cfg.initial_orientation);

  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("fusion: ") + e.what());
  }
  return cfg;
}

}  // namespace oftrack::config

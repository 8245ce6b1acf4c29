/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oftrack/fusion.hpp"
#include "oftrack/sim.hpp"

// Key-value configuration documents: one `key=value` per line, `#` starts a
// comment line. Vectors are comma-separated, occlusion windows are
// `start:duration` pairs separated by `;`.

namespace oftrack::config {

class KeyValueDoc {
 public:
  struct Entry {
    std::string value;
    std::string origin;  // "file:line" or "flag"
  };

  /// Throws Config on malformed lines and duplicate keys.
  static KeyValueDoc parse(std::string_view text, const std::string& source = "<text>");
  static KeyValueDoc load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value, const std::string& origin = "flag");
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void erase(const std::string& key) { entries_.erase(key); }
  const Entry* find(const std::string& key) const;

  /// Keys from `other` replace ours.
  void merge(const KeyValueDoc& other);

  const std::map<std::string, Entry>& entries() const { return entries_; }

  /// Sorted `key=value` lines.
  std::string to_string() const;

 private:
  std::map<std::string, Entry> entries_;
};

/// Names of the built-in presets.
std::vector<std::string> preset_names();

/// Preset document text; throws Config for an unknown name.
std::string_view preset_text(std::string_view name);

/// Start from the preset named by the `preset` key (or `preset_override`),
/// then apply the document's own keys.
KeyValueDoc resolve(const KeyValueDoc& doc, std::optional<std::string> preset_override = {});

/// Throws Config naming the key for unknown keys and bad values.
sim::Scenario scenario_from(const KeyValueDoc& doc);

/// Fusion parameters; Ta, gravity and the mount default to the scenario's.
FusionConfig fusion_from(const KeyValueDoc& doc, const sim::Scenario& scenario);

/// Both builders' key checks together: every key must belong to one of them.
void check_keys(const KeyValueDoc& doc);

}  // namespace oftrack::config

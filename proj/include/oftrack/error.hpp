/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oftrack {

enum class ErrorCode {
  InvalidArgument,
  OcclusionInWindow,
  SingularSystem,
  NotInitialized,
  NonMonotonicTime,
  Misaligned,
  DegenerateGeometry,
  InsufficientExcitation,
  ParseError,
  SchemaError,
  MissingTruth,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace oftrack

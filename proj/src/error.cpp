/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "oftrack/error.hpp"

namespace oftrack {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OcclusionInWindow: return "OcclusionInWindow";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NotInitialized: return "NotInitialized";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::Misaligned: return "Misaligned";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::InsufficientExcitation: return "InsufficientExcitation";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::MissingTruth: return "MissingTruth";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace oftrack

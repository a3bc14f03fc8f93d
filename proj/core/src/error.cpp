// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include "ckkstune/error.hpp"

namespace ckkstune {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::UnknownKind: return "UnknownKind";
    case ErrorKind::ScopeViolation: return "ScopeViolation";
    case ErrorKind::MaskViolation: return "MaskViolation";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::UnsupportedRing: return "UnsupportedRing";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::ZeroCost: return "ZeroCost";
    case ErrorKind::BatchShapeMismatch: return "BatchShapeMismatch";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::RecordedMiss: return "RecordedMiss";
    case ErrorKind::CorruptTrace: return "CorruptTrace";
    case ErrorKind::NoFeasibleRegime: return "NoFeasibleRegime";
    case ErrorKind::AllSurvivorsFailedEncrypted: return "AllSurvivorsFailedEncrypted";
    case ErrorKind::Config: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace ckkstune

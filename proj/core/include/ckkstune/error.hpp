// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ckkstune {

enum class ErrorKind {
  Schema,
  ShapeMismatch,
  UnknownKind,
  ScopeViolation,
  MaskViolation,
  InvariantViolation,
  UnsupportedRing,
  Infeasible,
  ZeroCost,
  BatchShapeMismatch,
  BackendUnavailable,
  RecordedMiss,
  CorruptTrace,
  NoFeasibleRegime,
  AllSurvivorsFailedEncrypted,
  Config,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-readable kind so
/// callers (the orchestrator, the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ckkstune

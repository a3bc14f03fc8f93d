// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace ckkstune {

/// Plain-text table of the encrypted trials in a run or replay document:
/// one column per trial, global metrics on top, per-layer runtime and share
/// below. Throws Schema when the document has no ledger.
std::string render_report(const nlohmann::json& doc);

}  // namespace ckkstune

// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace ckkstune {

/// Whole-file read; throws Config when the file cannot be opened.
std::string read_text(const std::filesystem::path& path);
/// Throws Config on unreadable files and Schema on malformed JSON.
nlohmann::json read_json(const std::filesystem::path& path);
/// Writes atomically via a sibling temporary; throws Config on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ckkstune

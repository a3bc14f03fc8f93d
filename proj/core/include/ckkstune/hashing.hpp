// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ckkstune {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Stable 64-bit seed derivation from a string key (not cryptographic).
std::uint64_t stable_hash64(std::string_view data, std::uint64_t seed = 0);

}  // namespace ckkstune

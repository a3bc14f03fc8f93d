// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force least squares on relative residuals: each row is divided by
// its observed seconds, then the normal equations are solved by Gauss-Jordan
// elimination with partial pivoting, in long double.

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "ckkstune/cost_model.hpp"

namespace ckkstune::testing {

inline std::array<long double, 4> design_row(const PrimitiveCounts& c) {
  return {static_cast<long double>(c.mul), static_cast<long double>(c.rot), static_cast<long double>(c.boot),
          static_cast<long double>(c.mem_cost)};
}

/// Unconstrained fit over the columns in `cols`; others are reported as 0.
inline std::optional<std::array<double, 4>> normal_equation_fit(std::span<const Observation> obs,
                                                                const std::vector<int>& cols) {
  const std::size_t k = cols.size();
  std::vector<std::vector<long double>> a(k, std::vector<long double>(k + 1, 0));
  for (const auto& o : obs) {
    auto r = design_row(o.counts);
    const long double w = o.seconds > 0 ? 1.0L / static_cast<long double>(o.seconds) : 1.0L;
    for (auto& v : r) v *= w;
    const long double y = w * static_cast<long double>(o.seconds);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) a[i][j] += r[cols[i]] * r[cols[j]];
      a[i][k] += r[cols[i]] * y;
    }
  }
  for (std::size_t p = 0; p < k; ++p) {
    std::size_t piv = p;
    for (std::size_t i = p + 1; i < k; ++i) {
      if (std::fabs(a[i][p]) > std::fabs(a[piv][p])) piv = i;
    }
    if (std::fabs(a[piv][p]) < 1e-30L) return std::nullopt;
    std::swap(a[p], a[piv]);
    for (std::size_t i = 0; i < k; ++i) {
      if (i == p) continue;
      const long double f = a[i][p] / a[p][p];
      for (std::size_t j = p; j <= k; ++j) a[i][j] -= f * a[p][j];
    }
  }
  std::array<double, 4> out{0, 0, 0, 0};
  for (std::size_t i = 0; i < k; ++i) out[cols[i]] = static_cast<double>(a[i][k] / a[i][i]);
  return out;
}

}  // namespace ckkstune::testing

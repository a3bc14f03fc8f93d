// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include "ckkstune/cost_model.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ckkstune/error.hpp"

namespace ckkstune {

double layer_cost(const PrimitiveCounts& c, const CostCoefficients& k) {
  return k.alpha * static_cast<double>(c.mul) + k.beta * static_cast<double>(c.rot) +
         k.gamma * static_cast<double>(c.boot) + k.delta * c.mem_cost;
}

CostPrediction predict(std::span<const LayerProfile> profiles, const CostCoefficients& coeffs) {
  CostPrediction out;
  out.terms.reserve(profiles.size());
  for (const auto& p : profiles) {
    out.terms.push_back(layer_cost(p.counts, coeffs));
    out.total += out.terms.back();
  }
  if (!(out.total > 0)) throw Error(ErrorKind::ZeroCost, "predicted cost is zero");
  for (double t : out.terms) out.shares.push_back(t / out.total);
  return out;
}

namespace {

std::array<double, 4> row(const PrimitiveCounts& c) {
  return {static_cast<double>(c.mul), static_cast<double>(c.rot), static_cast<double>(c.boot), c.mem_cost};
}

double relative_weight(double seconds) { return seconds > 0 ? 1.0 / seconds : 1.0; }

Calibration seeded(const CostCoefficients& seeds, std::size_t n, std::string warning) {
  Calibration cal;
  cal.coeffs = seeds;
  cal.fallback = true;
  cal.observations = n;
  cal.warning = std::move(warning);
  return cal;
}

// Solves y ~ X[:, cols] with column equilibration. Returns false when the
// active design is rank deficient.
bool solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& cols,
           std::array<double, 4>& coef) {
  Eigen::MatrixXd a(x.rows(), static_cast<Eigen::Index>(cols.size()));
  Eigen::VectorXd norms(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    norms(kk) = x.col(cols[k]).norm();
    a.col(kk) = x.col(cols[k]) / norms(kk);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols()) return false;
  const Eigen::VectorXd sol = qr.solve(y);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    coef[static_cast<std::size_t>(cols[k])] = sol(kk) / norms(kk);
  }
  return true;
}

}  // namespace

Calibration calibrate(std::span<const Observation> observations, const CostCoefficients& seeds) {
  const std::size_t n = observations.size();
  if (n < kMinObservations) {
    return seeded(seeds, n, "rank deficient: " + std::to_string(n) + " observations, need " +
                                std::to_string(kMinObservations));
  }
  // Timing noise scales with the measurement, so rows are weighted by
  // 1/seconds and the fit minimizes relative residuals.
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 4);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = row(observations[i].counts);
    const double w = relative_weight(observations[i].seconds);
    for (int c = 0; c < 4; ++c) x(static_cast<Eigen::Index>(i), c) = w * r[static_cast<std::size_t>(c)];
    y(static_cast<Eigen::Index>(i)) = w * observations[i].seconds;
  }

  std::array<double, 4> coef = seeds.as_array();
  std::vector<int> active;
  for (int c = 0; c < 4; ++c) {
    if (x.col(c).cwiseAbs().maxCoeff() > 0) active.push_back(c);
  }
  if (active.empty()) return seeded(seeds, n, "rank deficient: every observed count is zero");
  const bool partial = active.size() < 4;
  if (!solve(x, y, active, coef)) return seeded(seeds, n, "rank deficient design matrix");

  std::vector<int> kept;
  for (int c : active) {
    if (coef[static_cast<std::size_t>(c)] < 0) {
      coef[static_cast<std::size_t>(c)] = 0;
    } else {
      kept.push_back(c);
    }
  }
  if (kept.size() < active.size() && !kept.empty()) {
    if (!solve(x, y, kept, coef)) return seeded(seeds, n, "rank deficient design after clipping");
    for (int c : kept) coef[static_cast<std::size_t>(c)] = std::max(0.0, coef[static_cast<std::size_t>(c)]);
  }

  Calibration cal;
  cal.coeffs = CostCoefficients::from_array(coef);
  cal.partial = partial;
  cal.observations = n;
  double tss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double res = observations[i].seconds - layer_cost(observations[i].counts, cal.coeffs);
    cal.residuals.push_back(res);
    cal.rss += res * res;
    tss += observations[i].seconds * observations[i].seconds;
  }
  cal.r_squared = tss > 0 ? 1.0 - cal.rss / tss : 0.0;
  if (cal.r_squared < kMinFitQuality) {
    auto fb = seeded(seeds, n, "poor fit: R^2 " + std::to_string(cal.r_squared) + " below threshold");
    fb.r_squared = cal.r_squared;
    fb.rss = cal.rss;
    fb.residuals = cal.residuals;
    return fb;
  }
  if (partial) cal.warning = "some primitive columns were never observed; their seeds were kept";
  return cal;
}

BottleneckWeights BottleneckWeights::normalized() const {
  const double sum = w1 + w2 + w3 + w4;
  if (!(sum > 0) || w1 < 0 || w2 < 0 || w3 < 0 || w4 < 0) {
    throw Error(ErrorKind::InvariantViolation, "bottleneck weights must be nonnegative with a positive sum");
  }
  return {w1 / sum, w2 / sum, w3 / sum, w4 / sum};
}

double bottleneck_score(const LayerProfile& p, const BottleneckWeights& w) {
  return w.w1 * p.runtime_fraction + w.w2 * (1.0 - p.slot_utilization) + w.w3 * p.rot_norm +
         w.w4 * (p.low_margin ? 1.0 : 0.0);
}

std::vector<BottleneckScore> bottleneck_scores(std::span<const LayerProfile> profiles,
                                               const BottleneckWeights& weights, std::size_t top_k) {
  const auto w = weights.normalized();
  std::vector<BottleneckScore> scores;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (profiles[i].counts.zero()) continue;
    scores.push_back({profiles[i].id, i, bottleneck_score(profiles[i], w)});
  }
  std::stable_sort(scores.begin(), scores.end(),
                   [](const BottleneckScore& a, const BottleneckScore& b) { return a.score > b.score; });
  if (scores.size() > top_k) scores.resize(top_k);
  return scores;
}

nlohmann::json coefficients_to_json(const CostCoefficients& c) {
  return {{"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}, {"delta", c.delta}};
}

CostCoefficients coefficients_from_json(const nlohmann::json& j) {
  CostCoefficients c;
  for (const auto& [key, v] : j.items()) {
    if (!v.is_number()) throw Error(ErrorKind::Schema, "coefficient '" + key + "' must be a number");
    const double d = v.get<double>();
    if (d < 0) throw Error(ErrorKind::Schema, "coefficient '" + key + "' must be nonnegative");
    if (key == "alpha") c.alpha = d;
    else if (key == "beta") c.beta = d;
    else if (key == "gamma") c.gamma = d;
    else if (key == "delta") c.delta = d;
    else throw Error(ErrorKind::Schema, "unexpected coefficient '" + key + "'");
  }
  return c;
}

nlohmann::json calibration_to_json(const Calibration& c) {
  return {{"coefficients", coefficients_to_json(c.coeffs)},
          {"fallback", c.fallback},
          {"partial", c.partial},
          {"warning", c.warning},
          {"r_squared", c.r_squared},
          {"rss", c.rss},
          {"residuals", c.residuals},
          {"observations", c.observations}};
}

}  // namespace ckkstune

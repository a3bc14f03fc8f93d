// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include "ckkstune/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <vector>

#include "ckkstune/error.hpp"

namespace ckkstune {

using nlohmann::json;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string num(const json& rec, const char* key, const char* spec) {
  const auto& m = rec.at("metrics");
  if (!m.contains(key) || m.at(key).is_null()) return "-";
  return fmt(spec, m.at(key).get<double>());
}

}  // namespace

std::string render_report(const json& doc) {
  if (!doc.is_object() || !doc.contains("ledger") || !doc.at("ledger").is_array()) {
    throw Error(ErrorKind::Schema, "report document needs a ledger array");
  }
  std::vector<json> cols;
  for (const auto& rec : doc.at("ledger")) {
    const auto mode = rec.value("mode", "");
    if (mode == "FHE_LIGHT" || mode == "FHE_FULL") cols.push_back(rec);
  }

  std::vector<std::vector<std::string>> rows;
  auto row = [&](std::string label, auto cell) {
    std::vector<std::string> r{std::move(label)};
    for (const auto& c : cols) r.push_back(cell(c));
    rows.push_back(std::move(r));
  };
  try {
    row("Trial", [](const json& c) { return std::to_string(c.at("ordinal").get<long long>()); });
    row("Mode", [](const json& c) { return c.at("mode").get<std::string>(); });
    row("Digest", [](const json& c) { return c.at("digest").get<std::string>().substr(0, 10); });
    row("Total runtime [s]", [](const json& c) { return num(c, "measured_latency_s", "%.2f"); });
    row("MAE", [](const json& c) { return num(c, "measured_mae", "%.1e"); });
    row("Precision [bits]", [](const json& c) { return num(c, "measured_precision_bits", "%.2f"); });
    row("# bootstraps", [](const json& c) { return std::to_string(c.at("metrics").value("boot_count", 0)); });
    row("Security [bits]", [](const json& c) { return std::to_string(c.at("metrics").value("sec_bits", 0)); });
    row("log N", [](const json& c) { return std::to_string(c.at("config").at("global").at("log_n").get<int>()); });
    row("Verdict", [](const json& c) { return std::string(c.at("passed").get<bool>() ? "accept" : "reject"); });

    std::vector<std::string> layers;
    std::set<std::string> seen;
    for (const auto& c : cols) {
      const auto ls = c.at("metrics").value("measured_layer_seconds", json::object());
      for (const auto& [id, _] : ls.items()) {
        if (seen.insert(id).second) layers.push_back(id);
      }
    }
    rows.push_back({});
    for (const auto& id : layers) {
      row(id, [&id](const json& c) -> std::string {
        const auto ls = c.at("metrics").value("measured_layer_seconds", json::object());
        if (!ls.contains(id)) return "-";
        double total = 0;
        for (const auto& [_, v] : ls.items()) total += v.get<double>();
        const double s = ls.at(id).get<double>();
        return fmt("%.3f", s) + " (" + fmt("%.1f", total > 0 ? 100.0 * s / total : 0.0) + "%)";
      });
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed ledger record: ") + e.what());
  }

  std::vector<std::size_t> width(cols.size() + 1, 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::ostringstream out;
  if (doc.contains("model")) out << "model: " << doc.at("model").get<std::string>() << "\n";
  if (doc.contains("termination")) out << "termination: " << doc.at("termination").get<std::string>() << "\n";
  if (doc.contains("encrypted_trials")) out << "encrypted trials: " << doc.at("encrypted_trials").get<int>() << "\n";
  if (cols.empty()) {
    out << "(no encrypted trials)\n";
    return out.str();
  }
  for (const auto& r : rows) {
    if (r.empty()) {
      out << std::string(width[0], '-') << "\n";
      continue;
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
      out << r[i];
      if (i + 1 < r.size()) out << std::string(width[i] - r[i].size() + 2, ' ');
    }
    out << "\n";
  }
  if (doc.contains("notes")) {
    for (const auto& n : doc.at("notes")) out << "note: " << n.get<std::string>() << "\n";
  }
  return out.str();
}

}  // namespace ckkstune

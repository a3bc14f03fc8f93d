// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include "ckkstune/controller.hpp"
#include "ckkstune/error.hpp"

namespace ckkstune {

RemotePolicy::RemotePolicy(std::string endpoint, std::string token, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), token_(std::move(token)), timeout_(timeout) {}

namespace {

// Splits "http://host:port/path" into origin and path.
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorKind::Config, "policy endpoint needs a scheme");
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

PolicyDecision RemotePolicy::decide(const PolicyContext& ctx) {
  last_error_.clear();
  try {
    const auto [origin, path] = split_endpoint(endpoint_);
    httplib::Client client(origin);
    if (!client.is_valid()) throw Error(ErrorKind::Config, "unsupported policy endpoint " + endpoint_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    auto res = client.Post(path, headers, context_to_json(ctx).dump(), "application/json");
    if (!res) throw Error(ErrorKind::BackendUnavailable, "policy transport error: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw Error(ErrorKind::BackendUnavailable, "policy endpoint returned HTTP " + std::to_string(res->status));
    }
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      throw Error(ErrorKind::Schema, "policy response is not JSON");
    }
    return validate_decision(body, ctx);
  } catch (const Error& e) {
    last_error_ = e.what();
  } catch (const std::exception& e) {
    last_error_ = e.what();
  }
  auto d = fallback_.decide(ctx);
  d.proposer = Proposer::Fallback;
  d.rationale = "fallback (" + last_error_ + "): " + d.rationale;
  if (d.rationale.size() > kMaxRationale) d.rationale.resize(kMaxRationale);
  return d;
}

}  // namespace ckkstune

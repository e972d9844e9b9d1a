#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "deme/embedding.hpp"
#include "deme/error.hpp"
#include "deme/generation.hpp"

namespace deme::net {

inline constexpr const char* kApiKeyVariable = "DEME_API_KEY";

namespace detail {
inline std::atomic<bool>& network_flag() {
  static std::atomic<bool> allowed{false};
  return allowed;
}
}  // namespace detail

// Process-wide gate checked before any socket is opened. Off by default.
inline void set_network_allowed(bool allowed) noexcept { detail::network_flag().store(allowed); }
inline bool network_allowed() noexcept { return detail::network_flag().load(); }

inline std::optional<std::string> api_key_from_env() {
  const char* v = std::getenv(kApiKeyVariable);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

struct Endpoint {
  std::string url;  // e.g. https://api.example.com/v1/chat/completions
  std::string model;
  std::string api_key;
  std::chrono::seconds timeout{30};
  double temperature = 0.0;
};

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline SplitUrl split_url(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos)
    throw Error(ErrorCode::ConfigError, "url '" + std::string(url) + "' has no scheme");
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

inline nlohmann::json build_chat_request(const std::string& model, std::string_view prompt, double temperature) {
  return {{"model", model},
          {"temperature", temperature},
          {"stream", false},
          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", std::string(prompt)}}})}};
}

inline std::string parse_chat_response(std::string_view body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::GeneratorError, "chat response is not JSON");
  try {
    if (j.contains("error")) throw Error(ErrorCode::GeneratorError, "provider error: " + j.at("error").dump());
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::GeneratorError, std::string("unexpected chat response shape: ") + e.what());
  }
}

inline nlohmann::json build_embedding_request(const std::string& model, std::string_view text) {
  return {{"model", model}, {"input", std::string(text)}};
}

inline Embedding parse_embedding_response(std::string_view body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::EmbedderError, "embedding response is not JSON");
  try {
    return j.at("data").at(0).at("embedding").get<Embedding>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::EmbedderError, std::string("unexpected embedding response shape: ") + e.what());
  }
}

// POST a JSON body with bearer auth. Throws NetworkDisabled when the gate is closed.
inline std::string post_json(const Endpoint& ep, const nlohmann::json& body, ErrorCode failure) {
  if (!network_allowed()) throw Error(ErrorCode::NetworkDisabled, "network access is disabled (offline mode)");
  auto [origin, path] = split_url(ep.url);
  httplib::Client client(origin);
  client.set_connection_timeout(ep.timeout);
  client.set_read_timeout(ep.timeout);
  client.set_write_timeout(ep.timeout);
  httplib::Headers headers{{"Authorization", "Bearer " + ep.api_key}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw Error(failure, "request to " + ep.url + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw Error(failure, "request to " + ep.url + " returned HTTP " + std::to_string(res->status));
  return res->body;
}

// Chat-completions client: one user message per call.
class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(Endpoint ep) : ep_(std::move(ep)) {}

  std::string generate(std::string_view prompt) override {
    auto body = post_json(ep_, build_chat_request(ep_.model, prompt, ep_.temperature), ErrorCode::GeneratorError);
    return parse_chat_response(body);
  }

  std::string name() const override { return "remote:" + ep_.model; }

 private:
  Endpoint ep_;
};

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(Endpoint ep) : ep_(std::move(ep)) {}

  Embedding embed(std::string_view text) override {
    if (util::trim(text).empty()) throw Error(ErrorCode::PreconditionViolated, "cannot embed empty text");
    auto body = post_json(ep_, build_embedding_request(ep_.model, text), ErrorCode::EmbedderError);
    return parse_embedding_response(body);
  }

  std::string name() const override { return "remote:" + ep_.model; }

 private:
  Endpoint ep_;
};

}  // namespace deme::net

#pragma once

// Chat-completions backend speaking the OpenAI-compatible wire format:
// POST {base_url}/v1/chat/completions with a bearer token taken from the
// environment. Kept in its own header so hermetic builds and tests can
// avoid pulling in the HTTP client.

#include <cstdlib>
#include <optional>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "recover/proposer.hpp"

namespace recover {

struct RemoteBackendConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model;
  double temperature = 0.0;
  std::string api_key_env = "RECOVER_API_KEY";
  int timeout_sec = 120;
};

class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteBackendConfig config) : config_(std::move(config)) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key != nullptr) api_key_ = key;
  }

  bool has_api_key() const { return !api_key_.empty(); }

  BackendResult complete(const std::string& prompt) override {
    BackendResult result;

    nlohmann::json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::json::array({nlohmann::json{
        {"role", "user"}, {"content", prompt}}});
    body["temperature"] = config_.temperature;

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_sec, 0);
    client.set_read_timeout(config_.timeout_sec, 0);
    if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);

    auto res = client.Post(config_.path, body.dump(), "application/json");
    if (!res) {
      result.retryable = true;
      result.error = "transport error: " + httplib::to_string(res.error());
      return result;
    }
    if (res->status == 429 || res->status >= 500) {
      result.retryable = true;
      result.error = "http status " + std::to_string(res->status);
      return result;
    }
    if (res->status < 200 || res->status >= 300) {
      result.error = "http status " + std::to_string(res->status) + ": " + res->body;
      return result;
    }

    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) {
      result.error = "response body is not JSON";
      return result;
    }
    try {
      result.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      result.error = "response missing choices[0].message.content";
      return result;
    }
    if (j.contains("usage") && j["usage"].is_object()) {
      const auto& u = j["usage"];
      if (u.contains("prompt_tokens") && u["prompt_tokens"].is_number_integer()) {
        result.prompt_tokens = u["prompt_tokens"].get<long>();
      }
      if (u.contains("completion_tokens") && u["completion_tokens"].is_number_integer()) {
        result.completion_tokens = u["completion_tokens"].get<long>();
      }
    }
    result.ok = true;
    return result;
  }

  std::string name() const override { return "remote:" + config_.model; }

 private:
  RemoteBackendConfig config_;
  std::string api_key_;
};

}  // namespace recover

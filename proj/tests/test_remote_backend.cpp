// Wire-format test against a local HTTP server: the backend must POST an
// OpenAI-compatible chat-completions body with a bearer token and read
// choices[0].message.content back.

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "recover/remote_backend.hpp"

using namespace recover;

namespace {

struct LocalServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit LocalServer() {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                               httplib::Response& res) {
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      ++hits;
      if (fail_next > 0) {
        --fail_next;
        res.status = 500;
        res.set_content("overloaded", "text/plain");
        return;
      }
      nlohmann::json reply;
      reply["choices"] = nlohmann::json::array(
          {nlohmann::json{{"message", nlohmann::json{{"role", "assistant"},
                                                     {"content", content}}}}});
      reply["usage"] = nlohmann::json{{"prompt_tokens", 42}, {"completion_tokens", 7}};
      res.set_content(reply.dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this]() { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~LocalServer() {
    server.stop();
    thread.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port); }

  std::string last_body;
  std::string last_auth;
  std::string content = R"({"edits": []})";
  std::atomic<int> fail_next{0};
  std::atomic<int> hits{0};
};

}  // namespace

TEST_CASE("remote backend speaks the chat-completions wire format") {
  LocalServer server;
  setenv("RECOVER_API_KEY", "test-key-123", 1);

  RemoteBackendConfig config;
  config.base_url = server.base_url();
  config.model = "test-model";
  config.temperature = 0.0;
  RemoteBackend backend(config);
  REQUIRE(backend.has_api_key());

  const BackendResult r = backend.complete("fix my transcript");
  REQUIRE(r.ok);
  CHECK(r.content == R"({"edits": []})");
  CHECK(r.prompt_tokens == 42);
  CHECK(r.completion_tokens == 7);

  // request body carries model, messages and temperature, bit-exact names
  const nlohmann::json body = nlohmann::json::parse(server.last_body);
  CHECK(body.at("model") == "test-model");
  CHECK(body.at("temperature") == 0.0);
  REQUIRE(body.at("messages").is_array());
  CHECK(body.at("messages").at(0).at("role") == "user");
  CHECK(body.at("messages").at(0).at("content") == "fix my transcript");
  CHECK(server.last_auth == "Bearer test-key-123");
}

TEST_CASE("remote backend marks 5xx as retryable") {
  LocalServer server;
  setenv("RECOVER_API_KEY", "k", 1);
  RemoteBackendConfig config;
  config.base_url = server.base_url();
  config.model = "m";
  RemoteBackend backend(config);

  server.fail_next = 1;
  const BackendResult fail = backend.complete("x");
  CHECK_FALSE(fail.ok);
  CHECK(fail.retryable);

  const BackendResult ok = backend.complete("x");
  CHECK(ok.ok);
}

TEST_CASE("remote backend integrates with propose retries") {
  LocalServer server;
  setenv("RECOVER_API_KEY", "k", 1);
  RemoteBackendConfig config;
  config.base_url = server.base_url();
  config.model = "m";
  RemoteBackend backend(config);

  server.fail_next = 2;
  ProposerRequest req;
  req.mode = ProposerMode::Correct;
  req.transcripts = {"some transcript"};
  const ProposeResult r = propose(backend, req, RetryPolicy{3, 0});
  CHECK(r.backend_ok);
  CHECK(r.attempts == 3);
  CHECK(server.hits == 3);
}

TEST_CASE("remote backend reports a transport error as retryable") {
  setenv("RECOVER_API_KEY", "k", 1);
  RemoteBackendConfig config;
  config.base_url = "http://127.0.0.1:1";  // nothing listens here
  config.model = "m";
  config.timeout_sec = 1;
  RemoteBackend backend(config);
  const BackendResult r = backend.complete("x");
  CHECK_FALSE(r.ok);
  CHECK(r.retryable);
}

TEST_CASE("remote backend without the env key reports no key") {
  unsetenv("RECOVER_API_KEY");
  RemoteBackendConfig config;
  config.model = "m";
  RemoteBackend backend(config);
  CHECK_FALSE(backend.has_api_key());
}

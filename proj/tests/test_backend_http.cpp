#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "prefforge/http_backend.hpp"
#include "prefforge/tokenizer_stub.hpp"

using namespace prefforge;
using json = nlohmann::json;

namespace {

// In-process OpenAI-compatible endpoint with a scripted handler.
class TestServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit TestServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      ++hits_;
      handler_(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~TestServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int hits() const { return hits_; }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::thread thread_;
};

json ok_payload(const std::vector<std::string>& texts, bool with_usage = true,
                const std::string& finish_reason = "stop") {
  json choices = json::array();
  for (const auto& text : texts) {
    choices.push_back({{"message", {{"role", "assistant"}, {"content", text}}},
                       {"finish_reason", finish_reason}});
  }
  json payload{{"choices", choices}};
  if (with_usage) payload["usage"] = {{"prompt_tokens", 111}, {"completion_tokens", 222}};
  return payload;
}

HttpBackendConfig test_config(const TestServer& server) {
  HttpBackendConfig cfg;
  cfg.base_url = server.base_url();
  cfg.model = "test-model";
  cfg.api_key = "test-key";
  cfg.max_attempts = 3;
  cfg.backoff_base_ms = 1;
  cfg.timeout_s = 5.0;
  return cfg;
}

BackendRequest simple_request(int n = 1) {
  BackendRequest request;
  request.messages = {{Role::system, "You solve math problems."}, {Role::user, "What is 2 + 2?"}};
  request.params.temperature = 0.7;
  request.params.top_p = 0.9;
  request.params.max_tokens = 128;
  request.params.n = n;
  return request;
}

}  // namespace

TEST_CASE("complete posts the OpenAI-compatible body and parses the reply") {
  json seen_body;
  std::string seen_auth;
  TestServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_body = json::parse(req.body);
    seen_auth = req.get_header_value("Authorization");
    res.set_content(ok_payload({"four", "it is 4"}).dump(), "application/json");
  });
  HttpBackend backend(test_config(server));

  auto resp = backend.complete(simple_request(2));
  REQUIRE(resp.choices.size() == 2);
  CHECK(resp.choices[0] == "four");
  CHECK(resp.choices[1] == "it is 4");
  CHECK(resp.prompt_tokens == 111);
  CHECK(resp.output_tokens == 222);
  CHECK(resp.choice_output_tokens[0] == 1);
  CHECK(resp.choice_output_tokens[1] == 3);
  CHECK_FALSE(resp.truncated[0]);

  CHECK(seen_auth == "Bearer test-key");
  CHECK(seen_body["model"] == "test-model");
  CHECK(seen_body["temperature"] == 0.7);
  CHECK(seen_body["top_p"] == 0.9);
  CHECK(seen_body["max_tokens"] == 128);
  CHECK(seen_body["n"] == 2);
  REQUIRE(seen_body["messages"].size() == 2);
  CHECK(seen_body["messages"][0]["role"] == "system");
  CHECK(seen_body["messages"][1]["content"] == "What is 2 + 2?");
  CHECK_FALSE(seen_body.contains("top_k"));
}

TEST_CASE("transient 500s are retried until success") {
  std::atomic<int> failures{2};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    if (failures-- > 0) {
      res.status = 500;
      res.set_content("server error", "text/plain");
      return;
    }
    res.set_content(ok_payload({"recovered"}).dump(), "application/json");
  });
  HttpBackend backend(test_config(server));
  auto resp = backend.complete(simple_request());
  CHECK(resp.choices[0] == "recovered");
  CHECK(server.hits() == 3);
}

TEST_CASE("429 is treated as transient") {
  std::atomic<int> failures{1};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    if (failures-- > 0) {
      res.status = 429;
      return;
    }
    res.set_content(ok_payload({"after backoff"}).dump(), "application/json");
  });
  HttpBackend backend(test_config(server));
  CHECK(backend.complete(simple_request()).choices[0] == "after backoff");
}

TEST_CASE("persistent failures error after the attempt limit") {
  TestServer server([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  HttpBackend backend(test_config(server));
  CHECK_THROWS_AS(backend.complete(simple_request()), BackendError);
  CHECK(server.hits() == 3);
}

TEST_CASE("auth failures are not retried") {
  TestServer server([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  HttpBackend backend(test_config(server));
  CHECK_THROWS_WITH_AS(backend.complete(simple_request()),
                       doctest::Contains("authentication"), BackendError);
  CHECK(server.hits() == 1);
}

TEST_CASE("a missing API key fails before any request") {
  TestServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(ok_payload({"x"}).dump(), "application/json");
  });
  auto cfg = test_config(server);
  cfg.api_key = "";
  unsetenv(kApiKeyEnvVar);
  HttpBackend backend(cfg);
  CHECK_THROWS_WITH_AS(backend.complete(simple_request()), doctest::Contains("API key"),
                       BackendError);
  CHECK(server.hits() == 0);
}

TEST_CASE("the API key falls back to the environment variable") {
  std::string seen_auth;
  TestServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    res.set_content(ok_payload({"x"}).dump(), "application/json");
  });
  auto cfg = test_config(server);
  cfg.api_key = "";
  setenv(kApiKeyEnvVar, "env-secret", 1);
  HttpBackend backend(cfg);
  backend.complete(simple_request());
  CHECK(seen_auth == "Bearer env-secret");
  unsetenv(kApiKeyEnvVar);
}

TEST_CASE("malformed payloads are rejected without retries") {
  TestServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json at all", "application/json");
  });
  HttpBackend backend(test_config(server));
  CHECK_THROWS_WITH_AS(backend.complete(simple_request()), doctest::Contains("malformed"),
                       BackendError);
  CHECK(server.hits() == 1);
}

TEST_CASE("a short choice list is a malformed payload") {
  TestServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(ok_payload({"only one"}).dump(), "application/json");
  });
  HttpBackend backend(test_config(server));
  CHECK_THROWS_AS(backend.complete(simple_request(3)), BackendError);
}

TEST_CASE("length-stopped choices are flagged truncated") {
  TestServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(ok_payload({"cut off mid"}, true, "length").dump(), "application/json");
  });
  HttpBackend backend(test_config(server));
  auto resp = backend.complete(simple_request());
  REQUIRE(resp.truncated.size() == 1);
  CHECK(resp.truncated[0]);
}

TEST_CASE("missing usage falls back to stub token counts") {
  TestServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(ok_payload({"three words here"}, false).dump(), "application/json");
  });
  HttpBackend backend(test_config(server));
  auto request = simple_request();
  auto resp = backend.complete(request);
  long expected_prompt = 0;
  for (const auto& m : request.messages) expected_prompt += stub_token_count(m.content);
  CHECK(resp.prompt_tokens == expected_prompt);
  CHECK(resp.output_tokens == 3);
}

TEST_CASE("top_k is sent only when the backend is marked as supporting it") {
  json seen_body;
  TestServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_body = json::parse(req.body);
    res.set_content(ok_payload({"x"}).dump(), "application/json");
  });

  auto request = simple_request();
  request.params.top_k = 50;
  {
    HttpBackend backend(test_config(server));
    backend.complete(request);
    CHECK_FALSE(seen_body.contains("top_k"));
  }
  {
    auto cfg = test_config(server);
    cfg.send_top_k = true;
    HttpBackend backend(cfg);
    backend.complete(request);
    CHECK(seen_body["top_k"] == 50);
  }
}

TEST_CASE("score_reward parses a scalar from the reward endpoint") {
  json seen_body;
  TestServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_body = json::parse(req.body);
    res.set_content(ok_payload({"0.87"}).dump(), "application/json");
  });
  auto cfg = test_config(server);
  cfg.reward_model = "reward-model";
  HttpBackend backend(cfg);
  double reward = backend.score_reward("What is 2 + 2?", "Final Answer: 4");
  CHECK(reward == doctest::Approx(0.87));
  CHECK(seen_body["model"] == "reward-model");
  CHECK(seen_body["messages"][0]["role"] == "user");
  CHECK(seen_body["messages"][1]["role"] == "assistant");
  CHECK(seen_body["temperature"] == 0.0);
}

TEST_CASE("non-numeric reward replies are rejected") {
  TestServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(ok_payload({"great answer!"}).dump(), "application/json");
  });
  HttpBackend backend(test_config(server));
  CHECK_THROWS_AS(backend.score_reward("p", "r"), BackendError);
}

TEST_CASE("config validation and URL parsing") {
  HttpBackendConfig no_scheme;
  no_scheme.base_url = "localhost:8080";
  no_scheme.model = "m";
  CHECK_THROWS_AS(HttpBackend{no_scheme}, std::invalid_argument);

  HttpBackendConfig empty_url;
  empty_url.model = "m";
  CHECK_THROWS_AS(HttpBackend{empty_url}, std::invalid_argument);

  HttpBackendConfig no_model;
  no_model.base_url = "http://localhost:1";
  CHECK_THROWS_AS(HttpBackend{no_model}, std::invalid_argument);
}

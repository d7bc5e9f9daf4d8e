#include "prefforge/http_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "prefforge/rng.hpp"
#include "prefforge/tokenizer_stub.hpp"

namespace prefforge {

namespace {

using json = nlohmann::json;

bool is_transient_status(int status) { return status == 429 || (status >= 500 && status < 600); }

struct SplitUrl {
  std::string origin;
  std::string path_prefix;
};

SplitUrl split_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("base URL must include a scheme: " + base_url);
  }
  auto path_start = base_url.find('/', scheme_end + 3);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = base_url;
  } else {
    out.origin = base_url.substr(0, path_start);
    out.path_prefix = base_url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  return out;
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : cfg_(std::move(config)) {
  if (cfg_.base_url.empty()) throw std::invalid_argument("http backend requires a base URL");
  if (cfg_.model.empty()) throw std::invalid_argument("http backend requires a model name");
  if (cfg_.api_key.empty()) {
    if (const char* env = std::getenv(kApiKeyEnvVar)) cfg_.api_key = env;
  }
  SplitUrl split = split_base_url(cfg_.base_url);
  origin_ = split.origin;
  path_prefix_ = split.path_prefix;
}

std::string HttpBackend::post_with_retries(const std::string& body_json) {
  if (cfg_.api_key.empty()) {
    throw BackendError(std::string("missing API key: set ") + kApiKeyEnvVar +
                       " or pass --api-key");
  }
  const std::string path = path_prefix_ + "/chat/completions";
  httplib::Headers headers = {{"Authorization", "Bearer " + cfg_.api_key}};

  DetRng jitter(KeyHash().add(body_json).add("retry-jitter").value());
  std::string last_error;
  for (int attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
    if (attempt > 0) {
      long delay = cfg_.backoff_base_ms << (attempt - 1);
      delay = std::min<long>(delay, cfg_.backoff_cap_ms);
      delay += static_cast<long>(jitter.next_below(
          static_cast<std::uint64_t>(std::max(cfg_.backoff_base_ms / 2, 1))));
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }

    // httplib clients are not thread-safe; one per call keeps the backend
    // shareable across workers.
    httplib::Client client(origin_);
    client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_write_timeout(std::chrono::duration<double>(cfg_.timeout_s));

    auto result = client.Post(path, headers, body_json, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 200 && result->status < 300) return result->body;
    if (result->status == 401 || result->status == 403) {
      throw BackendError("authentication failed (HTTP " + std::to_string(result->status) +
                         "): check " + kApiKeyEnvVar);
    }
    if (is_transient_status(result->status)) {
      last_error = "HTTP " + std::to_string(result->status);
      continue;
    }
    throw BackendError("HTTP " + std::to_string(result->status) + ": " + result->body);
  }
  throw BackendError("request failed after " + std::to_string(cfg_.max_attempts) +
                     " attempts; last error: " + last_error);
}

BackendResponse HttpBackend::complete(const BackendRequest& request) {
  log_call(request.purpose);
  request.validate();

  json body;
  body["model"] = cfg_.model;
  body["messages"] = json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
  }
  body["temperature"] = request.params.temperature;
  body["top_p"] = request.params.top_p;
  body["max_tokens"] = request.params.max_tokens;
  body["n"] = request.params.n;
  if (request.params.top_k) {
    if (cfg_.send_top_k) {
      body["top_k"] = *request.params.top_k;
    } else if (!warned_top_k_) {
      warned_top_k_ = true;
      std::cerr << "warning: backend does not accept top_k; dropping it\n";
    }
  }

  std::string reply = post_with_retries(body.dump());
  json parsed = json::parse(reply, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("choices") || !parsed["choices"].is_array()) {
    throw BackendError("malformed upstream payload: no choices array");
  }

  BackendResponse resp;
  long stub_total = 0;
  for (const auto& choice : parsed["choices"]) {
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string()) {
      throw BackendError("malformed upstream payload: choice without message content");
    }
    std::string text = choice["message"]["content"].get<std::string>();
    long tokens = stub_token_count(text);
    stub_total += tokens;
    resp.choice_output_tokens.push_back(tokens);
    // A length-stop means the completion was cut off; downstream parsing
    // treats flagged completions as malformed rather than silently truncated.
    resp.truncated.push_back(choice.value("finish_reason", "") == "length");
    resp.choices.push_back(std::move(text));
  }
  if (static_cast<int>(resp.choices.size()) != request.params.n) {
    throw BackendError("upstream returned " + std::to_string(resp.choices.size()) +
                       " choices, expected " + std::to_string(request.params.n));
  }

  // Budget accounting prefers upstream-reported usage, falling back to the
  // whitespace tokenizer stub.
  if (parsed.contains("usage") && parsed["usage"].is_object()) {
    const auto& usage = parsed["usage"];
    resp.prompt_tokens = usage.value("prompt_tokens", 0L);
    resp.output_tokens = usage.value("completion_tokens", stub_total);
  } else {
    long prompt = 0;
    for (const auto& m : request.messages) prompt += stub_token_count(m.content);
    resp.prompt_tokens = prompt;
    resp.output_tokens = stub_total;
  }
  return resp;
}

double HttpBackend::score_reward(const std::string& prompt, const std::string& response) {
  if (prompt.empty() || response.empty()) {
    throw BackendError("score_reward requires nonempty prompt and response");
  }
  log_call(Purpose::reward);

  json body;
  body["model"] = cfg_.reward_model.empty() ? cfg_.model : cfg_.reward_model;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}},
                                  {{"role", "assistant"}, {"content", response}}});
  body["temperature"] = 0.0;
  body["max_tokens"] = 16;
  body["n"] = 1;

  std::string reply = post_with_retries(body.dump());
  json parsed = json::parse(reply, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty()) {
    throw BackendError("malformed reward payload: no choices");
  }
  const auto& first = parsed["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content")) {
    throw BackendError("malformed reward payload: choice without message content");
  }
  std::string content = first["message"]["content"].get<std::string>();
  char* end = nullptr;
  double value = std::strtod(content.c_str(), &end);
  if (end == content.c_str()) {
    throw BackendError("reward reply is not a scalar: " + content);
  }
  return value;
}

}  // namespace prefforge

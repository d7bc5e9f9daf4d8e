#pragma once

#include <atomic>
#include <string>

#include "prefforge/backend.hpp"

namespace prefforge {

inline constexpr const char* kApiKeyEnvVar = "PREFFORGE_API_KEY";

struct HttpBackendConfig {
  std::string base_url;  // e.g. "https://api.example.com/v1"
  std::string model;
  std::string reward_model;  // defaults to `model` when empty
  std::string api_key;       // resolved from PREFFORGE_API_KEY when empty
  int max_attempts = 3;
  int backoff_base_ms = 500;
  int backoff_cap_ms = 10000;
  double timeout_s = 120.0;
  // OpenAI-compatible endpoints differ on top_k support; when false the
  // parameter is dropped with a one-time warning instead of sent.
  bool send_top_k = false;
};

// OpenAI-compatible chat-completions client. Transient failures (transport
// errors, 429, 5xx) are retried with capped exponential backoff and jitter up
// to max_attempts; auth and malformed-payload failures are not retried.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  BackendResponse complete(const BackendRequest& request) override;
  double score_reward(const std::string& prompt, const std::string& response) override;

  const HttpBackendConfig& config() const { return cfg_; }

 private:
  std::string post_with_retries(const std::string& body_json);

  HttpBackendConfig cfg_;
  std::string origin_;       // scheme://host[:port]
  std::string path_prefix_;  // e.g. "/v1"
  std::atomic<bool> warned_top_k_{false};
};

}  // namespace prefforge

#include "prefforge/backend.hpp"

#include <numeric>

namespace prefforge {

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::baseline: return "baseline";
    case Strategy::cot: return "cot";
    case Strategy::mcts: return "mcts";
    case Strategy::dts: return "dts";
  }
  return "baseline";
}

Strategy strategy_from_name(std::string_view name) {
  if (name == "baseline") return Strategy::baseline;
  if (name == "cot") return Strategy::cot;
  if (name == "mcts") return Strategy::mcts;
  if (name == "dts") return Strategy::dts;
  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

void GenerationParams::validate() const {
  if (temperature < 0) throw std::invalid_argument("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("top_p must be in (0, 1]");
  if (top_k && *top_k <= 0) throw std::invalid_argument("top_k must be positive");
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role role_from_name(std::string_view name) {
  if (name == "system") return Role::system;
  if (name == "user") return Role::user;
  if (name == "assistant") return Role::assistant;
  throw std::invalid_argument("unknown role: " + std::string(name));
}

std::string_view purpose_name(Purpose purpose) {
  switch (purpose) {
    case Purpose::generate: return "generate";
    case Purpose::thought: return "thought";
    case Purpose::solution: return "solution";
    case Purpose::mcts_actions: return "mcts_actions";
    case Purpose::mcts_apply: return "mcts_apply";
    case Purpose::mcts_eval: return "mcts_eval";
    case Purpose::reward: return "reward";
    case Purpose::judge: return "judge";
  }
  return "generate";
}

Purpose purpose_from_name(std::string_view name) {
  for (int i = 0; i < kPurposeCount; ++i) {
    auto p = static_cast<Purpose>(i);
    if (purpose_name(p) == name) return p;
  }
  throw std::invalid_argument("unknown purpose: " + std::string(name));
}

void BackendRequest::validate() const {
  params.validate();
  if (messages.empty()) throw std::invalid_argument("request has no messages");
  if (messages.front().role == Role::assistant) {
    throw std::invalid_argument("first message must be system or user");
  }
  for (const auto& m : messages) {
    if (m.role != Role::assistant && m.content.empty()) {
      throw std::invalid_argument("system/user message content must be nonempty");
    }
  }
}

long Backend::calls_total() const {
  std::lock_guard<std::mutex> lock(mu_);
  return std::accumulate(counts_.begin(), counts_.end(), 0L);
}

long Backend::calls_for(Purpose purpose) const {
  std::lock_guard<std::mutex> lock(mu_);
  return counts_[static_cast<int>(purpose)];
}

void Backend::reset_call_log() {
  std::lock_guard<std::mutex> lock(mu_);
  counts_.fill(0);
}

void Backend::log_call(Purpose purpose) {
  std::lock_guard<std::mutex> lock(mu_);
  ++counts_[static_cast<int>(purpose)];
}

}  // namespace prefforge

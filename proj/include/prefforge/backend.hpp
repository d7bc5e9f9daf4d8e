#pragma once

#include <array>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "prefforge/completion.hpp"

namespace prefforge {

enum class Role { system, user, assistant };

std::string_view role_name(Role role);
Role role_from_name(std::string_view name);

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

enum class Purpose {
  generate,
  thought,
  solution,
  mcts_actions,
  mcts_apply,
  mcts_eval,
  reward,
  judge,
};
inline constexpr int kPurposeCount = 8;

std::string_view purpose_name(Purpose purpose);
Purpose purpose_from_name(std::string_view name);

struct BackendRequest {
  std::vector<ChatMessage> messages;
  GenerationParams params;
  Purpose purpose = Purpose::generate;

  void validate() const;
};

struct BackendResponse {
  std::vector<std::string> choices;        // length == params.n
  long prompt_tokens = 0;                  // for the whole request, once
  long output_tokens = 0;                  // summed over choices
  std::vector<long> choice_output_tokens;  // per choice
  std::vector<bool> truncated;             // per choice: upstream length-stop
};

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One backend call as recorded by a strategy; the unit of token accounting.
struct CallRecord {
  std::string problem_id;
  Strategy strategy = Strategy::baseline;
  Purpose purpose = Purpose::generate;
  int seq = 0;  // per-problem call ordinal
  long prompt_tokens = 0;
  long output_tokens = 0;

  bool operator==(const CallRecord&) const = default;
};

// Completion provider. Implementations must be safely shareable across
// concurrent workers; each call is independent.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendResponse complete(const BackendRequest& request) = 0;

  // Pointwise reward for (prompt, response).
  virtual double score_reward(const std::string& prompt, const std::string& response) = 0;

  long calls_total() const;
  long calls_for(Purpose purpose) const;
  void reset_call_log();

 protected:
  void log_call(Purpose purpose);

 private:
  mutable std::mutex mu_;
  std::array<long, kPurposeCount> counts_{};
};

}  // namespace prefforge

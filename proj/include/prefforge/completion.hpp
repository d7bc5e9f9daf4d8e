#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prefforge {

enum class Strategy { baseline, cot, mcts, dts };

std::string_view strategy_name(Strategy s);
Strategy strategy_from_name(std::string_view name);

struct GenerationParams {
  double temperature = 0.7;
  double top_p = 1.0;
  std::optional<int> top_k;
  int max_tokens = 1024;
  int n = 1;

  void validate() const;
};

// Flag names attached to completions.
inline constexpr std::string_view kFlagMalformedTags = "malformed_tags";
inline constexpr std::string_view kFlagTruncated = "truncated";
inline constexpr std::string_view kFlagEvalDefault = "eval_default";
inline constexpr std::string_view kFlagSolutionError = "solution_error";

struct Completion {
  std::string problem_id;
  Strategy strategy = Strategy::baseline;
  int index = 0;
  std::optional<std::string> thought;  // present iff strategy == dts
  std::string text;
  long prompt_tokens = 0;
  long output_tokens = 0;
  std::vector<std::string> flags;

  bool has_flag(std::string_view flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
  }
  void add_flag(std::string_view flag) {
    if (!has_flag(flag)) flags.emplace_back(flag);
  }

  bool operator==(const Completion&) const = default;
};

struct ScoredCompletion {
  Completion completion;
  double reward = 0.0;
  bool correct = false;
  std::optional<int> judge_score;  // -1 sentinel or [0, 100]
  bool excluded = false;

  bool operator==(const ScoredCompletion&) const = default;
};

struct PreferencePair {
  std::string problem_id;
  std::string prompt;         // plain problem query
  std::string system_prompt;  // strategy system prompt, may be empty
  std::string chosen;
  std::string rejected;
  Strategy strategy = Strategy::baseline;
  double chosen_reward = 0.0;
  double rejected_reward = 0.0;

  bool operator==(const PreferencePair&) const = default;
};

}  // namespace prefforge

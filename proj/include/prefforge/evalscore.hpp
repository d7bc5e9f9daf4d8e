#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prefforge/backend.hpp"
#include "prefforge/canonical_number.hpp"
#include "prefforge/problem.hpp"

namespace prefforge {

// Last "Final Answer:" marker (case-insensitive) wins; the numeric token after
// it is normalized (strip "$", ",", trailing "."). Falls back to the last
// standalone numeric token in the text; nullopt when no number exists.
std::optional<CanonicalNumber> extract_final_answer(const std::string& text);

// Missing answer is incorrect by convention.
bool check_correct(const std::optional<CanonicalNumber>& answer, const CanonicalNumber& gold);

struct JudgeVerdict {
  bool correct = false;
  int score = -1;  // -1 sentinel iff parse failed, else [0, 100]
  std::string explanation;

  bool excluded() const { return score == -1; }
};

extern const std::string kJudgePromptTemplate;  // {question}, {gold_answer}, {generated_answer}

std::string render_judge_prompt(const MathProblem& problem, const std::string& answer_text);

// Never throws on arbitrary text: the last brace-delimited JSON object
// carrying boolean "correct" and integer "score" in [0,100] wins; anything
// else yields the -1 sentinel.
JudgeVerdict parse_judge_reply(const std::string& reply);

JudgeVerdict judge(const MathProblem& problem, const std::string& answer_text, Backend& backend);

enum class CorrectnessMode { answer_match, judge };

CorrectnessMode correctness_mode_from_name(std::string_view name);
std::string_view correctness_mode_name(CorrectnessMode mode);

struct ScoreOutcome {
  std::vector<ScoredCompletion> scored;
  long excluded = 0;  // judge-mode -1 verdicts, dropped from `scored`
};

ScoreOutcome score_completions(const std::vector<Completion>& completions,
                               const std::map<std::string, MathProblem>& problems,
                               Backend& backend, CorrectnessMode mode, unsigned concurrency = 1);

struct RewardEvalItem {
  bool model_correct = false;
  double model_reward = 0.0;
  double gt_reward = 0.0;
};

struct RewardEvalCounts {
  long cl = 0;
  long ch = 0;
  long il = 0;
  long ih = 0;

  long total() const { return cl + ch + il + ih; }
  // ih / total; nullopt when empty. Zero iff ih == 0.
  std::optional<double> error_rate() const;
};

// Partition: correct & reward > gt -> CH; correct & <= -> CL; incorrect & >
// -> IH; incorrect & <= -> IL. Ties count as "lower".
RewardEvalCounts eval_reward_model(std::span<const RewardEvalItem> items);

}  // namespace prefforge

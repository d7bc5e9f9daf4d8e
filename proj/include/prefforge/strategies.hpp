#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prefforge/backend.hpp"
#include "prefforge/problem.hpp"

namespace prefforge {

struct MctsConfig {
  double exploration_weight = 0.2;
  int num_simulations = 2;
  int simulation_depth = 1;
  int actions_per_expansion = 5;

  void validate() const;
};

struct StrategyConfig {
  Strategy strategy = Strategy::baseline;
  int n_completions = 5;
  GenerationParams params;
  std::optional<MctsConfig> mcts;

  // Per-strategy defaults: baseline temperature 2 / top_p 0.75 / top_k 50,
  // cot and mcts temperature 0.7, all with max_tokens 1024.
  static StrategyConfig defaults(Strategy strategy);

  void validate() const;
};

// Prompt texts. The baseline system prompt and the dts templates are the
// generation contract; downstream parsing depends on their exact wording.
extern const std::string kBaselineSystemPrompt;
extern const std::string kCotSystemPrompt;
extern const std::string kMctsSystemPrompt;
extern const std::string kMctsProposeMessage;
extern const std::string kMctsApplyMessage;
extern const std::string kMctsEvalMessage;
extern const std::string kThoughtPromptTemplate;   // {problem}
extern const std::string kSolutionPromptTemplate;  // {problem}, {approach}
extern const std::string kDtsSolutionErrorText;

std::string dts_padding_thought(int k);  // "Alternative approach <k>: ..."
std::string dts_default_thought(int k);  // "Default approach <k>: ..."

std::string render_thought_prompt(const std::string& problem);
std::string render_solution_prompt(const std::string& problem, const std::string& approach);

// System prompt stored alongside exported pairs; empty for dts, whose
// instructions live in the user-turn templates.
std::string system_prompt_for(Strategy strategy);

struct StrategyOutput {
  std::vector<Completion> completions;
  std::vector<CallRecord> calls;
};

StrategyOutput generate_baseline(const MathProblem& problem, const StrategyConfig& cfg,
                                 Backend& backend);
StrategyOutput generate_cot(const MathProblem& problem, const StrategyConfig& cfg,
                            Backend& backend);
StrategyOutput generate_mcts(const MathProblem& problem, const StrategyConfig& cfg,
                             Backend& backend);
StrategyOutput generate_dts(const MathProblem& problem, const StrategyConfig& cfg,
                            Backend& backend);
StrategyOutput generate_completions(const MathProblem& problem, const StrategyConfig& cfg,
                                    Backend& backend);

// --- cot helpers ---

struct TagExtract {
  std::string text;
  bool malformed = false;
};

// Content of the last complete <output>...</output> span (left-to-right,
// non-overlapping scan); the raw text with malformed=true when no complete
// span exists.
TagExtract extract_output_section(const std::string& raw);

// --- dts helpers ---

// Splits a reply on the numbered-list pattern: "<digits>." anywhere or
// "\n<digits>)". Pieces are trimmed; empties dropped.
std::vector<std::string> split_numbered_items(const std::string& reply);

// --- mcts ---

struct MctsNode {
  std::vector<ChatMessage> state;  // dialogue up to and including this node
  std::string candidate_text;      // empty at root
  int visits = 0;
  double value_sum = 0.0;
  int gen_order = -1;  // creation sequence among candidates; -1 at root
  bool eval_defaulted = false;
  long prompt_tokens = 0;  // of the call that produced candidate_text
  long output_tokens = 0;
  MctsNode* parent = nullptr;
  std::vector<std::unique_ptr<MctsNode>> children;

  double mean_value() const { return value_sum / static_cast<double>(std::max(visits, 1)); }
};

// UCT descent: unvisited children first (lowest gen_order), otherwise
// argmax of value_sum/visits + c*sqrt(ln(parent.visits)/visits), at most
// max_depth levels below `root`.
MctsNode* select_uct(MctsNode& root, double exploration_weight, int max_depth);

struct EvalScore {
  double value = 0.5;
  bool defaulted = false;
};

// First decimal in [0,1] from the reply; else first integer in [0,100]
// divided by 100; else 0.5 with defaulted=true.
EvalScore parse_eval_score(const std::string& reply);

struct MctsRunResult {
  std::unique_ptr<MctsNode> root;
  StrategyOutput output;
};

// Full search, exposing the tree for inspection. Backend call pattern is
// fixed at 4 calls per simulation (1 actions + 1 apply + 2 eval).
MctsRunResult run_mcts(const MathProblem& problem, const StrategyConfig& cfg, Backend& backend);

}  // namespace prefforge

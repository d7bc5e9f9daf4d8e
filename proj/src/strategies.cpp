#include "prefforge/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <stdexcept>

namespace prefforge {

const std::string kBaselineSystemPrompt =
    "You will be given a math problem. Provide a step-by-step solution, clearly showing all "
    "calculations and reasoning. Ensure that each step is explained and justified. After your "
    "detailed solution, on a new line, give the final numerical answer in the format: 'Final "
    "Answer: [number]'. Do not include any units in the final answer. Double-check your "
    "calculations to ensure accuracy.";

const std::string kCotSystemPrompt =
    "You are solving a math problem. First reason through the problem step by step inside "
    "<thinking> tags. Then review that reasoning for mistakes inside <reflection> tags. "
    "Finally, write the complete corrected solution inside <output> tags, ending with a line in "
    "the format 'Final Answer: [number]'. Every response must contain all three sections in "
    "that order.";

const std::string kMctsSystemPrompt =
    "You are a mathematical problem solver. Work through the problem systematically, showing "
    "every step of your reasoning and all calculations. Finish with a line in the format "
    "'Final Answer: [number]'.";

const std::string kMctsProposeMessage =
    "Propose a different complete solution to the problem above. Show your work and end with a "
    "line in the format 'Final Answer: [number]'.";

const std::string kMctsApplyMessage =
    "Rewrite the draft solution above as a clean, complete solution. Keep the same final answer "
    "and end with a line in the format 'Final Answer: [number]'.";

const std::string kMctsEvalMessage =
    "Rate the quality and likely correctness of the solution above on a scale from 0 to 1. "
    "Reply with the numeric score only.";

const std::string kThoughtPromptTemplate =
    "Given the math problem: {problem}, provide 5 possible approaches or initial thoughts on "
    "how to solve it, including any relevant mathematical concepts, formulas, or techniques "
    "that may be applied. Consider multiple perspectives and potential solution paths, and "
    "describe each thought in 1-2 sentences.";

const std::string kSolutionPromptTemplate =
    "Given the math problem: {problem}\n"
    "Using this approach: {approach}\n"
    "Please provide a detailed solution showing all work and steps.";

const std::string kDtsSolutionErrorText = "Error occurred while generating solution.";

std::string dts_padding_thought(int k) {
  return "Alternative approach " + std::to_string(k) +
         ": Apply fundamental mathematical principles to solve step by step.";
}

std::string dts_default_thought(int k) {
  return "Default approach " + std::to_string(k) +
         ": Solve the problem systematically using basic mathematical principles.";
}

namespace {

std::string replace_one(std::string text, std::string_view needle, const std::string& value) {
  auto pos = text.find(needle);
  if (pos != std::string::npos) text.replace(pos, needle.size(), value);
  return text;
}

}  // namespace

std::string render_thought_prompt(const std::string& problem) {
  return replace_one(kThoughtPromptTemplate, "{problem}", problem);
}

std::string render_solution_prompt(const std::string& problem, const std::string& approach) {
  return replace_one(replace_one(kSolutionPromptTemplate, "{problem}", problem), "{approach}",
                     approach);
}

std::string system_prompt_for(Strategy strategy) {
  switch (strategy) {
    case Strategy::baseline: return kBaselineSystemPrompt;
    case Strategy::cot: return kCotSystemPrompt;
    case Strategy::mcts: return kMctsSystemPrompt;
    case Strategy::dts: return "";
  }
  return "";
}

void MctsConfig::validate() const {
  if (exploration_weight < 0) throw std::invalid_argument("exploration_weight must be >= 0");
  if (num_simulations < 1) throw std::invalid_argument("num_simulations must be >= 1");
  if (simulation_depth < 1) throw std::invalid_argument("simulation_depth must be >= 1");
  if (actions_per_expansion < 1) throw std::invalid_argument("actions_per_expansion must be >= 1");
}

StrategyConfig StrategyConfig::defaults(Strategy strategy) {
  StrategyConfig cfg;
  cfg.strategy = strategy;
  cfg.n_completions = 5;
  cfg.params.max_tokens = 1024;
  cfg.params.n = 1;
  switch (strategy) {
    case Strategy::baseline:
      cfg.params.temperature = 2.0;
      cfg.params.top_p = 0.75;
      cfg.params.top_k = 50;
      break;
    case Strategy::cot:
      cfg.params.temperature = 0.7;
      cfg.params.top_p = 1.0;
      break;
    case Strategy::mcts:
      cfg.params.temperature = 0.7;
      cfg.params.top_p = 1.0;
      cfg.mcts = MctsConfig{};
      break;
    case Strategy::dts:
      cfg.params.temperature = 0.7;
      cfg.params.top_p = 1.0;
      break;
  }
  return cfg;
}

void StrategyConfig::validate() const {
  params.validate();
  // Mixed-correctness filtering needs both classes possible.
  if (n_completions < 2) throw std::invalid_argument("n_completions must be >= 2");
  if (strategy == Strategy::mcts) {
    if (!mcts) throw std::invalid_argument("mcts strategy requires an MctsConfig");
    mcts->validate();
  }
}

namespace {

void require_choices(const BackendResponse& resp, int n) {
  if (static_cast<int>(resp.choices.size()) != n) {
    throw BackendError("backend returned " + std::to_string(resp.choices.size()) +
                       " choices, expected " + std::to_string(n));
  }
}

Completion make_completion(const MathProblem& problem, Strategy strategy, int index,
                           std::string text, long prompt_tokens, long output_tokens) {
  Completion c;
  c.problem_id = problem.id;
  c.strategy = strategy;
  c.index = index;
  c.text = std::move(text);
  c.prompt_tokens = prompt_tokens;
  c.output_tokens = output_tokens;
  return c;
}

}  // namespace

StrategyOutput generate_baseline(const MathProblem& problem, const StrategyConfig& cfg,
                                 Backend& backend) {
  if (cfg.strategy != Strategy::baseline) {
    throw std::invalid_argument("generate_baseline called with non-baseline config");
  }
  BackendRequest request;
  request.messages = {{Role::system, kBaselineSystemPrompt}, {Role::user, problem.query}};
  request.params = cfg.params;
  request.params.n = cfg.n_completions;
  request.purpose = Purpose::generate;

  BackendResponse resp = backend.complete(request);
  require_choices(resp, cfg.n_completions);

  StrategyOutput out;
  for (int i = 0; i < cfg.n_completions; ++i) {
    auto idx = static_cast<std::size_t>(i);
    Completion c = make_completion(problem, Strategy::baseline, i, resp.choices[idx],
                                   resp.prompt_tokens, resp.choice_output_tokens[idx]);
    if (idx < resp.truncated.size() && resp.truncated[idx]) c.add_flag(kFlagTruncated);
    out.completions.push_back(std::move(c));
  }
  out.calls.push_back({problem.id, Strategy::baseline, Purpose::generate, 0, resp.prompt_tokens,
                       resp.output_tokens});
  return out;
}

TagExtract extract_output_section(const std::string& raw) {
  static const std::string open = "<output>";
  static const std::string close = "</output>";
  std::optional<std::string> last_span;
  std::size_t pos = 0;
  while (true) {
    auto o = raw.find(open, pos);
    if (o == std::string::npos) break;
    auto c = raw.find(close, o + open.size());
    if (c == std::string::npos) break;
    last_span = raw.substr(o + open.size(), c - (o + open.size()));
    pos = c + close.size();
  }
  if (!last_span) return {raw, true};
  return {trim(*last_span), false};
}

StrategyOutput generate_cot(const MathProblem& problem, const StrategyConfig& cfg,
                            Backend& backend) {
  if (cfg.strategy != Strategy::cot) {
    throw std::invalid_argument("generate_cot called with non-cot config");
  }
  BackendRequest request;
  request.messages = {{Role::system, kCotSystemPrompt}, {Role::user, problem.query}};
  request.params = cfg.params;
  request.params.n = cfg.n_completions;
  request.purpose = Purpose::generate;

  BackendResponse resp = backend.complete(request);
  require_choices(resp, cfg.n_completions);

  StrategyOutput out;
  for (int i = 0; i < cfg.n_completions; ++i) {
    auto idx = static_cast<std::size_t>(i);
    TagExtract extract = extract_output_section(resp.choices[idx]);
    Completion c = make_completion(problem, Strategy::cot, i, extract.text, resp.prompt_tokens,
                                   resp.choice_output_tokens[idx]);
    if (extract.malformed) c.add_flag(kFlagMalformedTags);
    if (idx < resp.truncated.size() && resp.truncated[idx]) c.add_flag(kFlagTruncated);
    out.completions.push_back(std::move(c));
  }
  out.calls.push_back(
      {problem.id, Strategy::cot, Purpose::generate, 0, resp.prompt_tokens, resp.output_tokens});
  return out;
}

std::vector<std::string> split_numbered_items(const std::string& reply) {
  static const std::regex item_re(R"(\d+\.|\n\d+\))");
  std::vector<std::string> items;
  std::sregex_token_iterator it(reply.begin(), reply.end(), item_re, -1), end;
  for (; it != end; ++it) {
    std::string piece = trim(it->str());
    if (!piece.empty()) items.push_back(std::move(piece));
  }
  return items;
}

StrategyOutput generate_dts(const MathProblem& problem, const StrategyConfig& cfg,
                            Backend& backend) {
  if (cfg.strategy != Strategy::dts) {
    throw std::invalid_argument("generate_dts called with non-dts config");
  }
  const int target = cfg.n_completions;
  StrategyOutput out;
  int seq = 0;

  std::vector<std::string> thoughts;
  BackendRequest thought_request;
  thought_request.messages = {{Role::user, render_thought_prompt(problem.query)}};
  thought_request.params = cfg.params;
  thought_request.params.n = 1;
  thought_request.purpose = Purpose::thought;
  try {
    BackendResponse resp = backend.complete(thought_request);
    require_choices(resp, 1);
    thoughts = split_numbered_items(resp.choices.front());
    out.calls.push_back({problem.id, Strategy::dts, Purpose::thought, seq++, resp.prompt_tokens,
                         resp.output_tokens});
  } catch (const BackendError&) {
    thoughts.clear();
    for (int i = 0; i < target; ++i) thoughts.push_back(dts_default_thought(i + 1));
  }

  if (static_cast<int>(thoughts.size()) > target) {
    thoughts.resize(static_cast<std::size_t>(target));
  }
  while (static_cast<int>(thoughts.size()) < target) {
    thoughts.push_back(dts_padding_thought(static_cast<int>(thoughts.size()) + 1));
  }

  for (int i = 0; i < target; ++i) {
    const std::string& approach = thoughts[static_cast<std::size_t>(i)];
    BackendRequest request;
    request.messages = {{Role::user, render_solution_prompt(problem.query, approach)}};
    request.params = cfg.params;
    request.params.n = 1;
    request.purpose = Purpose::solution;

    Completion c;
    try {
      BackendResponse resp = backend.complete(request);
      require_choices(resp, 1);
      c = make_completion(problem, Strategy::dts, i, resp.choices.front(), resp.prompt_tokens,
                          resp.choice_output_tokens.front());
      if (!resp.truncated.empty() && resp.truncated.front()) c.add_flag(kFlagTruncated);
      out.calls.push_back({problem.id, Strategy::dts, Purpose::solution, seq++, resp.prompt_tokens,
                           resp.output_tokens});
    } catch (const BackendError&) {
      c = make_completion(problem, Strategy::dts, i, kDtsSolutionErrorText, 0, 0);
      c.add_flag(kFlagSolutionError);
    }
    c.thought = approach;
    out.completions.push_back(std::move(c));
  }
  return out;
}

MctsNode* select_uct(MctsNode& root, double exploration_weight, int max_depth) {
  MctsNode* node = &root;
  int depth = 0;
  while (depth < max_depth && !node->children.empty()) {
    MctsNode* best = nullptr;
    double best_score = -1.0;
    for (const auto& child : node->children) {
      if (child->visits == 0) {
        best = child.get();
        break;
      }
      double exploit = child->value_sum / child->visits;
      double explore = exploration_weight * std::sqrt(std::log(std::max(node->visits, 1)) /
                                                      static_cast<double>(child->visits));
      double score = exploit + explore;
      if (score > best_score) {
        best_score = score;
        best = child.get();
      }
    }
    node = best;
    ++depth;
  }
  return node;
}

EvalScore parse_eval_score(const std::string& reply) {
  static const std::regex number_re(R"([-+]?\d*\.?\d+)");
  std::optional<double> integer_fallback;
  for (auto it = std::sregex_iterator(reply.begin(), reply.end(), number_re);
       it != std::sregex_iterator(); ++it) {
    std::string token = it->str();
    double value = std::strtod(token.c_str(), nullptr);
    if (value >= 0.0 && value <= 1.0) return {value, false};
    if (!integer_fallback && token.find('.') == std::string::npos && value >= 0.0 &&
        value <= 100.0) {
      integer_fallback = value / 100.0;
    }
  }
  if (integer_fallback) return {*integer_fallback, false};
  return {0.5, true};
}

namespace {

void backpropagate(MctsNode* node, double value) {
  for (; node != nullptr; node = node->parent) {
    node->visits += 1;
    node->value_sum += value;
  }
}

void collect_candidates(MctsNode* node, std::vector<MctsNode*>& out) {
  for (const auto& child : node->children) {
    out.push_back(child.get());
    collect_candidates(child.get(), out);
  }
}

}  // namespace

MctsRunResult run_mcts(const MathProblem& problem, const StrategyConfig& cfg, Backend& backend) {
  if (cfg.strategy != Strategy::mcts || !cfg.mcts) {
    throw std::invalid_argument("generate_mcts requires an mcts config");
  }
  const MctsConfig& mc = *cfg.mcts;
  mc.validate();

  MctsRunResult run;
  run.root = std::make_unique<MctsNode>();
  run.root->state = {{Role::system, kMctsSystemPrompt}, {Role::user, problem.query}};
  int gen_counter = 0;
  int seq = 0;

  for (int sim = 0; sim < mc.num_simulations; ++sim) {
    MctsNode* leaf = select_uct(*run.root, mc.exploration_weight, mc.simulation_depth);

    // Expansion: one batched generate_actions call; every choice is a
    // complete solution draft and becomes a rankable child.
    BackendRequest actions_request;
    actions_request.messages = leaf->state;
    if (actions_request.messages.back().role == Role::assistant) {
      actions_request.messages.push_back({Role::user, kMctsProposeMessage});
    }
    actions_request.params = cfg.params;
    actions_request.params.n = mc.actions_per_expansion;
    actions_request.purpose = Purpose::mcts_actions;
    BackendResponse actions = backend.complete(actions_request);
    require_choices(actions, mc.actions_per_expansion);
    run.output.calls.push_back({problem.id, Strategy::mcts, Purpose::mcts_actions, seq++,
                                actions.prompt_tokens, actions.output_tokens});

    for (int i = 0; i < mc.actions_per_expansion; ++i) {
      auto child = std::make_unique<MctsNode>();
      child->state = actions_request.messages;
      child->state.push_back({Role::assistant, actions.choices[static_cast<std::size_t>(i)]});
      child->candidate_text = actions.choices[static_cast<std::size_t>(i)];
      child->gen_order = gen_counter++;
      child->prompt_tokens = actions.prompt_tokens;
      child->output_tokens = actions.choice_output_tokens[static_cast<std::size_t>(i)];
      child->parent = leaf;
      leaf->children.push_back(std::move(child));
    }

    // Apply: materialize the first new candidate into the dialogue.
    MctsNode* applied = leaf->children[leaf->children.size() -
                                       static_cast<std::size_t>(mc.actions_per_expansion)]
                            .get();
    BackendRequest apply_request;
    apply_request.messages = applied->state;
    apply_request.messages.push_back({Role::user, kMctsApplyMessage});
    apply_request.params = cfg.params;
    apply_request.params.n = 1;
    apply_request.purpose = Purpose::mcts_apply;
    BackendResponse applied_resp = backend.complete(apply_request);
    require_choices(applied_resp, 1);
    run.output.calls.push_back({problem.id, Strategy::mcts, Purpose::mcts_apply, seq++,
                                applied_resp.prompt_tokens, applied_resp.output_tokens});
    applied->candidate_text = applied_resp.choices.front();
    applied->state = apply_request.messages;
    applied->state.push_back({Role::assistant, applied->candidate_text});
    applied->prompt_tokens = applied_resp.prompt_tokens;
    applied->output_tokens = applied_resp.choice_output_tokens.front();

    // Evaluate the top two new states (the same one twice when only one
    // exists) and backpropagate to the root.
    std::size_t first_new = leaf->children.size() - static_cast<std::size_t>(mc.actions_per_expansion);
    MctsNode* second = leaf->children[std::min(first_new + 1, leaf->children.size() - 1)].get();
    for (MctsNode* target : {applied, second}) {
      BackendRequest eval_request;
      eval_request.messages = target->state;
      eval_request.messages.push_back({Role::user, kMctsEvalMessage});
      eval_request.params = cfg.params;
      eval_request.params.n = 1;
      eval_request.purpose = Purpose::mcts_eval;
      BackendResponse eval_resp = backend.complete(eval_request);
      require_choices(eval_resp, 1);
      run.output.calls.push_back({problem.id, Strategy::mcts, Purpose::mcts_eval, seq++,
                                  eval_resp.prompt_tokens, eval_resp.output_tokens});
      EvalScore score = parse_eval_score(eval_resp.choices.front());
      if (score.defaulted) target->eval_defaulted = true;
      backpropagate(target, score.value);
    }
  }

  std::vector<MctsNode*> candidates;
  collect_candidates(run.root.get(), candidates);
  std::stable_sort(candidates.begin(), candidates.end(), [](const MctsNode* a, const MctsNode* b) {
    if (a->mean_value() != b->mean_value()) return a->mean_value() > b->mean_value();
    if (a->visits != b->visits) return a->visits > b->visits;
    return a->gen_order < b->gen_order;
  });
  if (static_cast<int>(candidates.size()) < cfg.n_completions) {
    throw std::runtime_error("mcts produced " + std::to_string(candidates.size()) +
                             " candidates, need " + std::to_string(cfg.n_completions));
  }

  for (int i = 0; i < cfg.n_completions; ++i) {
    const MctsNode* node = candidates[static_cast<std::size_t>(i)];
    Completion c = make_completion(problem, Strategy::mcts, i, node->candidate_text,
                                   node->prompt_tokens, node->output_tokens);
    if (node->eval_defaulted) c.add_flag(kFlagEvalDefault);
    run.output.completions.push_back(std::move(c));
  }
  return run;
}

StrategyOutput generate_mcts(const MathProblem& problem, const StrategyConfig& cfg,
                             Backend& backend) {
  return run_mcts(problem, cfg, backend).output;
}

StrategyOutput generate_completions(const MathProblem& problem, const StrategyConfig& cfg,
                                    Backend& backend) {
  switch (cfg.strategy) {
    case Strategy::baseline: return generate_baseline(problem, cfg, backend);
    case Strategy::cot: return generate_cot(problem, cfg, backend);
    case Strategy::mcts: return generate_mcts(problem, cfg, backend);
    case Strategy::dts: return generate_dts(problem, cfg, backend);
  }
  throw std::invalid_argument("unknown strategy");
}

}  // namespace prefforge

#include "prefforge/accounting.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace prefforge {

namespace {

struct Tallies {
  long prompt = 0;
  long output = 0;
  std::set<std::string> problems;
};

std::map<Strategy, TokenBudget> finalize(const std::map<Strategy, Tallies>& sums) {
  std::map<Strategy, TokenBudget> budgets;
  for (const auto& [strategy, t] : sums) {
    TokenBudget budget;
    budget.strategy = strategy;
    budget.problems = static_cast<long>(t.problems.size());
    budget.mean_prompt_tokens = static_cast<double>(t.prompt) / budget.problems;
    budget.mean_output_tokens = static_cast<double>(t.output) / budget.problems;
    budgets[strategy] = budget;
  }
  return budgets;
}

}  // namespace

std::map<Strategy, TokenBudget> tally(std::span<const CallRecord> calls) {
  if (calls.empty()) throw std::invalid_argument("tally: empty call stream");
  std::map<Strategy, Tallies> sums;
  for (const auto& call : calls) {
    if (call.prompt_tokens < 0 || call.output_tokens < 0) {
      throw std::invalid_argument("tally: negative token count for problem " + call.problem_id);
    }
    auto& t = sums[call.strategy];
    t.prompt += call.prompt_tokens;
    t.output += call.output_tokens;
    t.problems.insert(call.problem_id);
  }
  return finalize(sums);
}

std::map<Strategy, TokenBudget> tally_completions(std::span<const Completion> completions) {
  if (completions.empty()) throw std::invalid_argument("tally_completions: empty stream");
  std::map<Strategy, Tallies> sums;
  for (const auto& c : completions) {
    if (c.prompt_tokens < 0 || c.output_tokens < 0) {
      throw std::invalid_argument("tally_completions: negative token count for problem " +
                                  c.problem_id);
    }
    auto& t = sums[c.strategy];
    t.prompt += c.prompt_tokens;
    t.output += c.output_tokens;
    t.problems.insert(c.problem_id);
  }
  return finalize(sums);
}

double relative_compute(const TokenBudget& budget, const TokenBudget& base) {
  double denom = base.total();
  if (denom <= 0) throw std::invalid_argument("relative_compute: zero baseline total");
  return budget.total() / denom;
}

double round2(double x) { return std::round(x * 100.0) / 100.0; }

}  // namespace prefforge

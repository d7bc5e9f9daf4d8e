#pragma once

#include <map>
#include <span>

#include "prefforge/backend.hpp"

namespace prefforge {

struct TokenBudget {
  Strategy strategy = Strategy::baseline;
  double mean_prompt_tokens = 0.0;  // per problem
  double mean_output_tokens = 0.0;
  long problems = 0;

  double total() const { return mean_prompt_tokens + mean_output_tokens; }
};

// Per-call view: each backend call contributes its prompt once plus all of
// its sampled output tokens; sums are averaged over distinct problems per
// strategy. Throws on an empty stream or a record with negative counts.
std::map<Strategy, TokenBudget> tally(std::span<const CallRecord> calls);

// Per-problem-per-completion view: sums each completion's own tallies (the
// shared prompt counted once per completion).
std::map<Strategy, TokenBudget> tally_completions(std::span<const Completion> completions);

// (t_p + t_o) / (t_p_base + t_o_base); throws when the base total is zero.
double relative_compute(const TokenBudget& budget, const TokenBudget& base);

double round2(double x);

}  // namespace prefforge

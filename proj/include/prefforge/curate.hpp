#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prefforge/completion.hpp"
#include "prefforge/problem.hpp"

namespace prefforge {

enum class RejectReason { all_correct, all_incorrect, one_correct, four_correct, missing_scores };

std::string_view reject_reason_name(RejectReason reason);

struct FilterReport {
  long problems_in = 0;
  long pairs_out = 0;
  std::map<std::string, long> rejected_reasons;

  // pairs_out / problems_in; nullopt for empty input.
  std::optional<double> rate() const;
};

struct FilterDecision {
  std::optional<PreferencePair> pair;
  std::optional<RejectReason> reason;  // set iff pair is empty
};

// Keeps a problem only when 2 or 3 of its completions are correct; chosen is
// the max-reward correct completion, rejected the max-reward incorrect one,
// ties broken by lowest completion index.
FilterDecision mixed_correctness_filter(std::span<const ScoredCompletion> group,
                                        const MathProblem& problem, int n_completions = 5);

struct BuildPairsResult {
  std::vector<PreferencePair> pairs;
  FilterReport report;
};

// Groups by problem_id, applies the filter per problem; groups with the wrong
// cardinality are rejected as missing_scores. Output sorted by problem id.
BuildPairsResult build_pairs(std::span<const ScoredCompletion> scored,
                             const std::map<std::string, MathProblem>& problems,
                             int n_completions = 5);

// Uniform subsample without replacement, seeded; result preserves the input
// order of the selected pairs.
std::vector<PreferencePair> subsample_pairs(std::span<const PreferencePair> pairs,
                                            std::size_t target, std::uint64_t seed);

}  // namespace prefforge

#include "prefforge/curate.hpp"

#include <algorithm>
#include <stdexcept>

#include "prefforge/rng.hpp"
#include "prefforge/strategies.hpp"

namespace prefforge {

std::string_view reject_reason_name(RejectReason reason) {
  switch (reason) {
    case RejectReason::all_correct: return "all_correct";
    case RejectReason::all_incorrect: return "all_incorrect";
    case RejectReason::one_correct: return "one_correct";
    case RejectReason::four_correct: return "four_correct";
    case RejectReason::missing_scores: return "missing_scores";
  }
  return "missing_scores";
}

std::optional<double> FilterReport::rate() const {
  if (problems_in == 0) return std::nullopt;
  return static_cast<double>(pairs_out) / static_cast<double>(problems_in);
}

FilterDecision mixed_correctness_filter(std::span<const ScoredCompletion> group,
                                        const MathProblem& problem, int n_completions) {
  if (static_cast<int>(group.size()) != n_completions) {
    throw std::invalid_argument("mixed_correctness_filter: expected " +
                                std::to_string(n_completions) + " completions, got " +
                                std::to_string(group.size()));
  }
  for (const auto& sc : group) {
    if (sc.completion.problem_id != group.front().completion.problem_id) {
      throw std::invalid_argument("mixed_correctness_filter: mixed problem ids in group");
    }
  }

  int correct = 0;
  for (const auto& sc : group) {
    if (sc.correct) ++correct;
  }
  if (correct != 2 && correct != 3) {
    RejectReason reason;
    if (correct == 0) {
      reason = RejectReason::all_incorrect;
    } else if (correct == n_completions) {
      reason = RejectReason::all_correct;
    } else if (correct == 1) {
      reason = RejectReason::one_correct;
    } else {
      reason = RejectReason::four_correct;
    }
    return {std::nullopt, reason};
  }

  // Argmax reward within each class; ties go to the lowest completion index.
  const ScoredCompletion* chosen = nullptr;
  const ScoredCompletion* rejected = nullptr;
  for (const auto& sc : group) {
    const ScoredCompletion*& slot = sc.correct ? chosen : rejected;
    if (!slot || sc.reward > slot->reward ||
        (sc.reward == slot->reward && sc.completion.index < slot->completion.index)) {
      slot = &sc;
    }
  }

  PreferencePair pair;
  pair.problem_id = problem.id;
  pair.prompt = problem.query;
  pair.strategy = group.front().completion.strategy;
  pair.system_prompt = system_prompt_for(pair.strategy);
  pair.chosen = chosen->completion.text;
  pair.rejected = rejected->completion.text;
  pair.chosen_reward = chosen->reward;
  pair.rejected_reward = rejected->reward;
  return {std::move(pair), std::nullopt};
}

BuildPairsResult build_pairs(std::span<const ScoredCompletion> scored,
                             const std::map<std::string, MathProblem>& problems,
                             int n_completions) {
  std::map<std::string, std::vector<const ScoredCompletion*>> groups;
  for (const auto& sc : scored) groups[sc.completion.problem_id].push_back(&sc);

  BuildPairsResult result;
  result.report.problems_in = static_cast<long>(groups.size());
  for (auto& [problem_id, members] : groups) {
    auto it = problems.find(problem_id);
    if (it == problems.end()) {
      throw std::runtime_error("scored completion references unknown problem id: " + problem_id);
    }
    if (static_cast<int>(members.size()) != n_completions) {
      ++result.report.rejected_reasons[std::string(
          reject_reason_name(RejectReason::missing_scores))];
      continue;
    }
    std::sort(members.begin(), members.end(),
              [](const ScoredCompletion* a, const ScoredCompletion* b) {
                return a->completion.index < b->completion.index;
              });
    std::vector<ScoredCompletion> group;
    group.reserve(members.size());
    for (const auto* m : members) group.push_back(*m);

    FilterDecision decision = mixed_correctness_filter(group, it->second, n_completions);
    if (decision.pair) {
      result.pairs.push_back(std::move(*decision.pair));
      ++result.report.pairs_out;
    } else {
      ++result.report.rejected_reasons[std::string(reject_reason_name(*decision.reason))];
    }
  }
  return result;
}

std::vector<PreferencePair> subsample_pairs(std::span<const PreferencePair> pairs,
                                            std::size_t target, std::uint64_t seed) {
  if (target > pairs.size()) {
    throw std::invalid_argument("subsample target " + std::to_string(target) +
                                " exceeds available " + std::to_string(pairs.size()));
  }
  std::vector<std::size_t> indices(pairs.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;

  DetRng rng(KeyHash().add(seed).add("subsample").add(static_cast<std::uint64_t>(pairs.size()))
                 .value());
  for (std::size_t i = 0; i < target; ++i) {
    std::size_t j = i + rng.next_below(indices.size() - i);
    std::swap(indices[i], indices[j]);
  }
  indices.resize(target);
  std::sort(indices.begin(), indices.end());

  std::vector<PreferencePair> out;
  out.reserve(target);
  for (std::size_t idx : indices) out.push_back(pairs[idx]);
  return out;
}

}  // namespace prefforge

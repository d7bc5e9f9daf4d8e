#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "prefforge/backend.hpp"
#include "prefforge/curate.hpp"
#include "prefforge/evalscore.hpp"
#include "prefforge/http_backend.hpp"
#include "prefforge/mock_backend.hpp"
#include "prefforge/strategies.hpp"

namespace prefforge {

enum class BackendKind { mock, http };

struct PipelineConfig {
  BackendKind backend = BackendKind::mock;
  std::uint64_t seed = 42;
  unsigned concurrency = 1;
  StrategyConfig strategy = StrategyConfig::defaults(Strategy::baseline);
  MockBackendConfig mock;
  HttpBackendConfig http;

  void validate() const;
};

std::unique_ptr<Backend> make_backend(const PipelineConfig& cfg);

struct GenerateSummary {
  long problems = 0;
  long completions = 0;
  long backend_calls = 0;
  long prompt_tokens = 0;
  long output_tokens = 0;
};

struct GenerateResult {
  std::vector<Completion> completions;  // sorted by (problem_id, index)
  std::vector<CallRecord> calls;        // sorted by (problem_id, seq)
  GenerateSummary summary;
};

GenerateResult run_generate(const std::vector<MathProblem>& problems, const StrategyConfig& cfg,
                            Backend& backend, unsigned concurrency);

std::map<std::string, MathProblem> problem_index(const std::vector<MathProblem>& problems);

ScoreOutcome run_score(const std::vector<Completion>& completions,
                       const std::map<std::string, MathProblem>& problems, Backend& backend,
                       CorrectnessMode mode, unsigned concurrency);

BuildPairsResult run_filter(const std::vector<ScoredCompletion>& scored,
                            const std::map<std::string, MathProblem>& problems,
                            int n_completions = 5);

}  // namespace prefforge

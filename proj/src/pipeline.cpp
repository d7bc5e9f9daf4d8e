#include "prefforge/pipeline.hpp"

#include <algorithm>
#include <stdexcept>

#include "prefforge/worker_pool.hpp"

namespace prefforge {

void PipelineConfig::validate() const {
  if (concurrency < 1) throw std::invalid_argument("concurrency must be >= 1");
  strategy.validate();
}

std::unique_ptr<Backend> make_backend(const PipelineConfig& cfg) {
  if (cfg.backend == BackendKind::mock) {
    MockBackendConfig mock = cfg.mock;
    mock.seed = cfg.seed;
    return std::make_unique<MockBackend>(mock);
  }
  return std::make_unique<HttpBackend>(cfg.http);
}

std::map<std::string, MathProblem> problem_index(const std::vector<MathProblem>& problems) {
  std::map<std::string, MathProblem> index;
  for (const auto& p : problems) {
    if (!index.emplace(p.id, p).second) {
      throw std::runtime_error("duplicate problem id: " + p.id);
    }
  }
  return index;
}

GenerateResult run_generate(const std::vector<MathProblem>& problems, const StrategyConfig& cfg,
                            Backend& backend, unsigned concurrency) {
  std::vector<StrategyOutput> slots(problems.size());
  parallel_for(problems.size(), concurrency,
               [&](std::size_t i) { slots[i] = generate_completions(problems[i], cfg, backend); });

  GenerateResult result;
  result.summary.problems = static_cast<long>(problems.size());
  for (auto& slot : slots) {
    for (auto& c : slot.completions) result.completions.push_back(std::move(c));
    for (auto& call : slot.calls) {
      result.summary.prompt_tokens += call.prompt_tokens;
      result.summary.output_tokens += call.output_tokens;
      result.calls.push_back(std::move(call));
    }
  }
  std::sort(result.completions.begin(), result.completions.end(),
            [](const Completion& a, const Completion& b) {
              return std::tie(a.problem_id, a.index) < std::tie(b.problem_id, b.index);
            });
  std::sort(result.calls.begin(), result.calls.end(), [](const CallRecord& a, const CallRecord& b) {
    return std::tie(a.problem_id, a.seq) < std::tie(b.problem_id, b.seq);
  });
  result.summary.completions = static_cast<long>(result.completions.size());
  result.summary.backend_calls = static_cast<long>(result.calls.size());
  return result;
}

ScoreOutcome run_score(const std::vector<Completion>& completions,
                       const std::map<std::string, MathProblem>& problems, Backend& backend,
                       CorrectnessMode mode, unsigned concurrency) {
  return score_completions(completions, problems, backend, mode, concurrency);
}

BuildPairsResult run_filter(const std::vector<ScoredCompletion>& scored,
                            const std::map<std::string, MathProblem>& problems,
                            int n_completions) {
  return build_pairs(scored, problems, n_completions);
}

}  // namespace prefforge

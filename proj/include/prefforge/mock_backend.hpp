#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prefforge/backend.hpp"
#include "prefforge/problem.hpp"

namespace prefforge {

struct MockBackendConfig {
  std::uint64_t seed = 42;
  // Probability that a generated solution carries the correct final answer.
  double correct_rate = 0.6;
  // Probability that an incorrect response is rewarded above every correct
  // one, emulating a reward model's incorrect_higher rate.
  double inversion_probability = 0.0311;
  double malformed_judge_rate = 0.0;
  double malformed_cot_rate = 0.0;
};

// Seeded deterministic backend over a built-in family of linear one-unknown
// arithmetic word problems. Outputs are a pure function of (seed, request
// contents): independent of wall clock, call ordering and concurrency.
class MockBackend : public Backend {
 public:
  explicit MockBackend(MockBackendConfig config) : cfg_(config) {}

  BackendResponse complete(const BackendRequest& request) override;
  double score_reward(const std::string& prompt, const std::string& response) override;

  const MockBackendConfig& config() const { return cfg_; }

 private:
  std::string make_choice(const BackendRequest& request, int index, std::uint64_t call_key);
  MockBackendConfig cfg_;
};

// Solves a mock-family problem embedded anywhere in `text`. nullopt when no
// template matches; callers fall back to the last integer in the text.
std::optional<long long> solve_mock_problem(std::string_view text);

// Effective answer the mock treats as correct for arbitrary text (template
// solve, else last integer, else 42).
long long mock_reference_answer(std::string_view text);

// Deterministic synthetic corpus; ids "mock-000000"... Gold solutions end with
// a gsm8k-style "#### <answer>" marker so fixtures can round-trip through
// ingestion.
std::vector<MathProblem> make_mock_problems(int count);

}  // namespace prefforge

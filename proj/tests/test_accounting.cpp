#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "prefforge/accounting.hpp"
#include "prefforge/mock_backend.hpp"
#include "prefforge/strategies.hpp"

using namespace prefforge;

namespace {

// The published per-problem token constants, encoded as single-sample call
// records per problem.
std::vector<CallRecord> reference_calls(long problems = 1) {
  std::vector<CallRecord> calls;
  for (long p = 0; p < problems; ++p) {
    std::string base_id = "b-" + std::to_string(p);
    std::string dts_id = "d-" + std::to_string(p);
    std::string cot_id = "c-" + std::to_string(p);
    std::string mcts_id = "m-" + std::to_string(p);
    calls.push_back({base_id, Strategy::baseline, Purpose::generate, 0, 41 + 77, 364});
    calls.push_back({dts_id, Strategy::dts, Purpose::thought, 0, 97, 50});
    calls.push_back({dts_id, Strategy::dts, Purpose::solution, 1, 118, 230});
    calls.push_back({cot_id, Strategy::cot, Purpose::generate, 0, 299, 661});
    for (int i = 0; i < 8; ++i) {
      calls.push_back({mcts_id, Strategy::mcts, Purpose::mcts_actions, i, 0, 292});
    }
  }
  return calls;
}

}  // namespace

TEST_CASE("tally reproduces the reference per-problem totals") {
  auto budgets = tally(reference_calls());
  CHECK(budgets.at(Strategy::baseline).total() == 482.0);
  CHECK(budgets.at(Strategy::baseline).mean_prompt_tokens == doctest::Approx(118));
  CHECK(budgets.at(Strategy::baseline).mean_output_tokens == doctest::Approx(364));
  CHECK(budgets.at(Strategy::dts).total() == doctest::Approx(495));
  CHECK(budgets.at(Strategy::cot).total() == doctest::Approx(960));
  CHECK(budgets.at(Strategy::mcts).total() == doctest::Approx(2336));
}

TEST_CASE("relative compute reproduces the published ratio column") {
  auto budgets = tally(reference_calls(3));
  const TokenBudget& base = budgets.at(Strategy::baseline);
  CHECK(round2(relative_compute(base, base)) == 1.00);
  CHECK(round2(relative_compute(budgets.at(Strategy::dts), base)) == 1.03);
  CHECK(round2(relative_compute(budgets.at(Strategy::cot), base)) == 1.99);
  CHECK(round2(relative_compute(budgets.at(Strategy::mcts), base)) == 4.85);
}

TEST_CASE("self-ratio is exactly one") {
  TokenBudget b{Strategy::cot, 123.0, 456.0, 10};
  CHECK(relative_compute(b, b) == 1.0);
}

TEST_CASE("ratios are invariant under uniform scaling") {
  auto calls = reference_calls();
  auto budgets = tally(calls);
  double base_ratio =
      relative_compute(budgets.at(Strategy::dts), budgets.at(Strategy::baseline));

  for (auto& call : calls) {
    call.prompt_tokens *= 7;
    call.output_tokens *= 7;
  }
  auto scaled = tally(calls);
  double scaled_ratio =
      relative_compute(scaled.at(Strategy::dts), scaled.at(Strategy::baseline));
  CHECK(base_ratio == doctest::Approx(scaled_ratio).epsilon(1e-12));
}

TEST_CASE("means divide by distinct problems per strategy") {
  std::vector<CallRecord> calls = {
      {"p1", Strategy::baseline, Purpose::generate, 0, 100, 300},
      {"p1", Strategy::baseline, Purpose::generate, 1, 100, 300},
      {"p2", Strategy::baseline, Purpose::generate, 0, 200, 600},
  };
  auto budgets = tally(calls);
  const TokenBudget& b = budgets.at(Strategy::baseline);
  CHECK(b.problems == 2);
  CHECK(b.mean_prompt_tokens == doctest::Approx(200.0));
  CHECK(b.mean_output_tokens == doctest::Approx(600.0));
}

TEST_CASE("empty streams and zero baselines raise") {
  CHECK_THROWS_AS(tally({}), std::invalid_argument);
  CHECK_THROWS_AS(tally_completions({}), std::invalid_argument);
  TokenBudget zero{Strategy::baseline, 0.0, 0.0, 1};
  TokenBudget some{Strategy::dts, 1.0, 1.0, 1};
  CHECK_THROWS_AS(relative_compute(some, zero), std::invalid_argument);
}

TEST_CASE("negative token counts are rejected") {
  std::vector<CallRecord> calls = {{"p", Strategy::baseline, Purpose::generate, 0, -1, 5}};
  CHECK_THROWS_AS(tally(calls), std::invalid_argument);
}

TEST_CASE("per-call and per-completion views differ for batched strategies") {
  MockBackend backend({.seed = 42});
  auto problems = make_mock_problems(4);
  auto cfg = StrategyConfig::defaults(Strategy::baseline);

  std::vector<CallRecord> calls;
  std::vector<Completion> completions;
  for (const auto& p : problems) {
    auto out = generate_baseline(p, cfg, backend);
    calls.insert(calls.end(), out.calls.begin(), out.calls.end());
    completions.insert(completions.end(), out.completions.begin(), out.completions.end());
  }

  auto call_view = tally(calls);
  auto completion_view = tally_completions(completions);
  // Five completions share one prompt: the completion view counts it five
  // times, the call view once.
  CHECK(completion_view.at(Strategy::baseline).mean_prompt_tokens ==
        doctest::Approx(5.0 * call_view.at(Strategy::baseline).mean_prompt_tokens));
  CHECK(completion_view.at(Strategy::baseline).mean_output_tokens ==
        doctest::Approx(call_view.at(Strategy::baseline).mean_output_tokens));
}

TEST_CASE("rounding helper") {
  CHECK(round2(1.0269709) == 1.03);
  CHECK(round2(1.99170124) == 1.99);
  CHECK(round2(4.8465) == 4.85);
  CHECK(round2(1.0) == 1.0);
}

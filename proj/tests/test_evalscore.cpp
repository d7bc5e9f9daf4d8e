#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "prefforge/evalscore.hpp"
#include "prefforge/mock_backend.hpp"
#include "prefforge/rng.hpp"
#include "prefforge/strategies.hpp"
#include "test_util.hpp"

using namespace prefforge;
using prefforge::testing::FakeBackend;

namespace {

MathProblem gold7() {
  MathProblem p;
  p.id = "p7";
  p.query = "A has 3 apples and buys 4 more. How many apples does A have now?";
  p.gold_answer = CanonicalNumber::of_rational(7, 1);
  return p;
}

Completion completion_for(const std::string& id, int index, const std::string& text,
                          bool correct_hint = false) {
  (void)correct_hint;
  Completion c;
  c.problem_id = id;
  c.index = index;
  c.text = text;
  return c;
}

}  // namespace

TEST_CASE("final answer extraction") {
  auto one = extract_final_answer("steps...\nFinal Answer: 1");
  REQUIRE(one);
  CHECK(one->str() == "1");

  CHECK_FALSE(extract_final_answer("no numbers here"));

  auto money = extract_final_answer("Final answer: $1,234.50");
  REQUIRE(money);
  CHECK(money->str() == "1234.5");

  auto case_insensitive = extract_final_answer("FINAL ANSWER:   42   ");
  REQUIRE(case_insensitive);
  CHECK(case_insensitive->str() == "42");

  // The last marker wins.
  auto last_marker = extract_final_answer("Final Answer: 3\nCorrection.\nFinal Answer: 9");
  REQUIRE(last_marker);
  CHECK(last_marker->str() == "9");

  // No marker: last standalone number in the text.
  auto fallback = extract_final_answer("first 4 then 5, so the result is 11.");
  REQUIRE(fallback);
  CHECK(fallback->str() == "11");

  // Marker present but no number after it: fall back to the last number.
  auto marker_no_number = extract_final_answer("We get 8.\nFinal Answer: none");
  REQUIRE(marker_no_number);
  CHECK(marker_no_number->str() == "8");

  auto trailing_period = extract_final_answer("Final Answer: 18.");
  REQUIRE(trailing_period);
  CHECK(trailing_period->str() == "18");
}

TEST_CASE("correctness comparison") {
  auto seven = CanonicalNumber::of_rational(7, 1);
  CHECK(check_correct(CanonicalNumber::parse_numeric("7"), seven));
  CHECK(check_correct(CanonicalNumber::parse_numeric("7.0000001"), seven));
  CHECK_FALSE(check_correct(CanonicalNumber::parse_numeric("7.1"), seven));
  CHECK_FALSE(check_correct(std::nullopt, seven));
}

TEST_CASE("judge reply fixtures parse to the expected verdicts") {
  struct Fixture {
    const char* reply;
    bool correct;
    int score;
  };
  // 20 arrangements: well-formed, missing JSON, double JSON, out-of-range
  // scores, wrong types, nesting, formatting noise.
  const Fixture fixtures[] = {
      {"<explanation>\n- fine\n</explanation>\n{\"correct\": true, \"score\": 95}", true, 95},
      {"no json anywhere", false, -1},
      {"{\"correct\": true, \"score\": 90} then {\"correct\": false, \"score\": 20}", false, 20},
      {"{\"correct\": true, \"score\": 150}", false, -1},
      {"{\"correct\": true, \"score\": -5}", false, -1},
      {"{\"correct\": true, \"score\": 88.0}", true, 88},
      {"{\"correct\": true, \"score\": 88.5}", false, -1},
      {"{\"correct\": \"true\", \"score\": 88}", false, -1},
      {"{\"correct\": true}", false, -1},
      {"{\"score\": 44}", false, -1},
      {"{\n  \"correct\": true,\n  \"score\": 91\n}", true, 91},
      {"{\"verdict\": 1} {\"correct\": false, \"score\": 12}", false, 12},
      {"{\"correct\": false, \"score\": 20, \"notes\": \"short\"}", false, 20},
      {"{\"correct\": false, \"score\": 0}", false, 0},
      {"{\"correct\": true, \"score\": 100}", true, 100},
      {"{\"correct\": false, \"score\": 85}", false, 85},
      {"{\"correct\": true, \"score\": 77} trailing commentary", true, 77},
      {"{'correct': true, 'score': 66}", false, -1},
      {"{\"score\": \"95\", \"correct\": true}", false, -1},
      {"{ \"correct\" : true , \"score\" : 77 }", true, 77},
  };
  int index = 0;
  for (const auto& fixture : fixtures) {
    CAPTURE(index);
    CAPTURE(fixture.reply);
    JudgeVerdict verdict = parse_judge_reply(fixture.reply);
    CHECK(verdict.correct == fixture.correct);
    CHECK(verdict.score == fixture.score);
    CHECK(verdict.excluded() == (fixture.score == -1));
    ++index;
  }
}

TEST_CASE("judge parsing never throws on arbitrary bytes") {
  DetRng rng(123);
  for (int i = 0; i < 500; ++i) {
    std::string garbage;
    int length = rng.next_int(0, 80);
    for (int k = 0; k < length; ++k) {
      garbage.push_back(static_cast<char>(rng.next_int(32, 126)));
    }
    JudgeVerdict verdict = parse_judge_reply(garbage);
    CHECK((verdict.score == -1 || (verdict.score >= 0 && verdict.score <= 100)));
  }
}

TEST_CASE("judge sends the rubric prompt with deterministic decoding") {
  FakeBackend backend([](const BackendRequest&, int) -> std::vector<std::string> {
    return {"<explanation>\n- ok\n</explanation>\n{\"correct\": true, \"score\": 92}"};
  });
  MathProblem p = gold7();
  JudgeVerdict verdict = judge(p, "The total is 7.\nFinal Answer: 7", backend);
  CHECK(verdict.correct);
  CHECK(verdict.score == 92);

  REQUIRE(backend.requests.size() == 1);
  const BackendRequest& request = backend.requests[0];
  CHECK(request.purpose == Purpose::judge);
  CHECK(request.params.temperature == 0.0);
  CHECK(request.params.max_tokens == 4096);
  REQUIRE(request.messages.size() == 1);
  const std::string& prompt = request.messages[0].content;
  CHECK(prompt == render_judge_prompt(p, "The total is 7.\nFinal Answer: 7"));
  CHECK(prompt.find("Here is a math question: " + p.query) != std::string::npos);
  CHECK(prompt.find("Here is the gold answer: 7") != std::string::npos);
  CHECK(prompt.find("The score should be between 0 and 100.") != std::string::npos);
  CHECK(prompt.find("{\"correct\": true/false, \"score\": integer}") != std::string::npos);
}

TEST_CASE("score_completions marks matches against the gold answer") {
  MockBackend backend({.seed = 42});
  MathProblem p = gold7();
  std::vector<Completion> completions = {
      completion_for("p7", 0, "Final Answer: 7"),
      completion_for("p7", 1, "Final Answer: 6"),
      completion_for("p7", 2, "the sum is 7\nFinal Answer: 7"),
      completion_for("p7", 3, "Final Answer: 8"),
      completion_for("p7", 4, "totally seven\nFinal Answer: 7"),
  };
  auto outcome = score_completions(completions, {{"p7", p}}, backend,
                                   CorrectnessMode::answer_match);
  REQUIRE(outcome.scored.size() == 5);
  int correct = 0;
  for (const auto& sc : outcome.scored) correct += sc.correct ? 1 : 0;
  CHECK(correct == 3);
  CHECK(outcome.excluded == 0);
  for (const auto& sc : outcome.scored) CHECK_FALSE(sc.judge_score);
}

TEST_CASE("judge mode drops -1 verdicts and counts the exclusion") {
  int judge_calls = 0;
  FakeBackend backend([&](const BackendRequest& request, int) -> std::vector<std::string> {
    REQUIRE(request.purpose == Purpose::judge);
    ++judge_calls;
    if (judge_calls == 2) return {"malformed verdict, no json"};
    return {"{\"correct\": true, \"score\": 90}"};
  });
  MathProblem p = gold7();
  std::vector<Completion> completions;
  for (int i = 0; i < 5; ++i) {
    completions.push_back(completion_for("p7", i, "Final Answer: 7"));
  }
  auto outcome =
      score_completions(completions, {{"p7", p}}, backend, CorrectnessMode::judge, 1);
  CHECK(outcome.scored.size() == 4);
  CHECK(outcome.excluded == 1);
  for (const auto& sc : outcome.scored) {
    REQUIRE(sc.judge_score);
    CHECK(*sc.judge_score == 90);
  }
}

TEST_CASE("scoring is deterministic across replays and concurrency") {
  MathProblem p = gold7();
  std::vector<Completion> completions;
  for (int i = 0; i < 10; ++i) {
    completions.push_back(
        completion_for("p7", i, "variant " + std::to_string(i) + "\nFinal Answer: 7"));
  }
  std::vector<double> first, second;
  for (unsigned width : {1u, 8u}) {
    MockBackend backend({.seed = 42, .inversion_probability = 0.0});
    auto outcome =
        score_completions(completions, {{"p7", p}}, backend, CorrectnessMode::answer_match, width);
    std::vector<double>& sink = width == 1 ? first : second;
    for (const auto& sc : outcome.scored) sink.push_back(sc.reward);
  }
  CHECK(first == second);
}

TEST_CASE("score_completions rejects unknown problem ids") {
  MockBackend backend({.seed = 1});
  std::vector<Completion> completions = {completion_for("ghost", 0, "Final Answer: 1")};
  CHECK_THROWS(score_completions(completions, {{"p7", gold7()}}, backend,
                                 CorrectnessMode::answer_match));
}

TEST_CASE("reward-model evaluation reproduces the published error rates") {
  struct Row {
    long cl, ch, il, ih;
    double percent;
  };
  const Row rows[] = {
      {345, 222, 657, 95, 7.20},  {313, 853, 73, 80, 6.07},   {691, 349, 235, 44, 3.34},
      {735, 364, 175, 45, 3.41},  {479, 455, 322, 63, 4.78},  {398, 647, 233, 41, 3.11},
      {406, 697, 173, 43, 3.26},  {28, 1012, 119, 160, 12.13}, {32, 1048, 78, 161, 12.21},
      {560, 545, 146, 68, 5.16},
  };
  for (const auto& row : rows) {
    CAPTURE(row.ih);
    std::vector<RewardEvalItem> items;
    auto add = [&](long count, bool correct, bool higher) {
      for (long i = 0; i < count; ++i) {
        items.push_back({correct, higher ? 1.0 : 0.25, 0.5});
      }
    };
    add(row.cl, true, false);
    add(row.ch, true, true);
    add(row.il, false, false);
    add(row.ih, false, true);

    RewardEvalCounts counts = eval_reward_model(items);
    CHECK(counts.cl == row.cl);
    CHECK(counts.ch == row.ch);
    CHECK(counts.il == row.il);
    CHECK(counts.ih == row.ih);
    CHECK(counts.total() == 1319);
    auto rate = counts.error_rate();
    REQUIRE(rate);
    CHECK(std::round(*rate * 10000.0) / 100.0 == doctest::Approx(row.percent));
  }
}

TEST_CASE("the larger validation sample reproduces 2.76%") {
  std::vector<RewardEvalItem> items;
  for (long i = 0; i < 136; ++i) items.push_back({false, 1.0, 0.5});
  for (long i = 0; i < 4919 - 136; ++i) items.push_back({true, 0.2, 0.5});
  auto rate = eval_reward_model(items).error_rate();
  REQUIRE(rate);
  CHECK(std::round(*rate * 10000.0) / 100.0 == doctest::Approx(2.76));
}

TEST_CASE("ties count as lower") {
  std::vector<RewardEvalItem> items = {
      {true, 0.5, 0.5},
      {false, 0.5, 0.5},
  };
  RewardEvalCounts counts = eval_reward_model(items);
  CHECK(counts.cl == 1);
  CHECK(counts.il == 1);
  CHECK(counts.ch == 0);
  CHECK(counts.ih == 0);
  CHECK(counts.error_rate() == doctest::Approx(0.0));
}

TEST_CASE("classification partitions arbitrary items") {
  DetRng rng(77);
  std::vector<RewardEvalItem> items;
  for (int i = 0; i < 500; ++i) {
    items.push_back({rng.chance(0.5), rng.next_unit(), rng.next_unit()});
  }
  RewardEvalCounts counts = eval_reward_model(items);
  CHECK(counts.total() == 500);
  long correct = 0, ih = 0;
  for (const auto& item : items) {
    if (item.model_correct) ++correct;
    if (!item.model_correct && item.model_reward > item.gt_reward) ++ih;
  }
  CHECK(counts.cl + counts.ch == correct);
  CHECK(counts.ih == ih);
  auto rate = counts.error_rate();
  REQUIRE(rate);
  CHECK(*rate >= 0.0);
  CHECK(*rate <= 1.0);
  CHECK((counts.ih == 0) == (*rate == 0.0));
}

TEST_CASE("empty reward evaluation input raises") {
  CHECK_THROWS_AS(eval_reward_model({}), std::invalid_argument);
}

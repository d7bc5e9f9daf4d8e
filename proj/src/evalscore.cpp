#include "prefforge/evalscore.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "prefforge/worker_pool.hpp"

namespace prefforge {

namespace {

using json = nlohmann::json;

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Numeric tokens, optionally dollar-signed/comma-grouped.
const std::regex kNumberToken(R"([-+]?\$?\d[\d,]*(?:\.\d+)?)");

std::optional<CanonicalNumber> first_number_in(const std::string& text) {
  auto begin = std::sregex_iterator(text.begin(), text.end(), kNumberToken);
  if (begin == std::sregex_iterator()) return std::nullopt;
  return CanonicalNumber::parse_numeric(begin->str());
}

std::optional<CanonicalNumber> last_number_in(const std::string& text) {
  std::optional<CanonicalNumber> found;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kNumberToken);
       it != std::sregex_iterator(); ++it) {
    if (auto parsed = CanonicalNumber::parse_numeric(it->str())) found = parsed;
  }
  return found;
}

}  // namespace

std::optional<CanonicalNumber> extract_final_answer(const std::string& text) {
  static const std::string marker = "final answer:";
  std::string lower = to_lower(text);
  auto pos = lower.rfind(marker);
  if (pos != std::string::npos) {
    std::string tail = text.substr(pos + marker.size());
    if (auto after = first_number_in(tail)) return after;
  }
  return last_number_in(text);
}

bool check_correct(const std::optional<CanonicalNumber>& answer, const CanonicalNumber& gold) {
  if (!answer) return false;
  return answer->equals(gold);
}

const std::string kJudgePromptTemplate =
    "Here is a math question: {question}\n"
    "Here is the gold answer: {gold_answer}\n"
    "Here is a student answer: {generated_answer}\n"
    "You are a math teacher grading a student's answer. You need to judge if the student answer "
    "is correct based on the gold answer. You need to follow the following rubrics:\n"
    "1. The score should be between 0 and 100.\n"
    "2. If the student answer is not correct based on the gold answer, deduct points from the "
    "score for each wrong step. Add points to the score for each correct step, up to a maximum "
    "of 60 points.\n"
    "3. If the student answer is correct based on the gold answer, please give a final score "
    "above 80.\n"
    "4. Please give a detailed explanation in bullet points for each point deducted.\n"
    "In the end, the score and explanation should be in the following format. Note that the "
    "final output should be parsed as a json object.\n"
    "<explanation>\n"
    "{\"correct\": true/false, \"score\": integer}";

namespace {

std::string replace_all(std::string text, std::string_view needle, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace

std::string render_judge_prompt(const MathProblem& problem, const std::string& answer_text) {
  std::string prompt = kJudgePromptTemplate;
  prompt = replace_all(prompt, "{question}", problem.query);
  prompt = replace_all(prompt, "{gold_answer}", problem.gold_answer.str());
  prompt = replace_all(prompt, "{generated_answer}", answer_text);
  return prompt;
}

JudgeVerdict parse_judge_reply(const std::string& reply) {
  JudgeVerdict verdict;
  verdict.explanation = reply;

  // Brace-delimited flat spans; the last one that parses with the right
  // shape wins.
  static const std::regex object_re(R"(\{[^{}]*\})");
  for (auto it = std::sregex_iterator(reply.begin(), reply.end(), object_re);
       it != std::sregex_iterator(); ++it) {
    json parsed = json::parse(it->str(), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) continue;
    if (!parsed.contains("correct") || !parsed.contains("score")) continue;
    if (!parsed["correct"].is_boolean()) continue;
    const auto& score_field = parsed["score"];
    long long score = 0;
    if (score_field.is_number_integer()) {
      score = score_field.get<long long>();
    } else if (score_field.is_number_float()) {
      double d = score_field.get<double>();
      if (d != static_cast<long long>(d)) continue;
      score = static_cast<long long>(d);
    } else {
      continue;
    }
    if (score < 0 || score > 100) continue;
    verdict.correct = parsed["correct"].get<bool>();
    verdict.score = static_cast<int>(score);
  }
  if (verdict.score == -1) verdict.correct = false;
  return verdict;
}

JudgeVerdict judge(const MathProblem& problem, const std::string& answer_text, Backend& backend) {
  BackendRequest request;
  request.messages = {{Role::system, render_judge_prompt(problem, answer_text)}};
  request.params.temperature = 0.0;
  request.params.max_tokens = 4096;
  request.params.n = 1;
  request.purpose = Purpose::judge;
  BackendResponse response = backend.complete(request);
  if (response.choices.empty()) throw BackendError("judge backend returned no choices");
  return parse_judge_reply(response.choices.front());
}

CorrectnessMode correctness_mode_from_name(std::string_view name) {
  if (name == "answer-match" || name == "answer_match") return CorrectnessMode::answer_match;
  if (name == "judge") return CorrectnessMode::judge;
  throw std::invalid_argument("unknown correctness mode: " + std::string(name));
}

std::string_view correctness_mode_name(CorrectnessMode mode) {
  return mode == CorrectnessMode::answer_match ? "answer_match" : "judge";
}

ScoreOutcome score_completions(const std::vector<Completion>& completions,
                               const std::map<std::string, MathProblem>& problems,
                               Backend& backend, CorrectnessMode mode, unsigned concurrency) {
  for (const auto& c : completions) {
    if (!problems.count(c.problem_id)) {
      throw std::runtime_error("completion references unknown problem id: " + c.problem_id);
    }
  }

  std::vector<ScoredCompletion> slots(completions.size());
  parallel_for(completions.size(), concurrency, [&](std::size_t i) {
    const Completion& c = completions[i];
    const MathProblem& p = problems.at(c.problem_id);
    ScoredCompletion sc;
    sc.completion = c;
    sc.reward = backend.score_reward(p.query, c.text);
    if (mode == CorrectnessMode::answer_match) {
      sc.correct = check_correct(extract_final_answer(c.text), p.gold_answer);
    } else {
      JudgeVerdict verdict = judge(p, c.text, backend);
      sc.judge_score = verdict.score;
      sc.correct = verdict.correct;
      sc.excluded = verdict.excluded();
    }
    slots[i] = std::move(sc);
  });

  ScoreOutcome outcome;
  outcome.scored.reserve(slots.size());
  for (auto& sc : slots) {
    if (sc.excluded) {
      ++outcome.excluded;
      continue;
    }
    outcome.scored.push_back(std::move(sc));
  }
  return outcome;
}

std::optional<double> RewardEvalCounts::error_rate() const {
  long t = total();
  if (t == 0) return std::nullopt;
  return static_cast<double>(ih) / static_cast<double>(t);
}

RewardEvalCounts eval_reward_model(std::span<const RewardEvalItem> items) {
  if (items.empty()) throw std::invalid_argument("eval_reward_model: empty input");
  RewardEvalCounts counts;
  for (const auto& item : items) {
    bool higher = item.model_reward > item.gt_reward;
    if (item.model_correct) {
      higher ? ++counts.ch : ++counts.cl;
    } else {
      higher ? ++counts.ih : ++counts.il;
    }
  }
  return counts;
}

}  // namespace prefforge

#include "prefforge/mock_backend.hpp"

#include <cstdio>
#include <regex>

#include "prefforge/evalscore.hpp"
#include "prefforge/rng.hpp"
#include "prefforge/tokenizer_stub.hpp"

namespace prefforge {

namespace {

const std::vector<std::string> kNames = {"Asha",  "Ben",   "Carla", "Devin",
                                         "Elena", "Farid", "Grace", "Hiro"};

const std::vector<std::string> kOpeners = {
    "Let's solve this step by step.",
    "We work through the problem carefully.",
    "Start by writing down what is known.",
    "First, restate the problem in terms of quantities.",
};

const std::vector<std::string> kChecks = {
    "Checking the arithmetic confirms the result.",
    "A quick re-computation gives the same value.",
    "The steps are consistent, so the result stands.",
};

// Approach phrases for thought replies; kept digit-free so embedded approach
// text can never confuse the template solver.
const std::vector<std::string> kApproaches = {
    "Translate the story into an equation and solve it directly.",
    "Use inverse operations to isolate the unknown quantity.",
    "Count the quantities step by step from the start.",
    "Model the situation with a simple linear equation.",
    "Estimate the result first, then verify with exact arithmetic.",
    "Break the problem into smaller parts and combine the results.",
    "Work backwards from the final amount.",
    "Represent the quantities with a bar model and compare them.",
};

std::string concat_messages(const BackendRequest& request) {
  std::string all;
  for (const auto& m : request.messages) {
    all += m.content;
    all.push_back('\n');
  }
  return all;
}

std::optional<long long> last_integer(std::string_view text) {
  std::optional<long long> found;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isdigit(static_cast<unsigned char>(text[i]))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      bool neg = i > 0 && text[i - 1] == '-';
      long long v = 0;
      for (std::size_t k = i; k < j; ++k) v = v * 10 + (text[k] - '0');
      found = neg ? -v : v;
      i = j;
    } else {
      ++i;
    }
  }
  return found;
}

std::string solution_body(DetRng& rng, long long answer) {
  std::string text = rng.pick(kOpeners);
  text += "\nStep 1: Identify the quantities given in the problem.";
  text += "\nStep 2: Set up the arithmetic relation between them.";
  text += "\nStep 3: Compute the result, which comes out to " + std::to_string(answer) + ".";
  text += "\n" + rng.pick(kChecks);
  text += "\nFinal Answer: " + std::to_string(answer);
  return text;
}

long long perturb_answer(DetRng& rng, long long answer) {
  long long delta = rng.next_int(1, 3);
  if (rng.chance(0.5)) delta = -delta;
  return answer + delta;
}

bool wants_cot_tags(const BackendRequest& request) {
  for (const auto& m : request.messages) {
    if (m.role == Role::system && m.content.find("<thinking>") != std::string::npos) return true;
  }
  return false;
}

const std::string* last_assistant(const BackendRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == Role::assistant) return &it->content;
  }
  return nullptr;
}

}  // namespace

std::optional<long long> solve_mock_problem(std::string_view text) {
  static const std::regex add_re(R"(has (\d+) apples and buys (\d+) more)");
  static const std::regex sub_re(R"(baked (\d+) cookies and gave away (\d+))");
  static const std::regex mul_re(R"(has (\d+) boxes with (\d+) markers in each box)");
  static const std::regex unk_re(R"(had (\d+) marbles, lost x of them, and now has (\d+) marbles)");

  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(text.begin(), text.end(), m, add_re)) {
    return std::stoll(m[1]) + std::stoll(m[2]);
  }
  if (std::regex_search(text.begin(), text.end(), m, sub_re)) {
    return std::stoll(m[1]) - std::stoll(m[2]);
  }
  if (std::regex_search(text.begin(), text.end(), m, mul_re)) {
    return std::stoll(m[1]) * std::stoll(m[2]);
  }
  if (std::regex_search(text.begin(), text.end(), m, unk_re)) {
    return std::stoll(m[1]) - std::stoll(m[2]);
  }
  return std::nullopt;
}

long long mock_reference_answer(std::string_view text) {
  if (auto solved = solve_mock_problem(text)) return *solved;
  if (auto fallback = last_integer(text)) return *fallback;
  return 42;
}

std::vector<MathProblem> make_mock_problems(int count) {
  std::vector<MathProblem> problems;
  problems.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const std::string& name = kNames[static_cast<std::size_t>(i) % kNames.size()];
    long long a = 3 + (i * 7) % 23;
    long long b = 2 + (i * 5) % 17;
    long long answer = 0;
    std::string query;
    std::string working;
    switch (i % 4) {
      case 0:
        answer = a + b;
        query = name + " has " + std::to_string(a) + " apples and buys " + std::to_string(b) +
                " more. How many apples does " + name + " have now?";
        working = std::to_string(a) + " + " + std::to_string(b);
        break;
      case 1: {
        long long total = a + b;
        answer = a;
        query = name + " baked " + std::to_string(total) + " cookies and gave away " +
                std::to_string(b) + " of them. How many cookies are left?";
        working = std::to_string(total) + " - " + std::to_string(b);
        break;
      }
      case 2:
        answer = a * b;
        query = name + " has " + std::to_string(a) + " boxes with " + std::to_string(b) +
                " markers in each box. How many markers are there in total?";
        working = std::to_string(a) + " * " + std::to_string(b);
        break;
      default: {
        long long lost = 1 + (i * 3) % std::max<long long>(a - 1, 1);
        long long left = a - lost;
        answer = lost;
        query = name + " had " + std::to_string(a) + " marbles, lost x of them, and now has " +
                std::to_string(left) + " marbles. What is the value of x?";
        working = std::to_string(a) + " - " + std::to_string(left);
        break;
      }
    }
    MathProblem p;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "mock-%06d", i);
    p.id = buf;
    p.query = query;
    p.gold_answer = CanonicalNumber::of_rational(answer, 1);
    p.gold_solution = "Compute " + working + " = " + std::to_string(answer) + ".\n#### " +
                      std::to_string(answer);
    problems.push_back(std::move(p));
  }
  return problems;
}

std::string MockBackend::make_choice(const BackendRequest& request, int index,
                                     std::uint64_t call_key) {
  DetRng rng(KeyHash().add(call_key).add("choice").add(index).value());
  std::string all = concat_messages(request);
  long long answer = mock_reference_answer(all);

  switch (request.purpose) {
    case Purpose::thought: {
      int k = rng.next_int(3, 7);
      std::vector<std::size_t> order(kApproaches.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (int i = 0; i < k; ++i) {
        std::size_t j =
            static_cast<std::size_t>(i) +
            rng.next_below(static_cast<std::uint64_t>(order.size() - static_cast<std::size_t>(i)));
        std::swap(order[static_cast<std::size_t>(i)], order[j]);
      }
      std::string reply;
      for (int i = 0; i < k; ++i) {
        reply += std::to_string(i + 1) + ". " + kApproaches[order[static_cast<std::size_t>(i)]];
        if (i + 1 < k) reply.push_back('\n');
      }
      return reply;
    }
    case Purpose::mcts_apply: {
      // Materialize the selected draft: reword it but keep its final answer.
      const std::string* draft = last_assistant(request);
      long long kept = answer;
      if (draft) {
        if (auto parsed = extract_final_answer(*draft)) {
          if (parsed->is_numeric()) kept = static_cast<long long>(parsed->as_double());
        }
      }
      std::string text = "Refined solution.\n";
      text += solution_body(rng, kept);
      return text;
    }
    case Purpose::mcts_eval: {
      const std::string* draft = last_assistant(request);
      bool correct = false;
      if (draft) {
        if (auto parsed = extract_final_answer(*draft)) {
          correct = parsed->is_numeric() && static_cast<long long>(parsed->as_double()) == answer;
        }
      }
      double score = correct ? rng.next_in(0.70, 0.95) : rng.next_in(0.05, 0.50);
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.2f", score);
      return buf;
    }
    case Purpose::judge: {
      if (rng.chance(cfg_.malformed_judge_rate)) {
        return "The student answer could not be graded in the requested format.";
      }
      std::string gold_line;
      auto pos = all.find("Here is the gold answer:");
      if (pos != std::string::npos) {
        auto start = pos + std::string("Here is the gold answer:").size();
        auto end = all.find('\n', start);
        gold_line = trim(all.substr(start, end == std::string::npos ? all.size() - start
                                                                    : end - start));
      }
      std::string student;
      auto spos = all.find("Here is a student answer:");
      if (spos != std::string::npos) {
        auto start = spos + std::string("Here is a student answer:").size();
        auto end = all.find("You are a math teacher", start);
        student = all.substr(start, end == std::string::npos ? all.size() - start : end - start);
      }
      auto gold = CanonicalNumber::canonicalize(gold_line);
      auto parsed = extract_final_answer(student);
      bool correct = gold && check_correct(parsed, *gold);
      int score = correct ? rng.next_int(81, 100) : rng.next_int(0, 60);
      std::string reply = "<explanation>\n- Compared the final result against the reference.\n";
      reply += correct ? "- The reasoning steps are sound.\n"
                       : "- The final value does not match the reference; points deducted.\n";
      reply += "</explanation>\n";
      reply += std::string("{\"correct\": ") + (correct ? "true" : "false") +
               ", \"score\": " + std::to_string(score) + "}";
      return reply;
    }
    case Purpose::reward:
      // score_reward handles this purpose directly.
      return "0.5";
    case Purpose::generate:
    case Purpose::solution:
    case Purpose::mcts_actions:
    default: {
      bool correct = rng.chance(cfg_.correct_rate);
      long long value = correct ? answer : perturb_answer(rng, answer);
      std::string body = solution_body(rng, value);
      if (request.purpose == Purpose::solution) {
        body = "Following the chosen approach.\n" + body;
      }
      if (wants_cot_tags(request)) {
        if (rng.chance(cfg_.malformed_cot_rate)) return body;
        std::string tagged = "<thinking>\nRestate the quantities and set up the arithmetic.\n";
        tagged += "</thinking>\n<reflection>\nThe setup matches the story; the arithmetic was ";
        tagged += "re-checked.\n</reflection>\n<output>\n" + body + "\n</output>";
        return tagged;
      }
      return body;
    }
  }
}

BackendResponse MockBackend::complete(const BackendRequest& request) {
  log_call(request.purpose);
  request.validate();

  KeyHash key;
  key.add(cfg_.seed).add(purpose_name(request.purpose));
  for (const auto& m : request.messages) key.add(role_name(m.role)).add(m.content);
  std::uint64_t call_key = key.value();

  BackendResponse resp;
  resp.prompt_tokens = 0;
  for (const auto& m : request.messages) resp.prompt_tokens += stub_token_count(m.content);
  for (int i = 0; i < request.params.n; ++i) {
    std::string choice = make_choice(request, i, call_key);
    long tokens = stub_token_count(choice);
    resp.output_tokens += tokens;
    resp.choice_output_tokens.push_back(tokens);
    resp.truncated.push_back(false);
    resp.choices.push_back(std::move(choice));
  }
  return resp;
}

double MockBackend::score_reward(const std::string& prompt, const std::string& response) {
  log_call(Purpose::reward);
  if (prompt.empty() || response.empty()) {
    throw BackendError("score_reward requires nonempty prompt and response");
  }
  long long answer = mock_reference_answer(prompt);
  auto parsed = extract_final_answer(response);
  bool correct =
      parsed && parsed->is_numeric() && static_cast<long long>(parsed->as_double()) == answer;

  DetRng rng(KeyHash().add(cfg_.seed).add("reward").add(prompt).add(response).value());
  if (correct) return rng.next_in(0.55, 0.90);
  // With probability inversion_probability an incorrect response lands in a
  // band strictly above the correct band.
  if (rng.chance(cfg_.inversion_probability)) return rng.next_in(0.91, 0.99);
  return rng.next_in(0.05, 0.45);
}

}  // namespace prefforge

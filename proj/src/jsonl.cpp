#include "prefforge/jsonl.hpp"

#include <fstream>
#include <stdexcept>

namespace prefforge {

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::vector<json> records;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": invalid JSON: " + e.what());
    }
  }
  return records;
}

std::string to_jsonl_string(std::span<const json> records) {
  std::string out;
  for (const auto& record : records) {
    out += record.dump();
    out.push_back('\n');
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
    out << content;
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_jsonl(const std::filesystem::path& path, std::span<const json> records) {
  write_text_file(path, to_jsonl_string(records));
}

json problem_to_json(const MathProblem& p) {
  return json{{"id", p.id},
              {"query", p.query},
              {"answer", p.gold_answer.str()},
              {"solution", p.gold_solution}};
}

MathProblem problem_from_json(const json& j) {
  MathProblem p;
  p.id = j.at("id").get<std::string>();
  p.query = j.at("query").get<std::string>();
  auto gold = CanonicalNumber::canonicalize(j.at("answer").get<std::string>());
  if (!gold) throw std::runtime_error("problem record has empty answer: " + p.id);
  p.gold_answer = *gold;
  if (j.contains("solution")) p.gold_solution = j["solution"].get<std::string>();
  return p;
}

json completion_to_json(const Completion& c) {
  json j{{"problem_id", c.problem_id},
         {"strategy", strategy_name(c.strategy)},
         {"index", c.index},
         {"text", c.text},
         {"prompt_tokens", c.prompt_tokens},
         {"output_tokens", c.output_tokens},
         {"flags", c.flags}};
  j["thought"] = c.thought ? json(*c.thought) : json(nullptr);
  return j;
}

Completion completion_from_json(const json& j) {
  Completion c;
  c.problem_id = j.at("problem_id").get<std::string>();
  c.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  c.index = j.at("index").get<int>();
  c.text = j.at("text").get<std::string>();
  c.prompt_tokens = j.at("prompt_tokens").get<long>();
  c.output_tokens = j.at("output_tokens").get<long>();
  if (j.contains("flags")) c.flags = j["flags"].get<std::vector<std::string>>();
  if (j.contains("thought") && j["thought"].is_string()) {
    c.thought = j["thought"].get<std::string>();
  }
  return c;
}

json scored_to_json(const ScoredCompletion& s) {
  json j = completion_to_json(s.completion);
  j["reward"] = s.reward;
  j["correct"] = s.correct;
  j["judge_score"] = s.judge_score ? json(*s.judge_score) : json(nullptr);
  j["excluded"] = s.excluded;
  return j;
}

ScoredCompletion scored_from_json(const json& j) {
  ScoredCompletion s;
  s.completion = completion_from_json(j);
  s.reward = j.at("reward").get<double>();
  s.correct = j.at("correct").get<bool>();
  if (j.contains("judge_score") && j["judge_score"].is_number_integer()) {
    s.judge_score = j["judge_score"].get<int>();
  }
  if (j.contains("excluded")) s.excluded = j["excluded"].get<bool>();
  return s;
}

json pair_to_json(const PreferencePair& p) {
  return json{{"prompt", p.prompt},
              {"system", p.system_prompt},
              {"chosen", p.chosen},
              {"rejected", p.rejected},
              {"meta",
               {{"problem_id", p.problem_id},
                {"strategy", strategy_name(p.strategy)},
                {"chosen_reward", p.chosen_reward},
                {"rejected_reward", p.rejected_reward}}}};
}

PreferencePair pair_from_json(const json& j) {
  PreferencePair p;
  p.prompt = j.at("prompt").get<std::string>();
  p.system_prompt = j.value("system", "");
  p.chosen = j.at("chosen").get<std::string>();
  p.rejected = j.at("rejected").get<std::string>();
  const auto& meta = j.at("meta");
  p.problem_id = meta.at("problem_id").get<std::string>();
  p.strategy = strategy_from_name(meta.at("strategy").get<std::string>());
  p.chosen_reward = meta.at("chosen_reward").get<double>();
  p.rejected_reward = meta.at("rejected_reward").get<double>();
  return p;
}

json call_record_to_json(const CallRecord& r) {
  return json{{"problem_id", r.problem_id}, {"strategy", strategy_name(r.strategy)},
              {"purpose", purpose_name(r.purpose)}, {"seq", r.seq},
              {"prompt_tokens", r.prompt_tokens}, {"output_tokens", r.output_tokens}};
}

CallRecord call_record_from_json(const json& j) {
  CallRecord r;
  r.problem_id = j.at("problem_id").get<std::string>();
  r.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  if (j.contains("purpose")) r.purpose = purpose_from_name(j["purpose"].get<std::string>());
  r.seq = j.value("seq", 0);
  r.prompt_tokens = j.at("prompt_tokens").get<long>();
  r.output_tokens = j.at("output_tokens").get<long>();
  return r;
}

json reward_item_to_json(const RewardEvalItem& item) {
  return json{{"model_correct", item.model_correct},
              {"model_reward", item.model_reward},
              {"gt_reward", item.gt_reward}};
}

RewardEvalItem reward_item_from_json(const json& j) {
  RewardEvalItem item;
  item.model_correct = j.at("model_correct").get<bool>();
  item.model_reward = j.at("model_reward").get<double>();
  item.gt_reward = j.at("gt_reward").get<double>();
  return item;
}

json reward_counts_to_json(const RewardEvalCounts& counts) {
  json j{{"cl", counts.cl}, {"ch", counts.ch}, {"il", counts.il}, {"ih", counts.ih},
         {"total", counts.total()}};
  auto rate = counts.error_rate();
  j["error_rate"] = rate ? json(*rate) : json(nullptr);
  return j;
}

json loss_sample_to_json(const LossSample& s) {
  json j{{"logp_w_policy", s.logp_w_policy},
         {"logp_l_policy", s.logp_l_policy},
         {"len_w", s.len_w},
         {"len_l", s.len_l}};
  j["logp_w_ref"] = s.logp_w_ref ? json(*s.logp_w_ref) : json(nullptr);
  j["logp_l_ref"] = s.logp_l_ref ? json(*s.logp_l_ref) : json(nullptr);
  return j;
}

LossSample loss_sample_from_json(const json& j) {
  LossSample s;
  s.logp_w_policy = j.at("logp_w_policy").get<double>();
  s.logp_l_policy = j.at("logp_l_policy").get<double>();
  if (j.contains("logp_w_ref") && j["logp_w_ref"].is_number()) {
    s.logp_w_ref = j["logp_w_ref"].get<double>();
  }
  if (j.contains("logp_l_ref") && j["logp_l_ref"].is_number()) {
    s.logp_l_ref = j["logp_l_ref"].get<double>();
  }
  s.len_w = j.at("len_w").get<int>();
  s.len_l = j.at("len_l").get<int>();
  return s;
}

json sweep_config_to_json(const SweepConfig& c) {
  json j{{"method", sweep_method_name(c.method)},
         {"eta", c.eta},
         {"strategy", strategy_name(c.strategy)}};
  j["beta"] = c.beta ? json(*c.beta) : json(nullptr);
  j["gamma"] = c.gamma ? json(*c.gamma) : json(nullptr);
  return j;
}

json filter_report_to_json(const FilterReport& report) {
  json reasons = json::object();
  for (const auto& [reason, count] : report.rejected_reasons) reasons[reason] = count;
  json j{{"problems_in", report.problems_in},
         {"pairs_out", report.pairs_out},
         {"rejected_reasons", reasons}};
  auto rate = report.rate();
  j["rate"] = rate ? json(*rate) : json(nullptr);
  return j;
}

json budget_report_to_json(const std::map<Strategy, TokenBudget>& budgets,
                           const std::map<Strategy, TokenBudget>& completion_view,
                           Strategy baseline) {
  json strategies = json::object();
  auto base = budgets.find(baseline);
  for (const auto& [strategy, budget] : budgets) {
    json entry{{"t_p", budget.mean_prompt_tokens},
               {"t_o", budget.mean_output_tokens},
               {"total", budget.total()},
               {"problems", budget.problems}};
    entry["relative_to_baseline"] =
        base != budgets.end() ? json(round2(relative_compute(budget, base->second))) : json(nullptr);
    auto cv = completion_view.find(strategy);
    if (cv != completion_view.end()) {
      entry["per_completion_view"] = {{"t_p", cv->second.mean_prompt_tokens},
                                      {"t_o", cv->second.mean_output_tokens},
                                      {"total", cv->second.total()}};
    }
    strategies[std::string(strategy_name(strategy))] = std::move(entry);
  }
  return json{{"baseline", strategy_name(baseline)}, {"strategies", strategies}};
}

json mcts_tree_to_json(const MctsNode& node) {
  json children = json::array();
  for (const auto& child : node.children) children.push_back(mcts_tree_to_json(*child));
  return json{{"candidate_text", node.candidate_text},
              {"visits", node.visits},
              {"value_sum", node.value_sum},
              {"gen_order", node.gen_order},
              {"eval_defaulted", node.eval_defaulted},
              {"children", children}};
}

}  // namespace prefforge

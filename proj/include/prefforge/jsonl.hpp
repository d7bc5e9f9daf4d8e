#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prefforge/accounting.hpp"
#include "prefforge/backend.hpp"
#include "prefforge/completion.hpp"
#include "prefforge/curate.hpp"
#include "prefforge/evalscore.hpp"
#include "prefforge/prefloss.hpp"
#include "prefforge/problem.hpp"
#include "prefforge/strategies.hpp"

namespace prefforge {

using json = nlohmann::json;

// One parsed object per non-empty line; parse errors carry path:line context.
std::vector<json> read_jsonl(const std::filesystem::path& path);

// Atomic: writes "<path>.tmp" then renames, so no partial file survives an
// error.
void write_jsonl(const std::filesystem::path& path, std::span<const json> records);
void write_text_file(const std::filesystem::path& path, const std::string& content);

std::string to_jsonl_string(std::span<const json> records);

// Interchange schemas. Field names are the wire contract; nlohmann keeps keys
// sorted so serialization is byte-stable.
json problem_to_json(const MathProblem& p);
MathProblem problem_from_json(const json& j);

json completion_to_json(const Completion& c);
Completion completion_from_json(const json& j);

json scored_to_json(const ScoredCompletion& s);
ScoredCompletion scored_from_json(const json& j);

json pair_to_json(const PreferencePair& p);
PreferencePair pair_from_json(const json& j);

json call_record_to_json(const CallRecord& r);
CallRecord call_record_from_json(const json& j);

json reward_item_to_json(const RewardEvalItem& item);
RewardEvalItem reward_item_from_json(const json& j);

json reward_counts_to_json(const RewardEvalCounts& counts);

json loss_sample_to_json(const LossSample& s);
LossSample loss_sample_from_json(const json& j);

json sweep_config_to_json(const SweepConfig& c);

json filter_report_to_json(const FilterReport& report);

json budget_report_to_json(const std::map<Strategy, TokenBudget>& budgets,
                           const std::map<Strategy, TokenBudget>& completion_view,
                           Strategy baseline);

json mcts_tree_to_json(const MctsNode& node);

}  // namespace prefforge

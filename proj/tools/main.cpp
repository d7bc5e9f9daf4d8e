#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "prefforge/accounting.hpp"
#include "prefforge/jsonl.hpp"
#include "prefforge/pipeline.hpp"
#include "prefforge/prefloss.hpp"

namespace pf = prefforge;
using pf::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitUsageError = 2;

struct CommonOptions {
  std::string backend = "mock";
  std::uint64_t seed = 42;
  unsigned concurrency = 0;  // 0: pick a default per backend
  std::string base_url;
  std::string model;
  std::string reward_model;
  std::string api_key;
  int http_attempts = 3;
  int http_backoff_ms = 500;
  double mock_correct_rate = 0.6;
  double mock_inversion = 0.0311;
  std::string config_path;     // consumed during the pre-scan
  std::string config_api_key;  // kept apart so the environment can outrank it
};

// Config file values seed the option defaults before parsing, so explicit
// flags always win: flags > environment > config file > built-in defaults.
void apply_config_file(const std::string& path, CommonOptions& opts) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open config file: " + path);
  json config;
  try {
    in >> config;
  } catch (const json::exception& e) {
    throw CLI::ValidationError("--config", "invalid JSON in " + path + ": " + e.what());
  }
  opts.backend = config.value("backend", opts.backend);
  opts.seed = config.value("seed", opts.seed);
  opts.concurrency = config.value("concurrency", opts.concurrency);
  opts.base_url = config.value("base_url", opts.base_url);
  opts.model = config.value("model", opts.model);
  opts.reward_model = config.value("reward_model", opts.reward_model);
  opts.config_api_key = config.value("api_key", opts.config_api_key);
  opts.http_attempts = config.value("http_attempts", opts.http_attempts);
  opts.http_backoff_ms = config.value("http_backoff_ms", opts.http_backoff_ms);
  opts.mock_correct_rate = config.value("mock_correct_rate", opts.mock_correct_rate);
  opts.mock_inversion = config.value("mock_inversion", opts.mock_inversion);
}

// Pre-scan for --config so its values become the defaults CLI11 parses over.
std::string find_config_flag(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return "";
}

void add_common_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path,
                  "JSON config file (lowest-precedence defaults)");
  cmd->add_option("--backend", opts.backend, "Completion backend")
      ->check(CLI::IsMember({"mock", "http"}))
      ->capture_default_str();
  cmd->add_option("--seed", opts.seed, "Deterministic seed for the mock backend")
      ->capture_default_str();
  cmd->add_option("--concurrency", opts.concurrency,
                  "Worker pool width (default: logical CPUs, capped at 8 for http)");
  cmd->add_option("--base-url", opts.base_url, "OpenAI-compatible endpoint base URL (http)");
  cmd->add_option("--model", opts.model, "Model name (http)");
  cmd->add_option("--reward-model", opts.reward_model,
                  "Reward model name (http; defaults to --model)");
  cmd->add_option("--api-key", opts.api_key, "API key (default: $PREFFORGE_API_KEY)");
  cmd->add_option("--http-attempts", opts.http_attempts, "Retry attempts for transient failures")
      ->capture_default_str();
  cmd->add_option("--http-backoff-ms", opts.http_backoff_ms, "Retry backoff base")
      ->capture_default_str();
  cmd->add_option("--mock-correct-rate", opts.mock_correct_rate,
                  "Mock: probability a generated solution is correct")
      ->capture_default_str();
  cmd->add_option("--mock-inversion", opts.mock_inversion,
                  "Mock: probability an incorrect response outscores correct ones")
      ->capture_default_str();
}

pf::PipelineConfig build_pipeline_config(const CommonOptions& opts, pf::Strategy strategy) {
  pf::PipelineConfig cfg;
  cfg.backend = opts.backend == "http" ? pf::BackendKind::http : pf::BackendKind::mock;
  cfg.seed = opts.seed;
  cfg.strategy = pf::StrategyConfig::defaults(strategy);
  cfg.mock.seed = opts.seed;
  cfg.mock.correct_rate = opts.mock_correct_rate;
  cfg.mock.inversion_probability = opts.mock_inversion;
  cfg.http.base_url = opts.base_url;
  cfg.http.model = opts.model;
  cfg.http.reward_model = opts.reward_model;
  // API key precedence: --api-key > PREFFORGE_API_KEY > config file.
  cfg.http.api_key = opts.api_key;
  if (cfg.http.api_key.empty()) {
    if (const char* env = std::getenv(pf::kApiKeyEnvVar)) cfg.http.api_key = env;
  }
  if (cfg.http.api_key.empty()) cfg.http.api_key = opts.config_api_key;
  cfg.http.max_attempts = opts.http_attempts;
  cfg.http.backoff_base_ms = opts.http_backoff_ms;

  unsigned width = opts.concurrency;
  if (width == 0) {
    width = std::max(1u, std::thread::hardware_concurrency());
    if (cfg.backend == pf::BackendKind::http) width = std::min(width, 8u);
  }
  cfg.concurrency = width;
  return cfg;
}

std::vector<pf::MathProblem> load_problems(const std::string& input, const std::string& format,
                                           int mock_corpus) {
  if (mock_corpus > 0) return pf::make_mock_problems(mock_corpus);
  if (input.empty()) {
    throw CLI::ValidationError("--input", "an input problems file (or --mock-corpus) is required");
  }
  auto result = pf::ingest_problems(input, pf::dataset_format_from_name(format));
  for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";
  if (result.skipped > 0) {
    std::cerr << "warning: skipped " << result.skipped << " record(s)\n";
  }
  return result.problems;
}

void emit_report(const json& report, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    pf::write_text_file(out_path, report.dump(2) + "\n");
  }
}

int cmd_generate(const CommonOptions& opts, const std::string& strategy_name,
                 const std::string& input, const std::string& format, int mock_corpus,
                 int n_completions, const std::string& out, const std::string& calls_out,
                 const pf::MctsConfig& mcts_opts, const std::optional<double>& temperature,
                 const std::optional<double>& top_p, const std::optional<int>& top_k,
                 const std::optional<int>& max_tokens) {
  pf::Strategy strategy = pf::strategy_from_name(strategy_name);
  pf::PipelineConfig cfg = build_pipeline_config(opts, strategy);
  cfg.strategy.n_completions = n_completions;
  if (strategy == pf::Strategy::mcts) cfg.strategy.mcts = mcts_opts;
  if (temperature) cfg.strategy.params.temperature = *temperature;
  if (top_p) cfg.strategy.params.top_p = *top_p;
  if (top_k) cfg.strategy.params.top_k = *top_k;
  if (max_tokens) cfg.strategy.params.max_tokens = *max_tokens;
  cfg.validate();

  std::vector<pf::MathProblem> problems = load_problems(input, format, mock_corpus);
  std::cerr << "generating " << strategy_name << " completions for " << problems.size()
            << " problem(s), concurrency " << cfg.concurrency << "\n";

  auto backend = pf::make_backend(cfg);
  pf::GenerateResult result = pf::run_generate(problems, cfg.strategy, *backend, cfg.concurrency);

  std::vector<json> completion_records;
  completion_records.reserve(result.completions.size());
  for (const auto& c : result.completions) completion_records.push_back(pf::completion_to_json(c));
  pf::write_jsonl(out, completion_records);

  if (!calls_out.empty()) {
    std::vector<json> call_records;
    call_records.reserve(result.calls.size());
    for (const auto& call : result.calls) call_records.push_back(pf::call_record_to_json(call));
    pf::write_jsonl(calls_out, call_records);
  }

  json summary{{"problems", result.summary.problems},
               {"completions", result.summary.completions},
               {"backend_calls", result.summary.backend_calls},
               {"prompt_tokens", result.summary.prompt_tokens},
               {"output_tokens", result.summary.output_tokens},
               {"out", out}};
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_score(const CommonOptions& opts, const std::string& input,
              const std::string& problems_path, const std::string& format, int mock_corpus,
              const std::string& mode_name, const std::string& out) {
  pf::PipelineConfig cfg = build_pipeline_config(opts, pf::Strategy::baseline);
  pf::CorrectnessMode mode = pf::correctness_mode_from_name(mode_name);

  std::vector<pf::Completion> completions;
  for (const auto& record : pf::read_jsonl(input)) {
    completions.push_back(pf::completion_from_json(record));
  }
  auto problems = pf::problem_index(load_problems(problems_path, format, mock_corpus));

  auto backend = pf::make_backend(cfg);
  pf::ScoreOutcome outcome = pf::run_score(completions, problems, *backend, mode, cfg.concurrency);

  std::vector<json> records;
  records.reserve(outcome.scored.size());
  long correct = 0;
  for (const auto& sc : outcome.scored) {
    if (sc.correct) ++correct;
    records.push_back(pf::scored_to_json(sc));
  }
  pf::write_jsonl(out, records);

  json summary{{"completions", completions.size()},
               {"scored", outcome.scored.size()},
               {"excluded", outcome.excluded},
               {"correct", correct},
               {"mode", pf::correctness_mode_name(mode)},
               {"out", out}};
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_filter(const std::string& input, const std::string& problems_path,
               const std::string& format, int mock_corpus, int n_completions,
               const std::string& out, std::int64_t subsample, std::uint64_t seed,
               const std::string& report_out) {
  std::vector<pf::ScoredCompletion> scored;
  for (const auto& record : pf::read_jsonl(input)) {
    scored.push_back(pf::scored_from_json(record));
  }
  auto problems = pf::problem_index(load_problems(problems_path, format, mock_corpus));

  pf::BuildPairsResult result = pf::run_filter(scored, problems, n_completions);
  std::vector<pf::PreferencePair> pairs = std::move(result.pairs);
  if (subsample >= 0) {
    pairs = pf::subsample_pairs(pairs, static_cast<std::size_t>(subsample), seed);
  }

  std::vector<json> records;
  records.reserve(pairs.size());
  for (const auto& pair : pairs) records.push_back(pf::pair_to_json(pair));
  pf::write_jsonl(out, records);

  json report = pf::filter_report_to_json(result.report);
  report["pairs_written"] = pairs.size();
  report["out"] = out;
  emit_report(report, report_out);
  return kExitOk;
}

int cmd_eval_reward(const std::string& input, const std::string& out) {
  std::vector<pf::RewardEvalItem> items;
  for (const auto& record : pf::read_jsonl(input)) {
    items.push_back(pf::reward_item_from_json(record));
  }
  pf::RewardEvalCounts counts = pf::eval_reward_model(items);
  emit_report(pf::reward_counts_to_json(counts), out);
  return kExitOk;
}

int cmd_budget(const std::string& input, const std::string& completions_path,
               const std::string& baseline_name, const std::string& out) {
  std::vector<pf::CallRecord> calls;
  for (const auto& record : pf::read_jsonl(input)) {
    calls.push_back(pf::call_record_from_json(record));
  }
  auto budgets = pf::tally(calls);

  std::map<pf::Strategy, pf::TokenBudget> completion_view;
  if (!completions_path.empty()) {
    std::vector<pf::Completion> completions;
    for (const auto& record : pf::read_jsonl(completions_path)) {
      completions.push_back(pf::completion_from_json(record));
    }
    completion_view = pf::tally_completions(completions);
  }

  pf::Strategy baseline = pf::strategy_from_name(baseline_name);
  if (!budgets.count(baseline)) {
    std::cerr << "warning: baseline strategy '" << baseline_name
              << "' absent from input; relative_to_baseline reported as null\n";
  }
  emit_report(pf::budget_report_to_json(budgets, completion_view, baseline), out);
  return kExitOk;
}

int cmd_loss(const std::string& input, const std::string& method_name, double beta, double gamma,
             double lambda, bool do_grad_check, double fd_step, const std::string& out) {
  pf::LossConfig cfg;
  cfg.method = pf::loss_method_from_name(method_name);
  cfg.beta = beta;
  cfg.gamma = gamma;
  cfg.lambda = lambda;
  cfg.validate();

  std::vector<pf::LossSample> samples;
  for (const auto& record : pf::read_jsonl(input)) {
    samples.push_back(pf::loss_sample_from_json(record));
  }
  pf::LossResult mean = pf::batch_loss(samples, cfg);

  json report{{"method", method_name},
              {"samples", samples.size()},
              {"mean_loss", mean.loss},
              {"mean_grad",
               {{"logp_w_policy", mean.grad.w_policy},
                {"logp_l_policy", mean.grad.l_policy},
                {"logp_w_ref", mean.grad.w_ref},
                {"logp_l_ref", mean.grad.l_ref}}},
              {"clamped", mean.clamped}};
  if (do_grad_check) {
    double worst = 0.0;
    for (const auto& sample : samples) {
      worst = std::max(worst, pf::grad_check(sample, cfg, fd_step));
    }
    report["grad_check_max_rel_error"] = worst;
    report["grad_check_step"] = fd_step;
  }
  emit_report(report, out);
  return kExitOk;
}

int cmd_sweep_plan(const std::string& out) {
  std::vector<json> records;
  for (const auto& config : pf::sweep_plan()) {
    records.push_back(pf::sweep_config_to_json(config));
  }
  if (out.empty()) {
    std::cout << pf::to_jsonl_string(records);
  } else {
    pf::write_jsonl(out, records);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "prefforge: diversified preference-data generation, scoring, filtering and export for "
      "mathematical reasoning alignment.\n"
      "Config precedence: CLI flags > environment ($PREFFORGE_API_KEY) > --config file > "
      "built-in defaults.\n"
      "Progress goes to stderr; machine-readable output to stdout or --out files."};
  app.require_subcommand(1);

  std::string config_path = find_config_flag(argc, argv);

  auto* generate = app.add_subcommand("generate", "Run a data-generation strategy over problems");
  CommonOptions gen_opts;
  if (!config_path.empty()) {
    try {
      apply_config_file(config_path, gen_opts);
    } catch (const CLI::ValidationError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitUsageError;
    }
  }
  add_common_options(generate, gen_opts);
  std::string gen_strategy;
  std::string gen_input, gen_format = "generic", gen_out = "completions.jsonl", gen_calls_out;
  int gen_mock_corpus = 0, gen_n = 5;
  pf::MctsConfig mcts_opts;
  std::optional<double> gen_temperature, gen_top_p;
  std::optional<int> gen_top_k, gen_max_tokens;
  generate->add_option("--strategy", gen_strategy, "Data-generation strategy")
      ->required()
      ->check(CLI::IsMember({"baseline", "cot", "mcts", "dts"}));
  generate->add_option("--input", gen_input, "Problems JSONL file");
  generate->add_option("--format", gen_format, "Input dataset format")
      ->check(CLI::IsMember({"gsm8k", "metamathqa", "generic"}))
      ->capture_default_str();
  generate->add_option("--mock-corpus", gen_mock_corpus,
                       "Generate N synthetic problems instead of reading --input");
  generate->add_option("--n-completions", gen_n, "Completions per problem")->capture_default_str();
  generate->add_option("--out", gen_out, "Completions JSONL output")->capture_default_str();
  generate->add_option("--calls-out", gen_calls_out, "Backend-call log JSONL (budget input)");
  generate->add_option("--temperature", gen_temperature, "Override sampling temperature");
  generate->add_option("--top-p", gen_top_p, "Override nucleus probability");
  generate->add_option("--top-k", gen_top_k, "Override top-k");
  generate->add_option("--max-tokens", gen_max_tokens, "Override max output tokens");
  generate->add_option("--mcts-exploration", mcts_opts.exploration_weight, "MCTS UCT weight")
      ->capture_default_str();
  generate->add_option("--mcts-simulations", mcts_opts.num_simulations, "MCTS simulations")
      ->capture_default_str();
  generate->add_option("--mcts-depth", mcts_opts.simulation_depth, "MCTS selection depth")
      ->capture_default_str();
  generate->add_option("--mcts-actions", mcts_opts.actions_per_expansion,
                       "MCTS candidates per expansion")
      ->capture_default_str();

  auto* score = app.add_subcommand("score", "Attach rewards and correctness to completions");
  CommonOptions score_opts = gen_opts;  // same config-file seeding
  add_common_options(score, score_opts);
  std::string score_input, score_problems, score_format = "generic";
  std::string score_mode = "answer-match", score_out = "scored.jsonl";
  int score_mock_corpus = 0;
  score->add_option("--input", score_input, "Completions JSONL")->required();
  score->add_option("--problems", score_problems, "Problems JSONL file");
  score->add_option("--format", score_format, "Problems dataset format")
      ->check(CLI::IsMember({"gsm8k", "metamathqa", "generic"}))
      ->capture_default_str();
  score->add_option("--mock-corpus", score_mock_corpus,
                    "Use N synthetic problems instead of --problems");
  score->add_option("--mode", score_mode, "Correctness instrument")
      ->check(CLI::IsMember({"answer-match", "judge"}))
      ->capture_default_str();
  score->add_option("--out", score_out, "Scored JSONL output")->capture_default_str();

  auto* filter = app.add_subcommand("filter", "Mixed-correctness filtering and pair export");
  std::string filter_input, filter_problems, filter_format = "generic";
  std::string filter_out = "pairs.jsonl", filter_report;
  int filter_mock_corpus = 0, filter_n = 5;
  std::int64_t filter_subsample = -1;
  std::uint64_t filter_seed = 42;
  filter->add_option("--input", filter_input, "Scored JSONL")->required();
  filter->add_option("--problems", filter_problems, "Problems JSONL file");
  filter->add_option("--format", filter_format, "Problems dataset format")
      ->check(CLI::IsMember({"gsm8k", "metamathqa", "generic"}))
      ->capture_default_str();
  filter->add_option("--mock-corpus", filter_mock_corpus,
                     "Use N synthetic problems instead of --problems");
  filter->add_option("--n-completions", filter_n, "Completions per problem")
      ->capture_default_str();
  filter->add_option("--out", filter_out, "Pairs JSONL output")->capture_default_str();
  filter->add_option("--subsample", filter_subsample, "Subsample the pairs to this count");
  filter->add_option("--seed", filter_seed, "Subsample seed")->capture_default_str();
  filter->add_option("--report", filter_report, "Write the filter report here instead of stdout");

  auto* eval_reward = app.add_subcommand("eval-reward", "CL/CH/IL/IH reward-model evaluation");
  std::string er_input, er_out;
  eval_reward
      ->add_option("--input", er_input, "Items JSONL (model_correct, model_reward, gt_reward)")
      ->required();
  eval_reward->add_option("--out", er_out, "Write the report here instead of stdout");

  auto* budget = app.add_subcommand("budget", "Token budgets and relative compute per strategy");
  std::string budget_input, budget_completions, budget_baseline = "baseline", budget_out;
  budget->add_option("--input", budget_input, "Backend-call log JSONL")->required();
  budget->add_option("--completions", budget_completions,
                     "Completions JSONL for the per-completion view");
  budget->add_option("--baseline", budget_baseline, "Strategy used as the compute baseline")
      ->check(CLI::IsMember({"baseline", "cot", "mcts", "dts"}))
      ->capture_default_str();
  budget->add_option("--out", budget_out, "Write the report here instead of stdout");

  auto* loss = app.add_subcommand("loss", "Evaluate preference losses over a sample batch");
  std::string loss_input, loss_method = "dpo", loss_out;
  double loss_beta = 0.1, loss_gamma = 0.0, loss_lambda = 1.0, loss_fd_step = 1e-6;
  bool loss_grad_check = false;
  loss->add_option("--input", loss_input, "LossSample JSONL")->required();
  loss->add_option("--method", loss_method, "Loss function")
      ->check(CLI::IsMember({"dpo", "simpo", "orpo"}))
      ->capture_default_str();
  loss->add_option("--beta", loss_beta, "Preference signal strength")->capture_default_str();
  loss->add_option("--gamma", loss_gamma, "SimPO target margin")->capture_default_str();
  loss->add_option("--lambda", loss_lambda, "ORPO preference weight")->capture_default_str();
  loss->add_flag("--grad-check", loss_grad_check, "Also run finite-difference gradient checks");
  loss->add_option("--fd-step", loss_fd_step, "Finite-difference step")->capture_default_str();
  loss->add_option("--out", loss_out, "Write the report here instead of stdout");

  auto* sweep = app.add_subcommand("sweep-plan", "Emit the 76-run hyperparameter sweep grid");
  std::string sweep_out;
  sweep->add_option("--out", sweep_out, "Write the plan here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsageError;
  }

  try {
    if (generate->parsed()) {
      return cmd_generate(gen_opts, gen_strategy, gen_input, gen_format, gen_mock_corpus, gen_n,
                          gen_out, gen_calls_out, mcts_opts, gen_temperature, gen_top_p, gen_top_k,
                          gen_max_tokens);
    }
    if (score->parsed()) {
      return cmd_score(score_opts, score_input, score_problems, score_format, score_mock_corpus,
                       score_mode, score_out);
    }
    if (filter->parsed()) {
      return cmd_filter(filter_input, filter_problems, filter_format, filter_mock_corpus, filter_n,
                        filter_out, filter_subsample, filter_seed, filter_report);
    }
    if (eval_reward->parsed()) return cmd_eval_reward(er_input, er_out);
    if (budget->parsed()) {
      return cmd_budget(budget_input, budget_completions, budget_baseline, budget_out);
    }
    if (loss->parsed()) {
      return cmd_loss(loss_input, loss_method, loss_beta, loss_gamma, loss_lambda, loss_grad_check,
                      loss_fd_step, loss_out);
    }
    if (sweep->parsed()) return cmd_sweep_plan(sweep_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitOk;
}

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "prefforge/canonical_number.hpp"

namespace prefforge {

enum class DatasetFormat { gsm8k, metamathqa, generic };

std::string_view dataset_format_name(DatasetFormat format);
DatasetFormat dataset_format_from_name(std::string_view name);

struct MathProblem {
  std::string id;
  std::string query;
  CanonicalNumber gold_answer;
  std::string gold_solution;

  bool operator==(const MathProblem&) const = default;
};

struct IngestResult {
  std::vector<MathProblem> problems;
  long skipped = 0;  // records dropped for unparseable/missing gold answers
  std::vector<std::string> warnings;
};

// Reads a JSONL dataset. gsm8k records carry {question, answer} with the gold
// value after the final "####"; metamathqa records carry {query, response}
// with the gold value after the final "The answer is:"; generic records carry
// {query, answer} plus optional {id, solution}. Exact-duplicate queries (after
// whitespace normalization) are dropped, keeping the first. Records without an
// id get "<format>-<zero-padded ordinal>".
IngestResult ingest_problems(const std::filesystem::path& path, DatasetFormat format);

// Trim plus collapse of internal whitespace runs; the dedup key.
std::string normalize_query_key(std::string_view query);

}  // namespace prefforge

#include "prefforge/problem.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace prefforge {

namespace {

using json = nlohmann::json;

std::string require_string(const json& record, const char* field, const std::string& where) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw std::runtime_error(where + ": missing field '" + field + "'");
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  if (it->is_number()) {
    std::ostringstream os;
    os << it->get<double>();
    return os.str();
  }
  throw std::runtime_error(where + ": field '" + field + "' is not a string");
}

// Text after the last occurrence of `marker`, trimmed; nullopt when absent.
std::optional<std::string> after_last_marker(const std::string& text, std::string_view marker) {
  auto pos = text.rfind(marker);
  if (pos == std::string::npos) return std::nullopt;
  std::string tail = text.substr(pos + marker.size());
  auto nl = tail.find('\n');
  if (nl != std::string::npos) tail = tail.substr(0, nl);
  return trim(tail);
}

std::string padded_ordinal(DatasetFormat format, long ordinal) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06ld", ordinal);
  return std::string(dataset_format_name(format)) + "-" + buf;
}

}  // namespace

std::string_view dataset_format_name(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::gsm8k: return "gsm8k";
    case DatasetFormat::metamathqa: return "metamathqa";
    case DatasetFormat::generic: return "generic";
  }
  return "generic";
}

DatasetFormat dataset_format_from_name(std::string_view name) {
  if (name == "gsm8k") return DatasetFormat::gsm8k;
  if (name == "metamathqa") return DatasetFormat::metamathqa;
  if (name == "generic") return DatasetFormat::generic;
  throw std::invalid_argument("unknown dataset format: " + std::string(name));
}

std::string normalize_query_key(std::string_view query) {
  std::string out;
  out.reserve(query.size());
  bool in_space = false;
  for (unsigned char c : query) {
    if (std::isspace(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

IngestResult ingest_problems(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open dataset file: " + path.string());
  }

  IngestResult result;
  std::set<std::string> seen_queries;
  std::string line;
  long line_no = 0;
  long ordinal = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::string where = path.string() + ":" + std::to_string(line_no);

    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(where + ": invalid JSON: " + e.what());
    }

    MathProblem p;
    std::optional<std::string> raw_gold;
    long this_ordinal = ordinal++;
    switch (format) {
      case DatasetFormat::gsm8k: {
        p.query = require_string(record, "question", where);
        p.gold_solution = require_string(record, "answer", where);
        raw_gold = after_last_marker(p.gold_solution, "####");
        if (!raw_gold) {
          result.warnings.push_back(where + ": no '####' marker, record skipped");
        }
        break;
      }
      case DatasetFormat::metamathqa: {
        p.query = require_string(record, "query", where);
        p.gold_solution = require_string(record, "response", where);
        raw_gold = after_last_marker(p.gold_solution, "The answer is:");
        if (!raw_gold) {
          result.warnings.push_back(where + ": no 'The answer is:' marker, record skipped");
        }
        break;
      }
      case DatasetFormat::generic: {
        p.query = require_string(record, "query", where);
        raw_gold = require_string(record, "answer", where);
        if (record.contains("solution") && record["solution"].is_string()) {
          p.gold_solution = record["solution"].get<std::string>();
        }
        if (record.contains("id") && record["id"].is_string()) {
          p.id = record["id"].get<std::string>();
        }
        break;
      }
    }

    std::optional<CanonicalNumber> gold;
    if (raw_gold) gold = CanonicalNumber::canonicalize(*raw_gold);
    if (!gold) {
      if (raw_gold) {
        result.warnings.push_back(where + ": unparseable gold answer, record skipped");
      }
      ++result.skipped;
      continue;
    }
    p.gold_answer = *gold;
    if (p.id.empty()) p.id = padded_ordinal(format, this_ordinal);

    if (!seen_queries.insert(normalize_query_key(p.query)).second) continue;
    result.problems.push_back(std::move(p));
  }
  return result;
}

}  // namespace prefforge

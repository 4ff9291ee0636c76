#include "data/records.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "data/tokenizer.hpp"

namespace reltrace {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
  throw ValidationError("line " + std::to_string(line_no) + ": " + what);
}

ordered_json parse_line(const std::string& line, std::size_t line_no) {
  ordered_json j = ordered_json::parse(line, nullptr, false);
  if (j.is_discarded()) line_error(line_no, "invalid json");
  if (!j.is_object()) line_error(line_no, "expected a json object");
  return j;
}

std::string require_string(const ordered_json& j, const char* field, std::size_t line_no, bool allow_empty = false) {
  if (!j.contains(field)) line_error(line_no, std::string("missing field '") + field + "'");
  if (!j.at(field).is_string()) line_error(line_no, std::string("field '") + field + "' must be a string");
  std::string v = normalize_text(j.at(field).get<std::string>());
  if (v.empty() && !allow_empty) line_error(line_no, std::string("field '") + field + "' is empty");
  return v;
}

long require_integer(const ordered_json& j, const char* field, std::size_t line_no) {
  if (!j.contains(field)) line_error(line_no, std::string("missing field '") + field + "'");
  if (!j.at(field).is_number_integer()) line_error(line_no, std::string("field '") + field + "' must be an integer");
  return j.at(field).get<long>();
}

// Accepts the canonical spelling and the transposed one seen in the wild.
std::string relation_id_field(const ordered_json& j, std::size_t line_no, bool required) {
  if (j.contains("relation_id")) return require_string(j, "relation_id", line_no);
  if (j.contains("relaiton_id")) return require_string(j, "relaiton_id", line_no);
  if (required) line_error(line_no, "missing field 'relation_id'");
  return "";
}

template <typename T, typename ParseFn>
std::vector<T> load_jsonl(const std::string& path, ParseFn parse) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open " + path);
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    out.push_back(parse(line, line_no));
  }
  return out;
}

void write_lines(const std::vector<std::string>& lines, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot open " + path + " for writing");
  for (const auto& l : lines) f << l << "\n";
  if (!f) throw ValidationError("write failed for " + path);
}

}  // namespace

MigratedRecord migrated_from_json(const std::string& line, std::size_t line_no) {
  ordered_json j = parse_line(line, line_no);
  MigratedRecord r;
  r.relation_triple_id = require_integer(j, "relation_triple_id", line_no);
  r.subject = require_string(j, "subject", line_no);
  r.relation = require_string(j, "relation", line_no);
  r.template_text = require_string(j, "template", line_no, /*allow_empty=*/true);
  r.prediction = require_string(j, "prediction", line_no, /*allow_empty=*/true);
  r.prompt = require_string(j, "prompt", line_no);
  r.relation_id = relation_id_field(j, line_no, /*required=*/true);
  if (!r.prediction.empty() && r.prediction != r.relation) {
    line_error(line_no, "prediction does not match relation");
  }
  return r;
}

EvalCase eval_case_from_json(const std::string& line, std::size_t line_no) {
  ordered_json j = parse_line(line, line_no);
  EvalCase c;
  c.case_id = require_integer(j, "case_id", line_no);
  c.entity_a = require_string(j, "entity_a", line_no);
  c.entity_b = require_string(j, "entity_b", line_no);
  c.sentence = require_string(j, "sentence", line_no);
  c.question = require_string(j, "question", line_no);
  c.target_true = require_string(j, "target_true", line_no);
  c.target_new = require_string(j, "target_new", line_no);
  if (c.target_new == c.target_true) line_error(line_no, "target_new equals target_true");
  if (!j.contains("paraphrase_prompts") || !j.at("paraphrase_prompts").is_array()) {
    line_error(line_no, "missing or non-array field 'paraphrase_prompts'");
  }
  for (const auto& p : j.at("paraphrase_prompts")) {
    if (!p.is_string()) line_error(line_no, "paraphrase_prompts entries must be strings");
    std::string text = normalize_text(p.get<std::string>());
    if (text.empty()) line_error(line_no, "empty paraphrase prompt");
    c.paraphrase_prompts.push_back(text);
  }
  if (c.paraphrase_prompts.empty()) line_error(line_no, "paraphrase_prompts must not be empty");
  return c;
}

namespace {

KnowledgeTuple tuple_from_json(const std::string& line, std::size_t line_no) {
  ordered_json j = parse_line(line, line_no);
  KnowledgeTuple t;
  t.subject = require_string(j, "subject", line_no);
  t.relation = require_string(j, "relation", line_no);
  t.object = require_string(j, "object", line_no);
  t.relation_id = relation_id_field(j, line_no, /*required=*/true);
  return t;
}

}  // namespace

std::vector<MigratedRecord> load_migrated_jsonl(const std::string& path) {
  return load_jsonl<MigratedRecord>(path, migrated_from_json);
}

std::vector<EvalCase> load_eval_jsonl(const std::string& path) {
  return load_jsonl<EvalCase>(path, eval_case_from_json);
}

std::vector<KnowledgeTuple> load_tuples_jsonl(const std::string& path) {
  return load_jsonl<KnowledgeTuple>(path, tuple_from_json);
}

std::string migrated_to_json(const MigratedRecord& r) {
  ordered_json j;
  j["relation_triple_id"] = r.relation_triple_id;
  j["subject"] = r.subject;
  j["relation"] = r.relation;
  j["template"] = r.template_text;
  j["prediction"] = r.prediction;
  j["prompt"] = r.prompt;
  j["relation_id"] = r.relation_id;
  return j.dump();
}

std::string eval_case_to_json(const EvalCase& c) {
  ordered_json j;
  j["case_id"] = c.case_id;
  j["entity_a"] = c.entity_a;
  j["entity_b"] = c.entity_b;
  j["sentence"] = c.sentence;
  j["question"] = c.question;
  j["target_true"] = c.target_true;
  j["target_new"] = c.target_new;
  j["paraphrase_prompts"] = c.paraphrase_prompts;
  return j.dump();
}

void save_migrated_jsonl(const std::vector<MigratedRecord>& records, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(migrated_to_json(r));
  write_lines(lines, path);
}

void save_eval_jsonl(const std::vector<EvalCase>& cases, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(cases.size());
  for (const auto& c : cases) lines.push_back(eval_case_to_json(c));
  write_lines(lines, path);
}

void save_tuples_jsonl(const std::vector<KnowledgeTuple>& tuples, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(tuples.size());
  for (const auto& t : tuples) {
    ordered_json j;
    j["subject"] = t.subject;
    j["relation"] = t.relation;
    j["object"] = t.object;
    j["relation_id"] = t.relation_id;
    lines.push_back(j.dump());
  }
  write_lines(lines, path);
}

std::vector<std::pair<std::string, long>> relation_frequency(const std::vector<std::string>& relation_names) {
  std::map<std::string, long> counts;
  for (const auto& r : relation_names) ++counts[r];
  std::vector<std::pair<std::string, long>> report(counts.begin(), counts.end());
  std::sort(report.begin(), report.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return report;
}

std::string frequency_csv(const std::vector<std::pair<std::string, long>>& report) {
  std::ostringstream os;
  os << "relation,count\n";
  for (const auto& [name, count] : report) {
    // Quote the name if it contains a comma.
    if (name.find(',') != std::string::npos) {
      os << '"' << name << '"';
    } else {
      os << name;
    }
    os << ',' << count << "\n";
  }
  return os.str();
}

std::vector<MigratedRecord> migrate_raw_jsonl(const std::string& path) {
  long next_id = 0;
  return load_jsonl<MigratedRecord>(path, [&next_id](const std::string& line, std::size_t line_no) {
    ordered_json j = parse_line(line, line_no);
    MigratedRecord r;
    r.relation_triple_id = next_id++;
    if (j.contains("subject")) {
      r.subject = require_string(j, "subject", line_no);
    } else if (j.contains("head")) {
      r.subject = require_string(j, "head", line_no);
    } else {
      line_error(line_no, "missing field 'subject' (or 'head')");
    }
    r.relation = require_string(j, "relation", line_no);
    if (j.contains("prompt")) {
      r.prompt = require_string(j, "prompt", line_no);
    } else if (j.contains("sentence")) {
      r.prompt = require_string(j, "sentence", line_no);
    } else if (j.contains("tokens") && j.at("tokens").is_array()) {
      std::string joined;
      for (const auto& t : j.at("tokens")) {
        if (!t.is_string()) line_error(line_no, "tokens entries must be strings");
        if (!joined.empty()) joined.push_back(' ');
        joined += t.get<std::string>();
      }
      r.prompt = normalize_text(joined);
      if (r.prompt.empty()) line_error(line_no, "empty token list");
    } else {
      line_error(line_no, "missing field 'prompt' (or 'sentence'/'tokens')");
    }
    r.relation_id = relation_id_field(j, line_no, /*required=*/false);
    return r;
  });
}

}  // namespace reltrace

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "numerics/errors.hpp"

namespace reltrace {

// The (s, r, o) fact unit. The relation surface name is the prediction
// target; relation_id is the short code (e.g. "p931").
struct KnowledgeTuple {
  std::string subject;
  std::string relation;
  std::string object;
  std::string relation_id;
};

// One migrated relation-extraction item (template/prediction may be empty
// until augmentation fills them; a non-empty prediction must equal relation).
struct MigratedRecord {
  long relation_triple_id = 0;
  std::string subject;
  std::string relation;
  std::string template_text;
  std::string prediction;
  std::string prompt;
  std::string relation_id;
};

// Counterfactual evaluation record: the true relation plus a deliberately
// wrong target_new to be written into the model.
struct EvalCase {
  long case_id = 0;
  std::string entity_a;
  std::string entity_b;
  std::string sentence;
  std::string question;  // rendered standard prompt
  std::string target_true;
  std::string target_new;
  std::vector<std::string> paraphrase_prompts;
};

// JSONL IO. One object per line; loaders validate every record and attach
// the 1-based line number to each error. Both "relation_id" and the
// "relaiton_id" spelling are accepted on input; output always uses the
// canonical spelling with a fixed field order, so save/load round-trips are
// byte-stable.
std::vector<MigratedRecord> load_migrated_jsonl(const std::string& path);
std::vector<EvalCase> load_eval_jsonl(const std::string& path);
std::vector<KnowledgeTuple> load_tuples_jsonl(const std::string& path);
void save_migrated_jsonl(const std::vector<MigratedRecord>& records, const std::string& path);
void save_eval_jsonl(const std::vector<EvalCase>& cases, const std::string& path);
void save_tuples_jsonl(const std::vector<KnowledgeTuple>& tuples, const std::string& path);

// Single-record JSON (used by the JSONL writers and the C API).
std::string migrated_to_json(const MigratedRecord& r);
std::string eval_case_to_json(const EvalCase& c);
MigratedRecord migrated_from_json(const std::string& line, std::size_t line_no);
EvalCase eval_case_from_json(const std::string& line, std::size_t line_no);

// Descending by count, ties broken lexicographically by relation name.
std::vector<std::pair<std::string, long>> relation_frequency(const std::vector<std::string>& relation_names);
std::string frequency_csv(const std::vector<std::pair<std::string, long>>& report);

// Lenient raw ingestion for `migrate`: accepts subject|head, relation,
// prompt|sentence|tokens[], optional relation_id (either spelling).
std::vector<MigratedRecord> migrate_raw_jsonl(const std::string& path);

}  // namespace reltrace

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "data/records.hpp"
#include "data/tokenizer.hpp"

namespace reltrace {

struct WorldConfig {
  std::uint64_t seed = 1;
  std::size_t n_subjects = 64;
  std::size_t n_relations = 64;
  std::size_t n_objects = 64;
  std::size_t cases_per_relation = 9;
  std::size_t max_prompt_tokens = 63;  // leaves room for the answer token

  void validate() const;
};

// Synthetic fact world: tuples, rendered counterfactual cases, training
// texts, and a tokenizer/registry covering all of them.
struct World {
  WorldConfig config;
  std::vector<KnowledgeTuple> tuples;
  std::vector<EvalCase> cases;
  std::vector<std::string> training_texts;  // case question + answer token
  Tokenizer tokenizer;
  RelationRegistry registry;

  int answer_token_for(const std::string& relation_name) const;
};

// The fixed standard prompt, lowercased: entities quoted into
// "what is the relation between 'a' and 'b' in the sentence?" followed by
// the sentence context.
std::string render_question(const std::string& entity_a, const std::string& entity_b, const std::string& sentence);

World generate_world(const WorldConfig& cfg);

// Directory layout: tuples.jsonl, cases.jsonl, train.txt, tokenizer.json,
// world.json (manifest with config and registry).
void save_world(const World& world, const std::string& dir);
World load_world(const std::string& dir);

}  // namespace reltrace

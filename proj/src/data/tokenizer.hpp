#pragma once

#include <map>
#include <string>
#include <vector>

#include "numerics/errors.hpp"

namespace reltrace {

// Word-level tokenizer: lowercase, whitespace-split. Ids are stable across
// runs (specials, then one answer token per registered relation, then the
// corpus words in sorted order). encode/decode round-trips any
// single-space-separated in-vocabulary text.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr std::size_t kNumSpecials = 2;

  static Tokenizer build(const std::vector<std::string>& texts, const std::vector<std::string>& relation_names);

  std::vector<int> encode(const std::string& text) const;
  std::string decode(const std::vector<int>& ids) const;

  // -1 when the word is not in the vocabulary.
  int lookup(const std::string& word) const;
  const std::string& word(int id) const;

  std::size_t vocab_size() const { return id_to_word_.size(); }
  std::size_t n_relations() const { return n_relations_; }
  int answer_token(std::size_t relation_index) const;

  std::string to_json_string() const;
  static Tokenizer from_json_string(const std::string& text);

  bool operator==(const Tokenizer& o) const {
    return id_to_word_ == o.id_to_word_ && n_relations_ == o.n_relations_;
  }

 private:
  std::vector<std::string> id_to_word_;
  std::map<std::string, int> word_to_id_;
  std::size_t n_relations_ = 0;
};

// Normalization applied to all ingested text: lowercase, collapse whitespace.
std::string normalize_text(const std::string& text);
std::vector<std::string> split_words(const std::string& text);

struct RelationEntry {
  std::string name;         // surface name, lowercase
  std::string relation_id;  // e.g. "p931"
  int answer_token;         // dedicated single answer token id
};

// Ordered set of distinct relations; the answer-token mapping is injective
// by construction (one dedicated token per relation).
struct RelationRegistry {
  std::vector<RelationEntry> entries;

  int index_of_name(const std::string& name) const;
  const RelationEntry& at(std::size_t i) const { return entries.at(i); }
  std::size_t size() const { return entries.size(); }
  void validate() const;
};

}  // namespace reltrace

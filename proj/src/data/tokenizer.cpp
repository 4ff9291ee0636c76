#include "data/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include <json.hpp>

namespace reltrace {

std::string normalize_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = true;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space && !out.empty()) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream is(normalize_text(text));
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

Tokenizer Tokenizer::build(const std::vector<std::string>& texts, const std::vector<std::string>& relation_names) {
  if (texts.empty()) throw ValidationError("build_vocab: empty corpus");
  Tokenizer tok;
  tok.n_relations_ = relation_names.size();
  tok.id_to_word_ = {"<pad>", "<unk>"};
  for (std::size_t i = 0; i < relation_names.size(); ++i) {
    tok.id_to_word_.push_back("<rel_" + std::to_string(i) + ">");
  }
  std::set<std::string> distinct;
  for (const auto& t : texts) {
    for (const auto& w : split_words(t)) distinct.insert(w);
  }
  for (const auto& w : distinct) {
    bool reserved = false;
    for (const auto& existing : tok.id_to_word_) {
      if (existing == w) {
        reserved = true;
        break;
      }
    }
    if (!reserved) tok.id_to_word_.push_back(w);
  }
  for (std::size_t i = 0; i < tok.id_to_word_.size(); ++i) {
    tok.word_to_id_[tok.id_to_word_[i]] = static_cast<int>(i);
  }
  return tok;
}

std::vector<int> Tokenizer::encode(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& w : split_words(text)) {
    auto it = word_to_id_.find(w);
    ids.push_back(it == word_to_id_.end() ? kUnk : it->second);
  }
  return ids;
}

std::string Tokenizer::decode(const std::vector<int>& ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += word(ids[i]);
  }
  return out;
}

int Tokenizer::lookup(const std::string& word) const {
  auto it = word_to_id_.find(word);
  return it == word_to_id_.end() ? -1 : it->second;
}

const std::string& Tokenizer::word(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_word_.size()) {
    throw ValidationError("Tokenizer: id " + std::to_string(id) + " out of range");
  }
  return id_to_word_[static_cast<std::size_t>(id)];
}

int Tokenizer::answer_token(std::size_t relation_index) const {
  if (relation_index >= n_relations_) {
    throw ValidationError("Tokenizer: relation index " + std::to_string(relation_index) + " out of range");
  }
  return static_cast<int>(kNumSpecials + relation_index);
}

std::string Tokenizer::to_json_string() const {
  nlohmann::ordered_json j;
  j["version"] = "rttok/1";
  j["n_relations"] = n_relations_;
  j["words"] = id_to_word_;
  return j.dump();
}

Tokenizer Tokenizer::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.contains("version") || j["version"] != "rttok/1") {
    throw ValidationError("Tokenizer: bad tokenizer json");
  }
  Tokenizer tok;
  tok.n_relations_ = j.at("n_relations").get<std::size_t>();
  tok.id_to_word_ = j.at("words").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < tok.id_to_word_.size(); ++i) {
    tok.word_to_id_[tok.id_to_word_[i]] = static_cast<int>(i);
  }
  return tok;
}

int RelationRegistry::index_of_name(const std::string& name) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void RelationRegistry::validate() const {
  std::set<std::string> names;
  std::set<int> tokens;
  for (const auto& e : entries) {
    if (e.name.empty()) throw ValidationError("RelationRegistry: empty relation name");
    if (!names.insert(e.name).second) {
      throw ValidationError("RelationRegistry: duplicate relation '" + e.name + "'");
    }
    if (!tokens.insert(e.answer_token).second) {
      throw ValidationError("RelationRegistry: answer token reused for '" + e.name + "'");
    }
  }
}

}  // namespace reltrace

#include "data/world.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "numerics/rng.hpp"

namespace reltrace {

namespace {

// Fixed pool of relation surface names; the first ten mirror common
// relation-extraction labels so reports read naturally. Beyond the pool the
// generator falls back to numbered names.
const std::vector<std::string>& relation_name_pool() {
  static const std::vector<std::string> pool = {
      "has part", "instrument", "characters", "mountain range", "country", "screenwriter", "notable work",
      "occupation", "composer", "located on terrain feature", "place served by transport hub",
      "member of political party", "original language", "operating system", "field of work", "sports season",
      "headquarters location", "constellation", "military branch", "position held", "record label", "child",
      "main subject", "participant", "religion", "spouse", "movement", "successful candidate", "winner",
      "operator", "league", "residence", "work location", "subsidiary", "architect", "publisher", "director",
      "developer", "performer", "manufacturer", "crosses", "sibling", "tributary", "capital of", "founded by",
      "follows", "genre", "owned by", "platform", "mouth of the watercourse", "nominated for", "distributor",
      "instance of", "heritage designation", "language of work", "applies to jurisdiction", "located in time zone",
      "head of government", "voice type", "director of photography", "production company", "taxon rank",
      "military rank", "licensed to broadcast to", "said to be the same as", "sport", "father", "participant of",
      "has quality", "competition class", "present in work", "member of"};
  return pool;
}

const std::vector<std::string>& sentence_templates() {
  // All end with the object entity before the period so the final token's
  // context carries the pair.
  static const std::vector<std::string> tpl = {
      "early records note that the {s} is tied to the {o} .",
      "observers often mention the {s} together with the {o} .",
      "one summary links the {s} directly to the {o} .",
      "a recent note pairs the {s} with the {o} .",
  };
  return tpl;
}

const std::vector<std::string>& paraphrase_templates() {
  static const std::vector<std::string> tpl = {
      "in the sentence, how are '{a}' and '{b}' related?",
      "which relation connects '{a}' and '{b}' in the sentence?",
  };
  return tpl;
}

std::string substitute(std::string text, const std::string& key, const std::string& value) {
  std::size_t pos;
  while ((pos = text.find(key)) != std::string::npos) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

// Pronounceable two/three-syllable names, deterministic per rng stream.
std::string make_entity_name(RngState& rng) {
  static const char* consonants = "bdfgklmnprstvz";
  static const char* vowels = "aeiou";
  const std::size_t n_syll = 2 + rng.uniform_below(2);
  std::string name;
  for (std::size_t s = 0; s < n_syll; ++s) {
    name.push_back(consonants[rng.uniform_below(14)]);
    name.push_back(vowels[rng.uniform_below(5)]);
  }
  if (rng.uniform_below(2) == 0) name.push_back(consonants[rng.uniform_below(14)]);
  return name;
}

std::vector<std::string> make_distinct_names(RngState& rng, std::size_t count, std::set<std::string>& used) {
  std::vector<std::string> names;
  names.reserve(count);
  while (names.size() < count) {
    std::string n = make_entity_name(rng);
    if (used.insert(n).second) names.push_back(n);
  }
  return names;
}

std::string zero_pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

void WorldConfig::validate() const {
  if (n_relations < 2) throw ValidationError("generate_world: need at least 2 relations");
  if (cases_per_relation < 1) throw ValidationError("generate_world: cases_per_relation must be >= 1");
  if (n_subjects < 1 || n_objects < 1) throw ValidationError("generate_world: need subjects and objects");
  const std::size_t needed = n_relations * cases_per_relation;
  if (n_subjects * n_objects < needed) {
    throw ValidationError("generate_world: " + std::to_string(needed) + " unique (subject, object) pairs needed but only " +
                          std::to_string(n_subjects * n_objects) + " available");
  }
}

std::string render_question(const std::string& entity_a, const std::string& entity_b, const std::string& sentence) {
  if (entity_a.empty() || entity_b.empty() || sentence.empty()) {
    throw ValidationError("render_question: empty input");
  }
  std::string q = "what is the relation between '" + entity_a + "' and '" + entity_b + "' in the sentence? " + sentence;
  return normalize_text(q);
}

int World::answer_token_for(const std::string& relation_name) const {
  int idx = registry.index_of_name(relation_name);
  if (idx < 0) throw ValidationError("unknown relation '" + relation_name + "'");
  return registry.entries[static_cast<std::size_t>(idx)].answer_token;
}

World generate_world(const WorldConfig& cfg) {
  cfg.validate();
  World world;
  world.config = cfg;

  // Relation surface names.
  std::vector<std::string> relations;
  const auto& pool = relation_name_pool();
  for (std::size_t i = 0; i < cfg.n_relations; ++i) {
    relations.push_back(i < pool.size() ? pool[i] : "relation " + std::to_string(i));
  }

  // Entities: globally distinct names so subject/object mentions never
  // collide in a prompt.
  RngState name_rng(cfg.seed, 1);
  std::set<std::string> used;
  std::vector<std::string> subjects = make_distinct_names(name_rng, cfg.n_subjects, used);
  std::vector<std::string> objects = make_distinct_names(name_rng, cfg.n_objects, used);

  // Unique (subject, object) pairs, sampled deterministically.
  RngState pair_rng(cfg.seed, 2);
  std::set<std::pair<std::size_t, std::size_t>> used_pairs;
  auto next_pair = [&]() {
    while (true) {
      std::size_t s = pair_rng.uniform_below(cfg.n_subjects);
      std::size_t o = pair_rng.uniform_below(cfg.n_objects);
      if (used_pairs.insert({s, o}).second) return std::make_pair(s, o);
    }
  };

  RngState tpl_rng(cfg.seed, 3);
  RngState target_rng(cfg.seed, 4);

  long case_id = 0;
  for (std::size_t r = 0; r < cfg.n_relations; ++r) {
    for (std::size_t c = 0; c < cfg.cases_per_relation; ++c) {
      auto [si, oi] = next_pair();
      const std::string& s = subjects[si];
      const std::string& o = objects[oi];

      const auto& stpl = sentence_templates()[tpl_rng.uniform_below(sentence_templates().size())];
      std::string sentence = substitute(substitute(stpl, "{s}", s), "{o}", o);

      KnowledgeTuple tuple;
      tuple.subject = s;
      tuple.relation = relations[r];
      tuple.object = o;
      tuple.relation_id = "p" + zero_pad(r + 1, 3);
      world.tuples.push_back(tuple);

      EvalCase ec;
      ec.case_id = case_id++;
      ec.entity_a = s;
      ec.entity_b = o;
      ec.sentence = sentence;
      ec.question = render_question(s, o, sentence);
      ec.target_true = relations[r];
      // target_new: uniform over the other R-1 relations.
      std::size_t other = target_rng.uniform_below(cfg.n_relations - 1);
      if (other >= r) ++other;
      ec.target_new = relations[other];
      for (const auto& ptpl : paraphrase_templates()) {
        std::string p = substitute(substitute(ptpl, "{a}", s), "{b}", o) + " " + sentence;
        ec.paraphrase_prompts.push_back(normalize_text(p));
      }
      world.cases.push_back(ec);
    }
  }

  // Tokenizer corpus: training texts plus paraphrases so everything renders
  // in-vocabulary. Answer words are <rel_i> placeholders appended to the
  // question.
  std::vector<std::string> corpus;
  for (std::size_t i = 0; i < world.cases.size(); ++i) {
    const EvalCase& ec = world.cases[i];
    const std::size_t rel_index = i / cfg.cases_per_relation;
    corpus.push_back(ec.question + " <rel_" + std::to_string(rel_index) + ">");
    for (const auto& p : ec.paraphrase_prompts) corpus.push_back(p);
  }
  world.tokenizer = Tokenizer::build(corpus, relations);

  for (std::size_t r = 0; r < cfg.n_relations; ++r) {
    world.registry.entries.push_back(
        RelationEntry{relations[r], "p" + zero_pad(r + 1, 3), world.tokenizer.answer_token(r)});
  }
  world.registry.validate();

  for (std::size_t i = 0; i < world.cases.size(); ++i) {
    const std::size_t rel_index = i / cfg.cases_per_relation;
    world.training_texts.push_back(world.cases[i].question + " <rel_" + std::to_string(rel_index) + ">");
  }

  // Every prompt must fit the default sequence budget with its answer.
  for (const auto& t : world.training_texts) {
    const std::size_t n = world.tokenizer.encode(t).size();
    if (n > cfg.max_prompt_tokens + 1) {
      throw ValidationError("generate_world: training text of " + std::to_string(n) + " tokens exceeds budget " +
                            std::to_string(cfg.max_prompt_tokens + 1));
    }
  }
  return world;
}

void save_world(const World& world, const std::string& dir) {
  std::filesystem::create_directories(dir);
  save_tuples_jsonl(world.tuples, dir + "/tuples.jsonl");
  save_eval_jsonl(world.cases, dir + "/cases.jsonl");
  {
    std::ofstream f(dir + "/train.txt");
    if (!f) throw ValidationError("save_world: cannot write " + dir + "/train.txt");
    for (const auto& t : world.training_texts) f << t << "\n";
  }
  {
    std::ofstream f(dir + "/tokenizer.json");
    f << world.tokenizer.to_json_string() << "\n";
  }
  nlohmann::ordered_json manifest;
  manifest["version"] = "rtworld/1";
  manifest["seed"] = world.config.seed;
  manifest["n_subjects"] = world.config.n_subjects;
  manifest["n_relations"] = world.config.n_relations;
  manifest["n_objects"] = world.config.n_objects;
  manifest["cases_per_relation"] = world.config.cases_per_relation;
  nlohmann::ordered_json regs = nlohmann::ordered_json::array();
  for (const auto& e : world.registry.entries) {
    regs.push_back({{"name", e.name}, {"relation_id", e.relation_id}, {"answer_token", e.answer_token}});
  }
  manifest["relations"] = regs;
  std::ofstream f(dir + "/world.json");
  if (!f) throw ValidationError("save_world: cannot write " + dir + "/world.json");
  f << manifest.dump(2) << "\n";
}

World load_world(const std::string& dir) {
  World world;
  std::ifstream mf(dir + "/world.json");
  if (!mf) throw ValidationError("load_world: missing " + dir + "/world.json");
  nlohmann::json manifest = nlohmann::json::parse(mf, nullptr, false);
  if (manifest.is_discarded() || manifest.value("version", "") != "rtworld/1") {
    throw ValidationError("load_world: bad world.json in " + dir);
  }
  world.config.seed = manifest.at("seed").get<std::uint64_t>();
  world.config.n_subjects = manifest.at("n_subjects").get<std::size_t>();
  world.config.n_relations = manifest.at("n_relations").get<std::size_t>();
  world.config.n_objects = manifest.at("n_objects").get<std::size_t>();
  world.config.cases_per_relation = manifest.at("cases_per_relation").get<std::size_t>();

  world.tuples = load_tuples_jsonl(dir + "/tuples.jsonl");
  world.cases = load_eval_jsonl(dir + "/cases.jsonl");
  {
    std::ifstream f(dir + "/train.txt");
    if (!f) throw ValidationError("load_world: missing " + dir + "/train.txt");
    std::string line;
    while (std::getline(f, line)) {
      if (!line.empty()) world.training_texts.push_back(line);
    }
  }
  {
    std::ifstream f(dir + "/tokenizer.json");
    if (!f) throw ValidationError("load_world: missing " + dir + "/tokenizer.json");
    std::stringstream ss;
    ss << f.rdbuf();
    world.tokenizer = Tokenizer::from_json_string(ss.str());
  }
  for (const auto& e : manifest.at("relations")) {
    world.registry.entries.push_back(
        RelationEntry{e.at("name").get<std::string>(), e.at("relation_id").get<std::string>(),
                      e.at("answer_token").get<int>()});
  }
  world.registry.validate();

  // Cross-checks: every case target must be registered.
  for (const auto& c : world.cases) {
    if (world.registry.index_of_name(c.target_true) < 0 || world.registry.index_of_name(c.target_new) < 0) {
      throw ValidationError("load_world: case " + std::to_string(c.case_id) + " references an unregistered relation");
    }
  }
  return world;
}

}  // namespace reltrace

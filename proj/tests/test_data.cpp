#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "data/endpoint.hpp"
#include "data/records.hpp"
#include "data/tokenizer.hpp"
#include "data/world.hpp"

using namespace reltrace;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  f << content;
}

// The published example record, with the transposed id field spelling.
const char* kExampleRecordLine =
    R"json({"relation_triple_id": 0, "subject": "tjq", "relation": "territorial entity or entities served by this transport hub (airport, train station, etc.)", "template": "{}, a territorial entity or entities served by this transport hub (airport, train station, etc.)", "prediction": "territorial entity or entities served by this transport hub (airport, train station, etc.)", "prompt": "merpati flight 106 departed jakarta ( cgk ) on a domestic flight to tanjung pandan ( tjq ) .", "relaiton_id": "P931"})json";

}  // namespace

TEST_CASE("vocab construction is deterministic, round-trips, and counts add up") {
  std::vector<std::string> texts{"a b", "b c"};
  Tokenizer t1 = Tokenizer::build(texts, {"rel one", "rel two"});
  Tokenizer t2 = Tokenizer::build(texts, {"rel one", "rel two"});
  CHECK(t1 == t2);
  CHECK(t1.lookup("a") >= 0);
  CHECK(t1.lookup("b") >= 0);
  CHECK(t1.lookup("c") >= 0);

  CHECK(t1.decode(t1.encode("a b")) == "a b");
  CHECK(t1.encode("A   b")[0] == t1.encode("a b")[0]);  // normalization

  // Independent scan: distinct words + 2 specials + R answer tokens.
  std::set<std::string> distinct;
  for (const auto& text : texts) {
    std::istringstream is(text);
    std::string w;
    while (is >> w) distinct.insert(w);
  }
  CHECK(t1.vocab_size() == distinct.size() + 2 + 2);

  CHECK(t1.answer_token(0) != t1.answer_token(1));
  CHECK(t1.encode("zzz")[0] == Tokenizer::kUnk);
  CHECK_THROWS_AS(Tokenizer::build({}, {}), ValidationError);

  Tokenizer t3 = Tokenizer::from_json_string(t1.to_json_string());
  CHECK(t3 == t1);
}

TEST_CASE("render_question uses the fixed template") {
  std::string q = render_question("x", "y", "the x sits near the y .");
  CHECK(q.find("what is the relation between 'x' and 'y' in the sentence?") != std::string::npos);
  CHECK(q.find("the x sits near the y .") != std::string::npos);

  // identical entities allowed
  std::string same = render_question("x", "x", "s .");
  CHECK(same.find("'x' and 'x'") != std::string::npos);

  std::string fig = render_question("large regional airport", "manchester",
                                    "the large regional airport serves manchester .");
  CHECK(fig.find("large regional airport") != std::string::npos);
  CHECK(fig.find("manchester") != std::string::npos);

  CHECK_THROWS_AS(render_question("", "y", "s"), ValidationError);
}

TEST_CASE("generate_world shapes, forced choice, evenness, determinism") {
  WorldConfig small;
  small.seed = 9;
  small.n_subjects = 12;
  small.n_relations = 4;
  small.n_objects = 12;
  small.cases_per_relation = 3;
  World w = generate_world(small);
  CHECK(w.cases.size() == 12);
  CHECK(w.tuples.size() == 12);
  CHECK(w.training_texts.size() == 12);

  // Evenness: counting oracle over target_true.
  std::map<std::string, int> counts;
  for (const auto& c : w.cases) ++counts[c.target_true];
  int mn = 1 << 30, mx = 0;
  for (const auto& [k, v] : counts) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  CHECK(counts.size() == 4);
  CHECK(mx - mn == 0);

  for (const auto& c : w.cases) {
    CHECK(c.target_new != c.target_true);
    CHECK(w.registry.index_of_name(c.target_true) >= 0);
    CHECK(w.registry.index_of_name(c.target_new) >= 0);
    CHECK(c.paraphrase_prompts.size() >= 2);
    CHECK(c.question.find("what is the relation between") != std::string::npos);
  }

  // Forced choice with two relations.
  WorldConfig duo;
  duo.seed = 5;
  duo.n_subjects = 4;
  duo.n_relations = 2;
  duo.n_objects = 4;
  duo.cases_per_relation = 1;
  World w2 = generate_world(duo);
  for (const auto& c : w2.cases) {
    const std::string other = c.target_true == w2.registry.entries[0].name ? w2.registry.entries[1].name
                                                                           : w2.registry.entries[0].name;
    CHECK(c.target_new == other);
  }

  // Determinism and seed sensitivity.
  World wa = generate_world(small);
  CHECK(wa.cases.size() == w.cases.size());
  for (std::size_t i = 0; i < wa.cases.size(); ++i) {
    CHECK(wa.cases[i].question == w.cases[i].question);
    CHECK(wa.cases[i].target_new == w.cases[i].target_new);
  }
  WorldConfig other_seed = small;
  other_seed.seed = 10;
  World wb = generate_world(other_seed);
  bool any_diff = false;
  for (std::size_t i = 0; i < wb.cases.size(); ++i) {
    if (wb.cases[i].entity_a != w.cases[i].entity_a) any_diff = true;
  }
  CHECK(any_diff);
  CHECK(wb.cases.size() == w.cases.size());

  CHECK_THROWS_AS(generate_world(WorldConfig{1, 2, 64, 2, 9}), ValidationError);  // capacity
  WorldConfig one_rel;
  one_rel.n_relations = 1;
  CHECK_THROWS_AS(generate_world(one_rel), ValidationError);
}

TEST_CASE("default-scale world matches published counting example") {
  WorldConfig cfg;  // defaults: 64 relations, 9 per relation
  World w = generate_world(cfg);
  CHECK(w.cases.size() == 576);
  CHECK(w.registry.size() == 64);
  std::map<std::string, int> counts;
  for (const auto& c : w.cases) ++counts[c.target_true];
  for (const auto& [k, v] : counts) CHECK(v == 9);
}

TEST_CASE("world save/load round trip") {
  WorldConfig small;
  small.seed = 3;
  small.n_subjects = 8;
  small.n_relations = 3;
  small.n_objects = 8;
  small.cases_per_relation = 2;
  World w = generate_world(small);
  save_world(w, "test_world_dir");
  World r = load_world("test_world_dir");
  CHECK(r.cases.size() == w.cases.size());
  CHECK(r.tokenizer == w.tokenizer);
  CHECK(r.registry.size() == w.registry.size());
  for (std::size_t i = 0; i < w.cases.size(); ++i) {
    CHECK(r.cases[i].question == w.cases[i].question);
  }
  std::filesystem::remove_all("test_world_dir");
}

TEST_CASE("migrated record loader accepts the published example, both id spellings") {
  write_file("test_migrated.jsonl", std::string(kExampleRecordLine) + "\n");
  auto records = load_migrated_jsonl("test_migrated.jsonl");
  REQUIRE(records.size() == 1);
  CHECK(records[0].subject == "tjq");
  CHECK(records[0].relation_id == "p931");  // lowercased on ingestion
  CHECK(records[0].relation.find("territorial entity") != std::string::npos);
  CHECK(records[0].prediction == records[0].relation);

  // Canonical spelling too.
  write_file("test_migrated2.jsonl",
             R"({"relation_triple_id": 1, "subject": "s", "relation": "r", "template": "", "prediction": "", "prompt": "p", "relation_id": "p001"})"
             "\n");
  auto r2 = load_migrated_jsonl("test_migrated2.jsonl");
  REQUIRE(r2.size() == 1);
  CHECK(r2[0].template_text.empty());
  std::remove("test_migrated.jsonl");
  std::remove("test_migrated2.jsonl");
}

TEST_CASE("migrated record save/load is byte-stable") {
  write_file("test_stab.jsonl", std::string(kExampleRecordLine) + "\n");
  auto records = load_migrated_jsonl("test_stab.jsonl");
  save_migrated_jsonl(records, "test_stab2.jsonl");
  auto again = load_migrated_jsonl("test_stab2.jsonl");
  save_migrated_jsonl(again, "test_stab3.jsonl");
  CHECK(slurp("test_stab2.jsonl") == slurp("test_stab3.jsonl"));
  std::remove("test_stab.jsonl");
  std::remove("test_stab2.jsonl");
  std::remove("test_stab3.jsonl");
}

TEST_CASE("loader errors carry line numbers") {
  write_file("test_errs.jsonl",
             "{\"case_id\": 0, \"entity_a\": \"a\", \"entity_b\": \"b\", \"sentence\": \"s\", \"question\": \"q\", "
             "\"target_true\": \"r\", \"target_new\": \"r\", \"paraphrase_prompts\": [\"p\"]}\n");
  try {
    load_eval_jsonl("test_errs.jsonl");
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    CHECK(msg.find("line 1") != std::string::npos);
    CHECK(msg.find("target_new") != std::string::npos);
  }

  write_file("test_errs2.jsonl", "\n{\"relation_triple_id\": \"oops\"}\n");
  try {
    load_migrated_jsonl("test_errs2.jsonl");
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  // Empty file is fine.
  write_file("test_empty.jsonl", "");
  CHECK(load_eval_jsonl("test_empty.jsonl").empty());
  CHECK(load_migrated_jsonl("test_empty.jsonl").empty());
  std::remove("test_errs.jsonl");
  std::remove("test_errs2.jsonl");
  std::remove("test_empty.jsonl");
}

TEST_CASE("frequency report ordering and csv") {
  // Fixture shaped like the published top-10 head.
  std::vector<std::string> names;
  for (int i = 0; i < 18; ++i) names.push_back("has part");
  for (int i = 0; i < 14; ++i) names.push_back("instrument");
  for (int i = 0; i < 14; ++i) names.push_back("characters");
  for (int i = 0; i < 13; ++i) names.push_back("mountain range");
  auto report = relation_frequency(names);
  REQUIRE(report.size() == 4);
  CHECK(report[0].first == "has part");
  CHECK(report[0].second == 18);
  CHECK(report[1].first == "characters");  // tie with instrument, lexicographic
  CHECK(report[2].first == "instrument");

  CHECK(relation_frequency({}).empty());

  std::string csv = frequency_csv(report);
  CHECK(csv.find("relation,count\n") == 0);
  CHECK(csv.find("has part,18") != std::string::npos);

  // Even world: all counts equal.
  WorldConfig small;
  small.n_subjects = 8;
  small.n_relations = 4;
  small.n_objects = 8;
  small.cases_per_relation = 2;
  World w = generate_world(small);
  std::vector<std::string> world_names;
  for (const auto& c : w.cases) world_names.push_back(c.target_true);
  auto wr = relation_frequency(world_names);
  for (const auto& [k, v] : wr) CHECK(v == 2);
}

TEST_CASE("offline augmentation applies the rule and is idempotent") {
  std::vector<MigratedRecord> records(2);
  records[0].relation_triple_id = 0;
  records[0].subject = "tjq";
  records[0].relation = "territorial entity or entities served by this transport hub (airport, train station, etc.)";
  records[0].prompt = "p";
  records[0].relation_id = "p931";
  records[1] = records[0];
  records[1].relation_triple_id = 1;
  records[1].template_text = "already here";
  records[1].prediction = records[1].relation;

  EndpointConfig cfg;
  cfg.offline = true;
  AugmentOutcome out = augment_templates(records, cfg);
  CHECK(out.filled == 1);
  CHECK(out.skipped == 1);
  CHECK(out.errors.empty());
  CHECK(records[0].template_text.find(records[0].relation) != std::string::npos);
  CHECK(records[0].prediction == records[0].relation);
  CHECK(records[1].template_text == "already here");

  // Second run changes nothing.
  AugmentOutcome again = augment_templates(records, cfg);
  CHECK(again.filled == 0);
  CHECK(again.skipped == 2);
}

TEST_CASE("online augmentation against a mock endpoint") {
  httplib::Server server;
  std::string seen_body;
  server.Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    res.set_content(R"({"completion": "{}, a mocked relation"})", "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&]() { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("RELTRACE_TEST_KEY", "sekrit", 1);
  std::vector<MigratedRecord> records(1);
  records[0].relation = "country";
  records[0].prompt = "x borders y .";
  records[0].relation_id = "p017";

  EndpointConfig cfg;
  cfg.offline = false;
  cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/complete";
  cfg.credential_env = "RELTRACE_TEST_KEY";
  AugmentOutcome out = augment_templates(records, cfg);
  CHECK(out.errors.empty());
  CHECK(out.filled == 1);
  CHECK(records[0].template_text == "{}, a mocked relation");
  CHECK(records[0].prediction == "country");
  CHECK(seen_body.find("\"temperature\":0") != std::string::npos);
  CHECK(seen_body.find("\"model\":\"text-davinci-003\"") != std::string::npos);

  // Missing credential is an immediate configuration error.
  unsetenv("RELTRACE_MISSING_KEY");
  EndpointConfig nocred = cfg;
  nocred.credential_env = "RELTRACE_MISSING_KEY";
  std::vector<MigratedRecord> more(1);
  more[0].relation = "r";
  more[0].prompt = "p";
  CHECK_THROWS_AS(augment_templates(more, nocred), ValidationError);

  // Network failure is per-record, progress preserved.
  server.stop();
  server_thread.join();
  std::vector<MigratedRecord> offline_now(1);
  offline_now[0].relation = "r";
  offline_now[0].prompt = "p";
  AugmentOutcome fail = augment_templates(offline_now, cfg);
  CHECK(fail.filled == 0);
  CHECK(fail.errors.size() == 1);
  CHECK(offline_now[0].template_text.empty());
}

TEST_CASE("migrate_raw accepts flexible field names") {
  write_file("test_raw.jsonl",
             R"({"head": "H", "relation": "Country", "tokens": ["The", "H", "lies", "in", "X", "."], "relaiton_id": "P17"})"
             "\n"
             R"({"subject": "s2", "relation": "r2", "sentence": "S2 is here ."})"
             "\n");
  auto records = migrate_raw_jsonl("test_raw.jsonl");
  REQUIRE(records.size() == 2);
  CHECK(records[0].relation_triple_id == 0);
  CHECK(records[0].subject == "h");
  CHECK(records[0].prompt == "the h lies in x .");
  CHECK(records[0].relation_id == "p17");
  CHECK(records[1].relation_triple_id == 1);
  CHECK(records[1].prompt == "s2 is here .");
  CHECK(records[1].relation_id.empty());

  write_file("test_raw_bad.jsonl", R"({"relation": "r"})" "\n");
  CHECK_THROWS_AS(migrate_raw_jsonl("test_raw_bad.jsonl"), ValidationError);
  std::remove("test_raw.jsonl");
  std::remove("test_raw_bad.jsonl");
}

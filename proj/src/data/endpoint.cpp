#include "data/endpoint.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "data/tokenizer.hpp"

namespace reltrace {

std::string offline_template_for(const std::string& relation) { return "{}, a " + relation; }

namespace {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint: url must start with http:// or https://");
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string completion_prompt(const MigratedRecord& r) {
  return "write a short template of the form '{}, a <relation>' for the relation: " + r.relation +
         " (context: " + r.prompt + ")";
}

// Pull the completion text out of the response body.
std::string extract_completion(const std::string& body) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw NumericError("endpoint: response is not json");
  if (j.contains("completion") && j["completion"].is_string()) return j["completion"].get<std::string>();
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty() &&
      j["choices"][0].contains("text")) {
    return j["choices"][0]["text"].get<std::string>();
  }
  throw NumericError("endpoint: no completion field in response");
}

}  // namespace

AugmentOutcome augment_templates(std::vector<MigratedRecord>& records, const EndpointConfig& cfg) {
  AugmentOutcome outcome;

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].template_text.empty()) {
      todo.push_back(i);
    } else {
      ++outcome.skipped;
    }
  }
  if (todo.empty()) return outcome;

  if (cfg.offline) {
    for (std::size_t i : todo) {
      records[i].template_text = normalize_text(offline_template_for(records[i].relation));
      records[i].prediction = records[i].relation;
      ++outcome.filled;
    }
    return outcome;
  }

  if (cfg.url.empty()) throw ValidationError("endpoint: url required in online mode");
  const char* key = std::getenv(cfg.credential_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ValidationError("endpoint: credential not set in environment variable " + cfg.credential_env);
  }
  const std::string bearer = key;
  const SplitUrl url = split_url(cfg.url);

  // Per-slot results; workers never touch the same record.
  std::vector<std::string> result(todo.size());
  std::vector<std::string> error(todo.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    httplib::Client client(url.base);
    client.set_connection_timeout(cfg.timeout_seconds);
    client.set_read_timeout(cfg.timeout_seconds);
    httplib::Headers headers{{"Authorization", "Bearer " + bearer}};
    while (true) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= todo.size()) break;
      const MigratedRecord& r = records[todo[slot]];
      nlohmann::ordered_json body;
      body["model"] = cfg.model;
      body["prompt"] = completion_prompt(r);
      body["max_tokens"] = cfg.max_tokens;
      body["temperature"] = 0;
      try {
        auto res = client.Post(url.path, headers, body.dump(), "application/json");
        if (!res) {
          error[slot] = "network failure";
        } else if (res->status != 200) {
          error[slot] = "http status " + std::to_string(res->status);
        } else {
          result[slot] = extract_completion(res->body);
        }
      } catch (const std::exception& e) {
        error[slot] = e.what();
      }
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.max_concurrency, 1)), todo.size());
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  for (std::size_t slot = 0; slot < todo.size(); ++slot) {
    if (!error[slot].empty()) {
      outcome.errors.emplace_back(todo[slot], error[slot]);
      continue;
    }
    MigratedRecord& r = records[todo[slot]];
    r.template_text = normalize_text(result[slot]);
    if (r.template_text.empty()) {
      outcome.errors.emplace_back(todo[slot], "empty completion");
      continue;
    }
    r.prediction = r.relation;
    ++outcome.filled;
  }
  return outcome;
}

}  // namespace reltrace

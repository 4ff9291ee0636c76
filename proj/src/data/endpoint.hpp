#pragma once

#include <string>
#include <utility>
#include <vector>

#include "data/records.hpp"

namespace reltrace {

// Completion-endpoint client used to fill templates/predictions. Offline
// mode applies a deterministic rule and needs no network; online mode posts
// JSON {model, prompt, max_tokens, temperature: 0} and reads the completion
// from the response's "completion" field (or an OpenAI-style
// choices[0].text).
struct EndpointConfig {
  bool offline = true;
  std::string url;                                 // http://host[:port]/path
  std::string model = "text-davinci-003";
  std::string credential_env = "RELTRACE_API_KEY";  // bearer token source
  int max_tokens = 64;
  int max_concurrency = 4;
  int timeout_seconds = 10;
};

struct AugmentOutcome {
  std::size_t filled = 0;
  std::size_t skipped = 0;                                   // already had templates
  std::vector<std::pair<std::size_t, std::string>> errors;  // (record index, message)
};

// Fills template/prediction in place. Idempotent: records with a non-empty
// template are left untouched. Online failures are per-record; successful
// records keep their progress.
AugmentOutcome augment_templates(std::vector<MigratedRecord>& records, const EndpointConfig& cfg);

// The deterministic offline rule, exposed for tests: "{}, a <relation>".
std::string offline_template_for(const std::string& relation);

}  // namespace reltrace

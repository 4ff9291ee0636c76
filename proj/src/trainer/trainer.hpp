#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "data/world.hpp"
#include "model/params.hpp"

namespace reltrace {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_steps = 20000;
  double target_memorization = 0.98;
  std::uint64_t seed = 0;
  double clip_norm = 1.0;          // global-norm gradient clipping
  std::size_t history_every = 100;  // loss history cadence
  std::size_t check_every = 250;    // memorization check cadence

  void validate() const;
};

// A rendered prompt and the answer token expected after its final position.
struct MemorizationProbe {
  std::vector<int> prompt;
  int answer = 0;
};

struct MemorizationResult {
  double fraction = 0.0;
  std::vector<double> answer_probs;  // per probe
  std::vector<bool> hits;            // argmax == answer
};

struct TrainResult {
  std::vector<std::pair<std::size_t, double>> loss_history;  // (step, batch loss)
  std::size_t steps_used = 0;
  double final_memorization = 0.0;
};

// Adam on sequence_loss over seeded shuffled batches. Stops at the target
// memorization fraction or max_steps; deterministic given the seed. Aborts
// with the step index if the loss goes non-finite.
TrainResult train(Parameters& params, const std::vector<std::vector<int>>& sequences,
                  const std::vector<MemorizationProbe>& probes, const TrainConfig& cfg);

// Fraction of probes whose argmax next token at the final position is the
// answer token. An empty probe list counts as fully memorized (with a
// warning on stderr).
MemorizationResult memorization_check(const Parameters& params, const std::vector<MemorizationProbe>& probes);

// Tokenized training sequences and probes for a generated world.
std::vector<std::vector<int>> world_sequences(const World& world);
std::vector<MemorizationProbe> world_probes(const World& world);

// Checkpoint sidecar: config, seed, steps, final memorization as JSON.
std::string train_summary_json(const TrainConfig& cfg, const TrainResult& result, const ModelConfig& model_cfg);

}  // namespace reltrace

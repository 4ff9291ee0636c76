#include "trainer/trainer.hpp"

#include <cmath>
#include <iostream>

#include <json.hpp>

#include "model/backward.hpp"
#include "model/forward.hpp"
#include "numerics/rng.hpp"

namespace reltrace {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0 || beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0 || adam_eps <= 0.0) {
    throw ValidationError("TrainConfig: bad optimizer constants");
  }
  if (batch_size < 1) throw ValidationError("TrainConfig: batch_size must be >= 1");
  if (target_memorization <= 0.0 || target_memorization > 1.0) {
    throw ValidationError("TrainConfig: target_memorization must be in (0, 1]");
  }
  if (clip_norm <= 0.0) throw ValidationError("TrainConfig: clip_norm must be > 0");
  if (history_every < 1 || check_every < 1) throw ValidationError("TrainConfig: cadences must be >= 1");
}

MemorizationResult memorization_check(const Parameters& params, const std::vector<MemorizationProbe>& probes) {
  MemorizationResult result;
  if (probes.empty()) {
    std::cerr << "memorization_check: empty probe list, reporting 1.0\n";
    result.fraction = 1.0;
    return result;
  }
  std::size_t hits = 0;
  for (const auto& probe : probes) {
    if (probe.prompt.empty()) throw ValidationError("memorization_check: empty prompt");
    ForwardResult fr = forward(params, probe.prompt);
    const Vec& row = fr.logits.back();
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < row.size(); ++i) {
      if (row[i] > row[argmax]) argmax = i;
    }
    const bool hit = argmax == static_cast<std::size_t>(probe.answer);
    hits += hit ? 1 : 0;
    result.hits.push_back(hit);
    result.answer_probs.push_back(next_token_prob(fr.logits, probe.prompt.size() - 1, probe.answer));
  }
  result.fraction = static_cast<double>(hits) / static_cast<double>(probes.size());
  return result;
}

TrainResult train(Parameters& params, const std::vector<std::vector<int>>& sequences,
                  const std::vector<MemorizationProbe>& probes, const TrainConfig& cfg) {
  cfg.validate();
  if (sequences.empty()) throw ValidationError("train: no training sequences");
  for (const auto& s : sequences) {
    if (s.size() < 2) throw ValidationError("train: sequences need at least 2 tokens");
    if (s.size() > params.config.max_seq) {
      throw ValidationError("train: sequence of " + std::to_string(s.size()) + " tokens exceeds max_seq " +
                            std::to_string(params.config.max_seq));
    }
  }

  TrainResult result;
  if (cfg.max_steps == 0) {
    result.final_memorization = memorization_check(params, probes).fraction;
    return result;
  }

  Parameters m = Parameters::zeros(params.config);
  Parameters v = Parameters::zeros(params.config);
  RngState shuffle_rng(cfg.seed, 11);

  std::vector<std::size_t> order(sequences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t cursor = order.size();  // forces a shuffle on first use

  auto next_index = [&]() {
    if (cursor >= order.size()) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[shuffle_rng.uniform_below(i)]);
      }
      cursor = 0;
    }
    return order[cursor++];
  };

  const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);
  std::size_t step = 0;
  while (step < cfg.max_steps) {
    ++step;

    Parameters grad_acc = Parameters::zeros(params.config);
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const auto& seq = sequences[next_index()];
      GradResult gr = gradients(params, seq, {}, {Objective::seq_loss(), {}});
      batch_loss += gr.value * inv_batch;
      auto acc = grad_acc.tensors();
      auto src = gr.grads.tensors();
      for (std::size_t t = 0; t < acc.size(); ++t) {
        for (std::size_t i = 0; i < acc[t].size; ++i) acc[t].data[i] += src[t].data[i] * inv_batch;
      }
    }

    if (!std::isfinite(batch_loss)) {
      throw NumericError("train: loss diverged (non-finite) at step " + std::to_string(step));
    }

    // Global norm clip.
    double sq = 0.0;
    for (const auto& t : grad_acc.tensors()) {
      for (std::size_t i = 0; i < t.size; ++i) sq += t.data[i] * t.data[i];
    }
    const double gnorm = std::sqrt(sq);
    const double clip_scale = gnorm > cfg.clip_norm ? cfg.clip_norm / gnorm : 1.0;

    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    auto pt = params.tensors();
    auto gt = grad_acc.tensors();
    auto mt = m.tensors();
    auto vt = v.tensors();
    for (std::size_t t = 0; t < pt.size(); ++t) {
      for (std::size_t i = 0; i < pt[t].size; ++i) {
        const double g = gt[t].data[i] * clip_scale;
        mt[t].data[i] = cfg.beta1 * mt[t].data[i] + (1.0 - cfg.beta1) * g;
        vt[t].data[i] = cfg.beta2 * vt[t].data[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = mt[t].data[i] / bc1;
        const double vhat = vt[t].data[i] / bc2;
        pt[t].data[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
      }
    }

    if (step % cfg.history_every == 0 || step == 1) {
      result.loss_history.emplace_back(step, batch_loss);
    }

    if (step % cfg.check_every == 0 || step == cfg.max_steps) {
      const double frac = memorization_check(params, probes).fraction;
      result.final_memorization = frac;
      if (frac >= cfg.target_memorization) break;
    }
  }
  result.steps_used = step;
  return result;
}

std::vector<std::vector<int>> world_sequences(const World& world) {
  std::vector<std::vector<int>> out;
  out.reserve(world.training_texts.size());
  for (const auto& t : world.training_texts) out.push_back(world.tokenizer.encode(t));
  return out;
}

std::vector<MemorizationProbe> world_probes(const World& world) {
  std::vector<MemorizationProbe> probes;
  probes.reserve(world.cases.size());
  for (const auto& c : world.cases) {
    MemorizationProbe p;
    p.prompt = world.tokenizer.encode(c.question);
    p.answer = world.answer_token_for(c.target_true);
    probes.push_back(std::move(p));
  }
  return probes;
}

std::string train_summary_json(const TrainConfig& cfg, const TrainResult& result, const ModelConfig& model_cfg) {
  nlohmann::ordered_json j;
  j["version"] = "rttrain/1";
  j["seed"] = cfg.seed;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["max_steps"] = cfg.max_steps;
  j["target_memorization"] = cfg.target_memorization;
  j["steps_used"] = result.steps_used;
  j["final_memorization"] = result.final_memorization;
  j["model"] = {{"n_layers", model_cfg.n_layers}, {"d_model", model_cfg.d_model}, {"n_heads", model_cfg.n_heads},
                {"d_mlp", model_cfg.d_mlp},       {"vocab_size", model_cfg.vocab_size}, {"max_seq", model_cfg.max_seq}};
  nlohmann::ordered_json hist = nlohmann::ordered_json::array();
  for (const auto& [s, l] : result.loss_history) hist.push_back({{"step", s}, {"loss", l}});
  j["loss_history"] = hist;
  return j.dump(2);
}

}  // namespace reltrace

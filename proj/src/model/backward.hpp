#pragma once

#include "model/forward.hpp"

namespace reltrace {

// Training loss or a single target-token negative log probability.
struct Objective {
  enum class Kind { sequence_loss, target_nll };
  Kind kind = Kind::sequence_loss;
  std::size_t position = 0;  // target_nll only
  int token = 0;             // target_nll only

  static Objective seq_loss() { return {}; }
  static Objective target_nll(std::size_t position, int token) {
    return Objective{Kind::target_nll, position, token};
  }
};

struct GradRequest {
  Objective objective;
  // Hooked sites whose replacement-vector gradients are wanted. Every entry
  // must actually be hooked in the forward pass.
  std::vector<Site> wanted_sites;
};

struct GradResult {
  double value = 0.0;
  Parameters grads;             // same shapes as the parameters
  std::vector<Vec> site_grads;  // parallel to GradRequest::wanted_sites
  std::vector<Vec> logits;
};

// Exact reverse-mode gradients of the objective for every parameter and, on
// request, for the replacement vector of any hooked site. Values overwritten
// by a hook receive no gradient (their producing subgraph is dead).
GradResult gradients(const Parameters& params, const std::vector<int>& tokens, const HookSet& hooks,
                     const GradRequest& req);

}  // namespace reltrace

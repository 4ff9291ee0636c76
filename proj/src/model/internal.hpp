#pragma once

// Shared between forward.cpp and backward.cpp only.

#include <vector>

#include "model/forward.hpp"

namespace reltrace::detail {

// Everything the reverse pass needs beyond the public tape. Token rows.
struct LayerWork {
  Matrix ln1_hat;   // T x d, (x - mean) * inv_std before gamma/beta
  Vec ln1_inv_std;  // per token
  Matrix ln1;       // T x d, post gamma/beta
  Matrix q, k, v;   // T x d
  std::vector<Matrix> attn_probs;  // per head, T x T lower triangular
  Matrix ctx;       // T x d, concatenated head outputs
  Matrix x_res;     // T x d, x + attn (post-hook)
  Matrix ln2_hat;
  Vec ln2_inv_std;
  Matrix ln2;
  Matrix z;         // T x d_mlp, pre-gelu
};

struct Workspace {
  std::vector<LayerWork> layers;
  Matrix final_hat;   // T x d
  Vec final_inv_std;  // per token
  Matrix final_norm;  // T x d, input to the unembedding
};

ForwardResult run_forward(const Parameters& params, const std::vector<int>& tokens, const HookSet& hooks,
                          Workspace* ws);

}  // namespace reltrace::detail

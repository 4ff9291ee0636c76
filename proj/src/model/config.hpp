#pragma once

#include <cstddef>
#include <string>

#include "numerics/errors.hpp"

namespace reltrace {

// Pre-LayerNorm GPT-style stack: x' = x + Attn(LN1(x)); h = x' + MLP(LN2(x')).
// The default depth keeps layer 5 addressable for editing.
struct ModelConfig {
  std::size_t n_layers = 8;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_mlp = 256;  // 4 * d_model
  std::size_t vocab_size = 0;
  std::size_t max_seq = 64;
  double ln_eps = 1e-5;

  std::size_t head_dim() const { return d_model / n_heads; }

  void validate() const {
    if (n_layers < 1 || d_model < 1 || n_heads < 1 || d_mlp < 1 || vocab_size < 1 || max_seq < 1) {
      throw ValidationError("ModelConfig: all counts must be >= 1");
    }
    if (d_model % n_heads != 0) {
      throw ValidationError("ModelConfig: n_heads (" + std::to_string(n_heads) + ") must divide d_model (" +
                            std::to_string(d_model) + ")");
    }
    if (ln_eps <= 0.0) throw ValidationError("ModelConfig: ln_eps must be > 0");
  }

  bool operator==(const ModelConfig& o) const {
    return n_layers == o.n_layers && d_model == o.d_model && n_heads == o.n_heads && d_mlp == o.d_mlp &&
           vocab_size == o.vocab_size && max_seq == o.max_seq && ln_eps == o.ln_eps;
  }
};

}  // namespace reltrace

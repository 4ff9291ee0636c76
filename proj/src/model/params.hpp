#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "model/config.hpp"
#include "numerics/matrix.hpp"

namespace reltrace {

struct LayerParams {
  Vec ln1_gamma, ln1_beta;
  Matrix wq, wk, wv, wo;  // d_model x d_model, rows are output dims
  Vec bq, bk, bv, bo;
  Vec ln2_gamma, ln2_beta;
  Matrix w_in;  // d_mlp x d_model
  Vec b_in;
  Matrix w_out;  // d_model x d_mlp; the key-to-value map targeted by edits
  Vec b_out;
};

// Reference to one named tensor inside Parameters, in serialization order.
struct TensorRef {
  std::string name;
  double* data;
  std::size_t size;
};

struct Parameters {
  ModelConfig config;
  Matrix token_embedding;  // vocab x d_model
  Matrix pos_embedding;    // max_seq x d_model
  std::vector<LayerParams> layers;
  Vec final_ln_gamma, final_ln_beta;
  Matrix unembedding;  // vocab x d_model (untied from token_embedding)

  // All-zero tensors in the right shapes. Also used as the gradient record.
  static Parameters zeros(const ModelConfig& cfg);

  // Seeded init: weights N(0, 0.02^2), zero biases, unit gamma, zero beta.
  static Parameters init(const ModelConfig& cfg, std::uint64_t seed);

  // Fixed tensor order used for the weight file, the optimizer, and
  // finite-difference sweeps. Embeddings, then per layer
  // [ln1_gamma ln1_beta wq bq wk bk wv bv wo bo ln2_gamma ln2_beta
  //  w_in b_in w_out b_out], then final LN and unembedding.
  std::vector<TensorRef> tensors();
  std::vector<TensorRef> tensors() const;  // const data exposed via copy of refs

  std::size_t total_size() const;
  bool all_finite() const;
};

// Weight file: text header "RTW1 n_layers d_model n_heads d_mlp vocab_size
// max_seq\n" followed by every tensor's entries as little-endian 64-bit
// floats, row-major, in Parameters::tensors() order.
void save_weights(const Parameters& p, const std::string& path);
Parameters load_weights(const std::string& path);

}  // namespace reltrace

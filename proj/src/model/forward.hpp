#pragma once

#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "model/params.hpp"

namespace reltrace {

enum class SiteKind { hidden, mlp_out, attn_out };

const char* site_kind_name(SiteKind kind);
SiteKind site_kind_from_name(const std::string& name);

// An addressable intermediate value at one (layer, token).
struct Site {
  SiteKind kind;
  std::size_t layer;
  std::size_t token;

  auto key() const { return std::make_tuple(static_cast<int>(kind), layer, token); }
  bool operator==(const Site& o) const { return key() == o.key(); }
  bool operator<(const Site& o) const { return key() < o.key(); }
};

// Additive noise on the input embeddings of a token span.
struct EmbeddingNoise {
  std::size_t begin = 0;
  std::size_t end = 0;           // [begin, end)
  std::vector<Vec> per_token;    // end - begin vectors of length d_model
};

// Patch directives for one forward pass. Site hooks overwrite the named value
// immediately after it is computed; noise directives add to embeddings.
class HookSet {
 public:
  void set(const Site& site, Vec replacement);
  void add_noise(EmbeddingNoise noise);

  const Vec* find(SiteKind kind, std::size_t layer, std::size_t token) const;
  const std::vector<EmbeddingNoise>& noise() const { return noise_; }
  const std::map<Site, Vec>& sites() const { return sites_; }
  bool empty() const { return sites_.empty() && noise_.empty(); }

  void validate(const ModelConfig& cfg, std::size_t seq_len) const;

 private:
  std::map<Site, Vec> sites_;
  std::vector<EmbeddingNoise> noise_;
};

// Per-run record of every intermediate state, post-hook. Replaying a forward
// with every site patched to its own tape reproduces identical logits.
struct ActivationTape {
  std::size_t n_layers = 0;
  std::size_t seq_len = 0;
  std::vector<Vec> embeddings;                 // [token] d_model, post-noise
  std::vector<std::vector<Vec>> hidden;        // [layer][token] d_model
  std::vector<std::vector<Vec>> attn_out;      // [layer][token] d_model
  std::vector<std::vector<Vec>> mlp_inner;     // [layer][token] d_mlp, post-gelu
  std::vector<std::vector<Vec>> mlp_out;       // [layer][token] d_model
  std::vector<Vec> logits;                     // [token] vocab

  const Vec& site_value(const Site& site) const;
};

struct ForwardResult {
  std::vector<Vec> logits;  // per position
  ActivationTape tape;
};

ForwardResult forward(const Parameters& params, const std::vector<int>& tokens, const HookSet& hooks = {});

// softmax of logits[position], indexed at token.
double next_token_prob(const std::vector<Vec>& logits, std::size_t position, int token);

// Mean next-token cross-entropy over positions 0 .. len-2.
double sequence_loss(const Parameters& params, const std::vector<int>& tokens);

}  // namespace reltrace

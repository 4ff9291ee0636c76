#include "model/forward.hpp"

#include <cmath>

#include "model/internal.hpp"

namespace reltrace {

const char* site_kind_name(SiteKind kind) {
  switch (kind) {
    case SiteKind::hidden:
      return "hidden";
    case SiteKind::mlp_out:
      return "mlp_out";
    case SiteKind::attn_out:
      return "attn_out";
  }
  return "?";
}

SiteKind site_kind_from_name(const std::string& name) {
  if (name == "hidden") return SiteKind::hidden;
  if (name == "mlp_out") return SiteKind::mlp_out;
  if (name == "attn_out") return SiteKind::attn_out;
  throw ValidationError("unknown site kind '" + name + "' (expected hidden|mlp_out|attn_out)");
}

void HookSet::set(const Site& site, Vec replacement) {
  auto [it, inserted] = sites_.emplace(site, std::move(replacement));
  if (!inserted) {
    throw ValidationError("HookSet: duplicate directive for site (" + std::string(site_kind_name(site.kind)) + "," +
                          std::to_string(site.layer) + "," + std::to_string(site.token) + ")");
  }
}

void HookSet::add_noise(EmbeddingNoise noise) {
  if (noise.end < noise.begin) throw ValidationError("HookSet: noise span end before begin");
  if (noise.per_token.size() != noise.end - noise.begin) {
    throw ValidationError("HookSet: noise span length does not match vector count");
  }
  for (const auto& other : noise_) {
    if (noise.begin < other.end && other.begin < noise.end) {
      throw ValidationError("HookSet: overlapping noise spans");
    }
  }
  noise_.push_back(std::move(noise));
}

const Vec* HookSet::find(SiteKind kind, std::size_t layer, std::size_t token) const {
  auto it = sites_.find(Site{kind, layer, token});
  return it == sites_.end() ? nullptr : &it->second;
}

void HookSet::validate(const ModelConfig& cfg, std::size_t seq_len) const {
  for (const auto& [site, vec] : sites_) {
    if (site.layer >= cfg.n_layers) {
      throw ValidationError("HookSet: site layer " + std::to_string(site.layer) + " out of range (n_layers " +
                            std::to_string(cfg.n_layers) + ")");
    }
    if (site.token >= seq_len) {
      throw ValidationError("HookSet: site token " + std::to_string(site.token) + " out of range (len " +
                            std::to_string(seq_len) + ")");
    }
    if (vec.size() != cfg.d_model) {
      throw ValidationError("HookSet: replacement length " + std::to_string(vec.size()) + " != d_model " +
                            std::to_string(cfg.d_model));
    }
  }
  for (const auto& n : noise_) {
    if (n.end > seq_len) throw ValidationError("HookSet: noise span out of range");
    for (const auto& v : n.per_token) {
      if (v.size() != cfg.d_model) throw ValidationError("HookSet: noise vector length != d_model");
    }
  }
}

const Vec& ActivationTape::site_value(const Site& site) const {
  switch (site.kind) {
    case SiteKind::hidden:
      return hidden.at(site.layer).at(site.token);
    case SiteKind::mlp_out:
      return mlp_out.at(site.layer).at(site.token);
    case SiteKind::attn_out:
      return attn_out.at(site.layer).at(site.token);
  }
  throw ValidationError("site_value: bad kind");
}

namespace detail {

namespace {

// y[i,:] = x[i,:] * w^T + b, w is (out x in).
Matrix linear(const Matrix& x, const Matrix& w, const Vec& b) {
  Matrix y(x.rows(), w.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* xi = x.row_ptr(i);
    double* yi = y.row_ptr(i);
    for (std::size_t o = 0; o < w.rows(); ++o) {
      const double* wo = w.row_ptr(o);
      double acc = b[o];
      for (std::size_t c = 0; c < w.cols(); ++c) acc += xi[c] * wo[c];
      yi[o] = acc;
    }
  }
  return y;
}

// Row-wise layer norm over a T x d matrix; optionally records x_hat/inv_std.
Matrix layer_norm_rows(const Matrix& x, const Vec& gamma, const Vec& beta, double eps, Matrix* hat_out,
                       Vec* inv_std_out) {
  const std::size_t t_len = x.rows(), d = x.cols();
  Matrix out(t_len, d);
  if (hat_out) *hat_out = Matrix(t_len, d);
  if (inv_std_out) inv_std_out->assign(t_len, 0.0);
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* xt = x.row_ptr(t);
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += xt[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (xt[i] - mean) * (xt[i] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    double* ot = out.row_ptr(t);
    for (std::size_t i = 0; i < d; ++i) {
      const double hat = (xt[i] - mean) * inv;
      if (hat_out) hat_out->at(t, i) = hat;
      ot[i] = gamma[i] * hat + beta[i];
    }
    if (inv_std_out) (*inv_std_out)[t] = inv;
  }
  return out;
}

void overwrite_row(Matrix& m, std::size_t row, const Vec& v) {
  double* r = m.row_ptr(row);
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i];
}

std::vector<Vec> rows_to_vecs(const Matrix& m) {
  std::vector<Vec> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = m.row_vec(i);
  return out;
}

}  // namespace

ForwardResult run_forward(const Parameters& params, const std::vector<int>& tokens, const HookSet& hooks,
                          Workspace* ws) {
  const ModelConfig& cfg = params.config;
  cfg.validate();
  const std::size_t t_len = tokens.size();
  if (t_len == 0) throw ValidationError("forward: empty token sequence");
  if (t_len > cfg.max_seq) {
    throw ValidationError("forward: sequence length " + std::to_string(t_len) + " exceeds max_seq " +
                          std::to_string(cfg.max_seq));
  }
  for (int tok : tokens) {
    if (tok < 0 || static_cast<std::size_t>(tok) >= cfg.vocab_size) {
      throw ValidationError("forward: token id " + std::to_string(tok) + " out of vocab (size " +
                            std::to_string(cfg.vocab_size) + ")");
    }
  }
  hooks.validate(cfg, t_len);

  const std::size_t d = cfg.d_model;
  const std::size_t n_heads = cfg.n_heads;
  const std::size_t hd = cfg.head_dim();
  const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));

  ActivationTape tape;
  tape.n_layers = cfg.n_layers;
  tape.seq_len = t_len;
  tape.hidden.resize(cfg.n_layers);
  tape.attn_out.resize(cfg.n_layers);
  tape.mlp_inner.resize(cfg.n_layers);
  tape.mlp_out.resize(cfg.n_layers);

  if (ws) {
    ws->layers.assign(cfg.n_layers, LayerWork{});
  }

  // Embeddings plus additive noise.
  Matrix x(t_len, d);
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* te = params.token_embedding.row_ptr(static_cast<std::size_t>(tokens[t]));
    const double* pe = params.pos_embedding.row_ptr(t);
    double* xt = x.row_ptr(t);
    for (std::size_t i = 0; i < d; ++i) xt[i] = te[i] + pe[i];
  }
  for (const auto& n : hooks.noise()) {
    for (std::size_t t = n.begin; t < n.end; ++t) {
      double* xt = x.row_ptr(t);
      const Vec& nv = n.per_token[t - n.begin];
      for (std::size_t i = 0; i < d; ++i) xt[i] += nv[i];
    }
  }
  tape.embeddings = rows_to_vecs(x);

  for (std::size_t layer = 0; layer < cfg.n_layers; ++layer) {
    const LayerParams& lp = params.layers[layer];
    LayerWork* lw = ws ? &ws->layers[layer] : nullptr;

    Matrix ln1 = layer_norm_rows(x, lp.ln1_gamma, lp.ln1_beta, cfg.ln_eps, lw ? &lw->ln1_hat : nullptr,
                                 lw ? &lw->ln1_inv_std : nullptr);

    Matrix q = linear(ln1, lp.wq, lp.bq);
    Matrix k = linear(ln1, lp.wk, lp.bk);
    Matrix v = linear(ln1, lp.wv, lp.bv);

    // Causal attention: position t attends to 0..t.
    Matrix ctx(t_len, d);
    std::vector<Matrix> probs;
    if (lw) probs.assign(n_heads, Matrix(t_len, t_len));
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t off = h * hd;
      for (std::size_t t = 0; t < t_len; ++t) {
        Vec scores(t + 1);
        const double* qt = q.row_ptr(t) + off;
        for (std::size_t j = 0; j <= t; ++j) {
          const double* kj = k.row_ptr(j) + off;
          double acc = 0.0;
          for (std::size_t c = 0; c < hd; ++c) acc += qt[c] * kj[c];
          scores[j] = acc * inv_sqrt_hd;
        }
        Vec p = softmax_row(scores);
        if (lw) {
          for (std::size_t j = 0; j <= t; ++j) probs[h].at(t, j) = p[j];
        }
        double* ct = ctx.row_ptr(t) + off;
        for (std::size_t c = 0; c < hd; ++c) ct[c] = 0.0;
        for (std::size_t j = 0; j <= t; ++j) {
          const double* vj = v.row_ptr(j) + off;
          const double pj = p[j];
          for (std::size_t c = 0; c < hd; ++c) ct[c] += pj * vj[c];
        }
      }
    }

    Matrix attn = linear(ctx, lp.wo, lp.bo);
    for (std::size_t t = 0; t < t_len; ++t) {
      if (const Vec* rep = hooks.find(SiteKind::attn_out, layer, t)) overwrite_row(attn, t, *rep);
    }
    tape.attn_out[layer] = rows_to_vecs(attn);

    Matrix x_res(t_len, d);
    for (std::size_t i = 0; i < x.size(); ++i) x_res.data()[i] = x.data()[i] + attn.data()[i];

    Matrix ln2 = layer_norm_rows(x_res, lp.ln2_gamma, lp.ln2_beta, cfg.ln_eps, lw ? &lw->ln2_hat : nullptr,
                                 lw ? &lw->ln2_inv_std : nullptr);

    Matrix z = linear(ln2, lp.w_in, lp.b_in);
    Matrix inner(t_len, cfg.d_mlp);
    for (std::size_t i = 0; i < z.size(); ++i) inner.data()[i] = gelu(z.data()[i]);
    tape.mlp_inner[layer] = rows_to_vecs(inner);

    Matrix mlp = linear(inner, lp.w_out, lp.b_out);
    for (std::size_t t = 0; t < t_len; ++t) {
      if (const Vec* rep = hooks.find(SiteKind::mlp_out, layer, t)) overwrite_row(mlp, t, *rep);
    }
    tape.mlp_out[layer] = rows_to_vecs(mlp);

    Matrix h(t_len, d);
    for (std::size_t i = 0; i < x.size(); ++i) h.data()[i] = x_res.data()[i] + mlp.data()[i];
    for (std::size_t t = 0; t < t_len; ++t) {
      if (const Vec* rep = hooks.find(SiteKind::hidden, layer, t)) overwrite_row(h, t, *rep);
    }
    tape.hidden[layer] = rows_to_vecs(h);

    if (lw) {
      lw->ln1 = std::move(ln1);
      lw->q = std::move(q);
      lw->k = std::move(k);
      lw->v = std::move(v);
      lw->attn_probs = std::move(probs);
      lw->ctx = std::move(ctx);
      lw->x_res = x_res;
      lw->ln2 = std::move(ln2);
      lw->z = std::move(z);
    }
    x = std::move(h);
  }

  Matrix final_norm = layer_norm_rows(x, params.final_ln_gamma, params.final_ln_beta, cfg.ln_eps,
                                      ws ? &ws->final_hat : nullptr, ws ? &ws->final_inv_std : nullptr);
  if (ws) ws->final_norm = final_norm;

  Matrix logits = linear(final_norm, params.unembedding, Vec(cfg.vocab_size, 0.0));
  tape.logits = rows_to_vecs(logits);

  ForwardResult out;
  out.logits = tape.logits;
  out.tape = std::move(tape);
  return out;
}

}  // namespace detail

ForwardResult forward(const Parameters& params, const std::vector<int>& tokens, const HookSet& hooks) {
  return detail::run_forward(params, tokens, hooks, nullptr);
}

double next_token_prob(const std::vector<Vec>& logits, std::size_t position, int token) {
  if (position >= logits.size()) {
    throw ValidationError("next_token_prob: position " + std::to_string(position) + " out of range");
  }
  const Vec& row = logits[position];
  if (token < 0 || static_cast<std::size_t>(token) >= row.size()) {
    throw ValidationError("next_token_prob: token " + std::to_string(token) + " out of range");
  }
  return softmax_row(row)[static_cast<std::size_t>(token)];
}

double sequence_loss(const Parameters& params, const std::vector<int>& tokens) {
  if (tokens.size() < 2) throw ValidationError("sequence_loss: need at least 2 tokens");
  ForwardResult fr = forward(params, tokens);
  double total = 0.0;
  const std::size_t n_pred = tokens.size() - 1;
  for (std::size_t pos = 0; pos < n_pred; ++pos) {
    total += -std::log(next_token_prob(fr.logits, pos, tokens[pos + 1]));
  }
  return total / static_cast<double>(n_pred);
}

}  // namespace reltrace

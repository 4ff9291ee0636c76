#include "model/backward.hpp"

#include <cmath>
#include <map>

#include "model/internal.hpp"

namespace reltrace {

namespace {

// Accumulates the three linear-layer gradients for y = x w^T + b.
void back_linear(const Matrix& dy, const Matrix& x, const Matrix& w, Matrix& dw, Vec& db, Matrix& dx) {
  const std::size_t t_len = dy.rows(), n_out = w.rows(), n_in = w.cols();
  for (std::size_t i = 0; i < t_len; ++i) {
    const double* dyi = dy.row_ptr(i);
    const double* xi = x.row_ptr(i);
    double* dxi = dx.row_ptr(i);
    for (std::size_t o = 0; o < n_out; ++o) {
      const double g = dyi[o];
      if (g == 0.0) continue;
      db[o] += g;
      const double* wo = w.row_ptr(o);
      double* dwo = dw.row_ptr(o);
      for (std::size_t c = 0; c < n_in; ++c) {
        dxi[c] += g * wo[c];
        dwo[c] += g * xi[c];
      }
    }
  }
}

// Layer-norm backward for one row. g_in is the upstream grad on the
// post-gamma/beta output; hat is (x - mean) * inv_std.
void back_layer_norm_row(const double* dy, const double* hat, double inv_std, const Vec& gamma, double* dgamma,
                         double* dbeta, double* dx, std::size_t d) {
  double mean_g = 0.0, mean_gh = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double g = gamma[i] * dy[i];
    mean_g += g;
    mean_gh += g * hat[i];
  }
  mean_g /= static_cast<double>(d);
  mean_gh /= static_cast<double>(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double g = gamma[i] * dy[i];
    dgamma[i] += dy[i] * hat[i];
    dbeta[i] += dy[i];
    dx[i] += inv_std * (g - mean_g - hat[i] * mean_gh);
  }
}

void zero_row(Matrix& m, std::size_t row) {
  double* r = m.row_ptr(row);
  for (std::size_t i = 0; i < m.cols(); ++i) r[i] = 0.0;
}

}  // namespace

GradResult gradients(const Parameters& params, const std::vector<int>& tokens, const HookSet& hooks,
                     const GradRequest& req) {
  const ModelConfig& cfg = params.config;
  detail::Workspace ws;
  ForwardResult fr = detail::run_forward(params, tokens, hooks, &ws);
  const std::size_t t_len = tokens.size();
  const std::size_t d = cfg.d_model;
  const std::size_t n_heads = cfg.n_heads;
  const std::size_t hd = cfg.head_dim();
  const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));

  for (const Site& s : req.wanted_sites) {
    if (!hooks.find(s.kind, s.layer, s.token)) {
      throw ValidationError("gradients: site grad requested for a site that is not hooked (" +
                            std::string(site_kind_name(s.kind)) + "," + std::to_string(s.layer) + "," +
                            std::to_string(s.token) + ")");
    }
  }

  GradResult out;
  out.grads = Parameters::zeros(cfg);
  out.logits = fr.logits;
  out.site_grads.assign(req.wanted_sites.size(), Vec());

  // Seed dlogits from the objective.
  Matrix dlogits(t_len, cfg.vocab_size);
  const Objective& obj = req.objective;
  if (obj.kind == Objective::Kind::sequence_loss) {
    if (t_len < 2) throw ValidationError("gradients: sequence_loss needs at least 2 tokens");
    const double scale = 1.0 / static_cast<double>(t_len - 1);
    double total = 0.0;
    for (std::size_t pos = 0; pos + 1 < t_len; ++pos) {
      Vec p = softmax_row(fr.logits[pos]);
      const int target = tokens[pos + 1];
      total += -std::log(p[static_cast<std::size_t>(target)]);
      double* row = dlogits.row_ptr(pos);
      for (std::size_t j = 0; j < cfg.vocab_size; ++j) row[j] = p[j] * scale;
      row[target] -= scale;
    }
    out.value = total * scale;
  } else {
    if (obj.position >= t_len) {
      throw ValidationError("gradients: objective position " + std::to_string(obj.position) + " out of range");
    }
    if (obj.token < 0 || static_cast<std::size_t>(obj.token) >= cfg.vocab_size) {
      throw ValidationError("gradients: objective token " + std::to_string(obj.token) + " out of vocab");
    }
    Vec p = softmax_row(fr.logits[obj.position]);
    out.value = -std::log(p[static_cast<std::size_t>(obj.token)]);
    double* row = dlogits.row_ptr(obj.position);
    for (std::size_t j = 0; j < cfg.vocab_size; ++j) row[j] = p[j];
    row[static_cast<std::size_t>(obj.token)] -= 1.0;
  }

  auto capture_site = [&](SiteKind kind, std::size_t layer, std::size_t token, const Matrix& grad_rows) {
    for (std::size_t i = 0; i < req.wanted_sites.size(); ++i) {
      const Site& s = req.wanted_sites[i];
      if (s.kind == kind && s.layer == layer && s.token == token) {
        out.site_grads[i] = grad_rows.row_vec(token);
      }
    }
  };

  // Unembedding: logits = final_norm * Wu^T, no bias.
  Matrix d_final_norm(t_len, d);
  {
    Vec dummy_bias(cfg.vocab_size, 0.0);
    back_linear(dlogits, ws.final_norm, params.unembedding, out.grads.unembedding, dummy_bias, d_final_norm);
  }

  // Final layer norm.
  Matrix dx(t_len, d);
  for (std::size_t t = 0; t < t_len; ++t) {
    back_layer_norm_row(d_final_norm.row_ptr(t), ws.final_hat.row_ptr(t), ws.final_inv_std[t], params.final_ln_gamma,
                        out.grads.final_ln_gamma.data(), out.grads.final_ln_beta.data(), dx.row_ptr(t), d);
  }

  for (std::size_t layer_i = cfg.n_layers; layer_i-- > 0;) {
    const LayerParams& lp = params.layers[layer_i];
    LayerParams& gl = out.grads.layers[layer_i];
    const detail::LayerWork& lw = ws.layers[layer_i];

    // dx currently holds dH for this layer's output.
    for (std::size_t t = 0; t < t_len; ++t) {
      if (hooks.find(SiteKind::hidden, layer_i, t)) {
        capture_site(SiteKind::hidden, layer_i, t, dx);
        zero_row(dx, t);
      }
    }

    // H = Xr + M.
    Matrix dm = dx;  // copy; dx keeps flowing to Xr
    for (std::size_t t = 0; t < t_len; ++t) {
      if (hooks.find(SiteKind::mlp_out, layer_i, t)) {
        capture_site(SiteKind::mlp_out, layer_i, t, dm);
        zero_row(dm, t);
      }
    }

    // M = gelu(Z) * W_out^T + b_out.
    Matrix inner(t_len, cfg.d_mlp);
    for (std::size_t t = 0; t < t_len; ++t) {
      const Vec& g = fr.tape.mlp_inner[layer_i][t];
      for (std::size_t i = 0; i < cfg.d_mlp; ++i) inner.at(t, i) = g[i];
    }
    Matrix dinner(t_len, cfg.d_mlp);
    back_linear(dm, inner, lp.w_out, gl.w_out, gl.b_out, dinner);

    Matrix dz(t_len, cfg.d_mlp);
    for (std::size_t i = 0; i < dz.size(); ++i) {
      dz.data()[i] = dinner.data()[i] * gelu_derivative(lw.z.data()[i]);
    }

    Matrix dln2(t_len, d);
    back_linear(dz, lw.ln2, lp.w_in, gl.w_in, gl.b_in, dln2);

    // dx becomes dXr: residual path plus LN2 path.
    for (std::size_t t = 0; t < t_len; ++t) {
      back_layer_norm_row(dln2.row_ptr(t), lw.ln2_hat.row_ptr(t), lw.ln2_inv_std[t], lp.ln2_gamma,
                          gl.ln2_gamma.data(), gl.ln2_beta.data(), dx.row_ptr(t), d);
    }

    // Xr = X + A.
    Matrix da = dx;  // copy; dx keeps flowing to X
    for (std::size_t t = 0; t < t_len; ++t) {
      if (hooks.find(SiteKind::attn_out, layer_i, t)) {
        capture_site(SiteKind::attn_out, layer_i, t, da);
        zero_row(da, t);
      }
    }

    // A = ctx * Wo^T + bo.
    Matrix dctx(t_len, d);
    back_linear(da, lw.ctx, lp.wo, gl.wo, gl.bo, dctx);

    // Attention core.
    Matrix dq(t_len, d), dk(t_len, d), dv(t_len, d);
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t off = h * hd;
      const Matrix& probs = lw.attn_probs[h];
      for (std::size_t t = 0; t < t_len; ++t) {
        const double* dctx_t = dctx.row_ptr(t) + off;
        // dP and the softmax Jacobian, rows limited to j <= t.
        Vec dp(t + 1, 0.0);
        for (std::size_t j = 0; j <= t; ++j) {
          const double* vj = lw.v.row_ptr(j) + off;
          double acc = 0.0;
          for (std::size_t c = 0; c < hd; ++c) acc += dctx_t[c] * vj[c];
          dp[j] = acc;
          const double ptj = probs.at(t, j);
          double* dvj = dv.row_ptr(j) + off;
          for (std::size_t c = 0; c < hd; ++c) dvj[c] += ptj * dctx_t[c];
        }
        double dot_pd = 0.0;
        for (std::size_t j = 0; j <= t; ++j) dot_pd += probs.at(t, j) * dp[j];
        double* dq_t = dq.row_ptr(t) + off;
        const double* q_t = lw.q.row_ptr(t) + off;
        for (std::size_t j = 0; j <= t; ++j) {
          const double ds = probs.at(t, j) * (dp[j] - dot_pd) * inv_sqrt_hd;
          if (ds == 0.0) continue;
          const double* kj = lw.k.row_ptr(j) + off;
          double* dk_j = dk.row_ptr(j) + off;
          for (std::size_t c = 0; c < hd; ++c) {
            dq_t[c] += ds * kj[c];
            dk_j[c] += ds * q_t[c];
          }
        }
      }
    }

    Matrix dln1(t_len, d);
    back_linear(dq, lw.ln1, lp.wq, gl.wq, gl.bq, dln1);
    back_linear(dk, lw.ln1, lp.wk, gl.wk, gl.bk, dln1);
    back_linear(dv, lw.ln1, lp.wv, gl.wv, gl.bv, dln1);

    for (std::size_t t = 0; t < t_len; ++t) {
      back_layer_norm_row(dln1.row_ptr(t), lw.ln1_hat.row_ptr(t), lw.ln1_inv_std[t], lp.ln1_gamma,
                          gl.ln1_gamma.data(), gl.ln1_beta.data(), dx.row_ptr(t), d);
    }
  }

  // Embeddings. Noise is additive so the gradient passes through unchanged.
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* dxt = dx.row_ptr(t);
    double* te = out.grads.token_embedding.row_ptr(static_cast<std::size_t>(tokens[t]));
    double* pe = out.grads.pos_embedding.row_ptr(t);
    for (std::size_t i = 0; i < d; ++i) {
      te[i] += dxt[i];
      pe[i] += dxt[i];
    }
  }

  return out;
}

}  // namespace reltrace

#include "model/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "numerics/rng.hpp"

static_assert(std::endian::native == std::endian::little, "weight file io assumes a little-endian host");

namespace reltrace {

namespace {

Parameters make_shaped(const ModelConfig& cfg) {
  cfg.validate();
  Parameters p;
  p.config = cfg;
  p.token_embedding = Matrix(cfg.vocab_size, cfg.d_model);
  p.pos_embedding = Matrix(cfg.max_seq, cfg.d_model);
  p.layers.resize(cfg.n_layers);
  for (auto& l : p.layers) {
    l.ln1_gamma = Vec(cfg.d_model, 0.0);
    l.ln1_beta = Vec(cfg.d_model, 0.0);
    l.wq = Matrix(cfg.d_model, cfg.d_model);
    l.wk = Matrix(cfg.d_model, cfg.d_model);
    l.wv = Matrix(cfg.d_model, cfg.d_model);
    l.wo = Matrix(cfg.d_model, cfg.d_model);
    l.bq = Vec(cfg.d_model, 0.0);
    l.bk = Vec(cfg.d_model, 0.0);
    l.bv = Vec(cfg.d_model, 0.0);
    l.bo = Vec(cfg.d_model, 0.0);
    l.ln2_gamma = Vec(cfg.d_model, 0.0);
    l.ln2_beta = Vec(cfg.d_model, 0.0);
    l.w_in = Matrix(cfg.d_mlp, cfg.d_model);
    l.b_in = Vec(cfg.d_mlp, 0.0);
    l.w_out = Matrix(cfg.d_model, cfg.d_mlp);
    l.b_out = Vec(cfg.d_model, 0.0);
  }
  p.final_ln_gamma = Vec(cfg.d_model, 0.0);
  p.final_ln_beta = Vec(cfg.d_model, 0.0);
  p.unembedding = Matrix(cfg.vocab_size, cfg.d_model);
  return p;
}

}  // namespace

Parameters Parameters::zeros(const ModelConfig& cfg) { return make_shaped(cfg); }

Parameters Parameters::init(const ModelConfig& cfg, std::uint64_t seed) {
  Parameters p = make_shaped(cfg);
  RngState rng(seed, 0);
  auto fill_normal = [&rng](Matrix& m) {
    for (double& x : m.data()) x = rng.normal() * 0.02;
  };
  fill_normal(p.token_embedding);
  fill_normal(p.pos_embedding);
  for (auto& l : p.layers) {
    fill_normal(l.wq);
    fill_normal(l.wk);
    fill_normal(l.wv);
    fill_normal(l.wo);
    fill_normal(l.w_in);
    fill_normal(l.w_out);
    for (double& g : l.ln1_gamma) g = 1.0;
    for (double& g : l.ln2_gamma) g = 1.0;
  }
  for (double& g : p.final_ln_gamma) g = 1.0;
  fill_normal(p.unembedding);
  return p;
}

std::vector<TensorRef> Parameters::tensors() {
  std::vector<TensorRef> out;
  out.reserve(4 + layers.size() * 16);
  auto add_m = [&out](const std::string& name, Matrix& m) { out.push_back({name, m.data().data(), m.size()}); };
  auto add_v = [&out](const std::string& name, Vec& v) { out.push_back({name, v.data(), v.size()}); };
  add_m("token_embedding", token_embedding);
  add_m("pos_embedding", pos_embedding);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = layers[i];
    const std::string pre = "layer" + std::to_string(i) + ".";
    add_v(pre + "ln1_gamma", l.ln1_gamma);
    add_v(pre + "ln1_beta", l.ln1_beta);
    add_m(pre + "wq", l.wq);
    add_v(pre + "bq", l.bq);
    add_m(pre + "wk", l.wk);
    add_v(pre + "bk", l.bk);
    add_m(pre + "wv", l.wv);
    add_v(pre + "bv", l.bv);
    add_m(pre + "wo", l.wo);
    add_v(pre + "bo", l.bo);
    add_v(pre + "ln2_gamma", l.ln2_gamma);
    add_v(pre + "ln2_beta", l.ln2_beta);
    add_m(pre + "w_in", l.w_in);
    add_v(pre + "b_in", l.b_in);
    add_m(pre + "w_out", l.w_out);
    add_v(pre + "b_out", l.b_out);
  }
  add_v("final_ln_gamma", final_ln_gamma);
  add_v("final_ln_beta", final_ln_beta);
  add_m("unembedding", unembedding);
  return out;
}

std::vector<TensorRef> Parameters::tensors() const { return const_cast<Parameters*>(this)->tensors(); }

std::size_t Parameters::total_size() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size;
  return n;
}

bool Parameters::all_finite() const {
  for (const auto& t : tensors()) {
    for (std::size_t i = 0; i < t.size; ++i) {
      if (!std::isfinite(t.data[i])) return false;
    }
  }
  return true;
}

void save_weights(const Parameters& p, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("save_weights: cannot open " + path);
  const ModelConfig& c = p.config;
  f << "RTW1 " << c.n_layers << " " << c.d_model << " " << c.n_heads << " " << c.d_mlp << " " << c.vocab_size << " "
    << c.max_seq << "\n";
  for (const auto& t : p.tensors()) {
    f.write(reinterpret_cast<const char*>(t.data), static_cast<std::streamsize>(t.size * sizeof(double)));
  }
  if (!f) throw ValidationError("save_weights: write failed for " + path);
}

Parameters load_weights(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("load_weights: cannot open " + path);
  std::string header;
  if (!std::getline(f, header)) throw ValidationError("load_weights: missing header in " + path);
  std::istringstream hs(header);
  std::string magic;
  ModelConfig cfg;
  hs >> magic >> cfg.n_layers >> cfg.d_model >> cfg.n_heads >> cfg.d_mlp >> cfg.vocab_size >> cfg.max_seq;
  if (!hs || magic != "RTW1") {
    throw ValidationError("load_weights: bad magic or malformed header in " + path);
  }
  Parameters p = Parameters::zeros(cfg);
  for (auto& t : p.tensors()) {
    f.read(reinterpret_cast<char*>(t.data), static_cast<std::streamsize>(t.size * sizeof(double)));
    if (f.gcount() != static_cast<std::streamsize>(t.size * sizeof(double))) {
      throw ValidationError("load_weights: truncated tensor " + t.name + " in " + path);
    }
  }
  char extra;
  if (f.read(&extra, 1)) {
    throw ValidationError("load_weights: trailing bytes after tensors in " + path);
  }
  if (!p.all_finite()) throw ValidationError("load_weights: non-finite entries in " + path);
  return p;
}

}  // namespace reltrace

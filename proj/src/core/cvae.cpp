#include "cvae.hpp"

#include <cmath>

#include "errors.hpp"

namespace lsr::nn {

using ad::Matrix;
using ad::Tape;
using ad::Var;

void ModelConfig::validate() const {
  if (latent_dim < 1 || numeric_embed_dim < 1 || layers < 1 || heads < 1 || ffn_dim < 1 ||
      latent_samples < 1)
    throw InvalidArgument("model dimensions must be positive");
  if (latent_dim % heads != 0) throw InvalidArgument("latent_dim must be divisible by heads");
  if (max_vars < 1 || max_vars > kMaxVariables) throw InvalidArgument("max_vars must lie in [1, 10]");
  if (pad_len < 3) throw InvalidArgument("pad_len must be at least 3");
}

int Model::add_param(const char* name, int rows, int cols, double std, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std * rng.normal();
  params_.emplace_back(name, std::move(m));
  return static_cast<int>(params_.size()) - 1;
}

int Model::add_const_param(const char* name, int rows, int cols, double value) {
  params_.emplace_back(name, Matrix::Constant(rows, cols, value));
  return static_cast<int>(params_.size()) - 1;
}

Model::AttentionIds Model::add_attention(const std::string& prefix, Rng& rng) {
  const int d = cfg_.latent_dim;
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  AttentionIds a{};
  a.wq = add_param((prefix + ".wq").c_str(), d, d, s, rng);
  a.wk = add_param((prefix + ".wk").c_str(), d, d, s, rng);
  a.wv = add_param((prefix + ".wv").c_str(), d, d, s, rng);
  a.wo = add_param((prefix + ".wo").c_str(), d, d, s, rng);
  a.bo = add_const_param((prefix + ".bo").c_str(), 1, d, 0.0);
  return a;
}

Model::FfnIds Model::add_ffn(const std::string& prefix, Rng& rng) {
  const int d = cfg_.latent_dim;
  const int h = cfg_.ffn_dim;
  FfnIds f{};
  f.w1 = add_param((prefix + ".w1").c_str(), d, h, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  f.b1 = add_const_param((prefix + ".b1").c_str(), 1, h, 0.0);
  f.w2 = add_param((prefix + ".w2").c_str(), h, d, 1.0 / std::sqrt(static_cast<double>(h)), rng);
  f.b2 = add_const_param((prefix + ".b2").c_str(), 1, d, 0.0);
  return f;
}

Model::HeadIds Model::add_head(const std::string& prefix, Rng& rng) {
  const int d = cfg_.latent_dim;
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  HeadIds h{};
  h.hidden_w = add_param((prefix + ".hidden_w").c_str(), d, d, s, rng);
  h.hidden_b = add_const_param((prefix + ".hidden_b").c_str(), 1, d, 0.0);
  h.mean_w = add_param((prefix + ".mean_w").c_str(), d, d, s, rng);
  h.mean_b = add_const_param((prefix + ".mean_b").c_str(), 1, d, 0.0);
  // Small initial log-variances keep early KL and sampling well scaled.
  h.logvar_w = add_param((prefix + ".logvar_w").c_str(), d, d, 0.1 * s, rng);
  h.logvar_b = add_const_param((prefix + ".logvar_b").c_str(), 1, d, 0.0);
  return h;
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = Rng(cfg_.init_seed).derive("init");
  const int d = cfg_.latent_dim;
  const int dn = cfg_.numeric_embed_dim;
  const int slots = 3 * (cfg_.max_vars + 1);

  // Every later index refers into params_, so its storage must never move.
  params_.reserve(64 + 32 * static_cast<std::size_t>(cfg_.layers));

  num_emb_ = add_param("numeric.embedding", Vocabulary::kSize, dn, 1.0, rng);
  num_proj_w_ = add_param("numeric.proj_w", slots * dn, d, 1.0 / std::sqrt(static_cast<double>(slots * dn)), rng);
  num_proj_b_ = add_const_param("numeric.proj_b", 1, d, 0.0);
  eq_emb_ = add_param("equation.embedding", kOutputVocab, d, 1.0, rng);
  mask_tok_ = add_param("prior.mask_token", 1, d, 1.0, rng);

  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string pre = "encoder." + std::to_string(l);
    EncoderLayerIds e{};
    e.ln1_g = add_const_param((pre + ".ln1_g").c_str(), 1, d, 1.0);
    e.ln1_b = add_const_param((pre + ".ln1_b").c_str(), 1, d, 0.0);
    e.attn = add_attention(pre + ".attn", rng);
    e.ln2_g = add_const_param((pre + ".ln2_g").c_str(), 1, d, 1.0);
    e.ln2_b = add_const_param((pre + ".ln2_b").c_str(), 1, d, 0.0);
    e.ffn = add_ffn(pre + ".ffn", rng);
    enc_.push_back(e);
  }
  enc_ln_g_ = add_const_param("encoder.ln_g", 1, d, 1.0);
  enc_ln_b_ = add_const_param("encoder.ln_b", 1, d, 0.0);

  post_head_ = add_head("posterior", rng);
  prior_head_ = add_head("prior", rng);

  fuse_w_ = add_param("fusion.w", d, d, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  fuse_b_ = add_const_param("fusion.b", 1, d, 0.0);

  dec_query_ = add_param("decoder.queries", cfg_.pad_len, d, 1.0, rng);
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string pre = "decoder." + std::to_string(l);
    DecoderLayerIds e{};
    e.ln1_g = add_const_param((pre + ".ln1_g").c_str(), 1, d, 1.0);
    e.ln1_b = add_const_param((pre + ".ln1_b").c_str(), 1, d, 0.0);
    e.self_attn = add_attention(pre + ".self_attn", rng);
    e.ln2_g = add_const_param((pre + ".ln2_g").c_str(), 1, d, 1.0);
    e.ln2_b = add_const_param((pre + ".ln2_b").c_str(), 1, d, 0.0);
    e.cross_attn = add_attention(pre + ".cross_attn", rng);
    e.ln3_g = add_const_param((pre + ".ln3_g").c_str(), 1, d, 1.0);
    e.ln3_b = add_const_param((pre + ".ln3_b").c_str(), 1, d, 0.0);
    e.ffn = add_ffn(pre + ".ffn", rng);
    dec_.push_back(e);
  }
  dec_ln_g_ = add_const_param("decoder.ln_g", 1, d, 1.0);
  dec_ln_b_ = add_const_param("decoder.ln_b", 1, d, 0.0);
  out_w_ = add_param("decoder.out_w", d, kOutputVocab, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  out_b_ = add_const_param("decoder.out_b", 1, kOutputVocab, 0.0);

  positions_.resize(cfg_.pad_len, d);
  for (int pos = 0; pos < cfg_.pad_len; ++pos)
    for (int i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d);
      positions_(pos, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& prm : params_) n += prm.size();
  return n;
}

void Model::zero_grad() {
  for (auto& prm : params_) prm.grad.setZero();
}

void Model::check_grid(const SampleGrid& g) const {
  if (g.width != cfg_.max_vars)
    throw ShapeError("sample grid width " + std::to_string(g.width) + " does not match model width " +
                     std::to_string(cfg_.max_vars));
  if (g.rows < 1 || g.ids.size() != g.rows * g.row_length()) throw ShapeError("malformed sample grid");
}

void Model::check_target(const TokenSeq& t) const {
  if (static_cast<int>(t.size()) != cfg_.pad_len)
    throw ShapeError("equation length " + std::to_string(t.size()) + " does not match pad length " +
                     std::to_string(cfg_.pad_len));
  if (t.front() != Vocabulary::kBos) throw ShapeError("equation must start with BOS");
  bool eos = false;
  for (TokenId id : t) {
    if (!Vocabulary::is_structural(id)) throw ShapeError("equation targets must be structural tokens");
    eos = eos || id == Vocabulary::kEos;
  }
  if (!eos) throw ShapeError("equation has no EOS");
}

Var Model::p(Tape& t, int id) const {
  const ad::Parameter& prm = params_[static_cast<std::size_t>(id)];
  if (t.recording()) return t.param(const_cast<ad::Parameter&>(prm));
  return t.param(prm);
}

Var Model::linear(Tape& t, Var x, int w, int b) const {
  return t.add_row(t.matmul(x, p(t, w)), p(t, b));
}

Var Model::attention(Tape& t, const AttentionIds& a, Var q_in, Var kv_in) const {
  const Var q = t.matmul(q_in, p(t, a.wq));
  const Var k = t.matmul(kv_in, p(t, a.wk));
  const Var v = t.matmul(kv_in, p(t, a.wv));
  const int dh = cfg_.latent_dim / cfg_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(cfg_.heads));
  for (int h = 0; h < cfg_.heads; ++h) {
    const Var qh = t.slice_cols(q, h * dh, dh);
    const Var kh = t.slice_cols(k, h * dh, dh);
    const Var vh = t.slice_cols(v, h * dh, dh);
    const Var weights = t.softmax_rows(t.scale(t.matmul_bt(qh, kh), inv_sqrt));
    heads.push_back(t.matmul(weights, vh));
  }
  const Var merged = cfg_.heads == 1 ? heads[0] : t.concat_cols(heads);
  return linear(t, merged, a.wo, a.bo);
}

Var Model::ffn(Tape& t, const FfnIds& f, Var x) const {
  return linear(t, t.tanh(linear(t, x, f.w1, f.b1)), f.w2, f.b2);
}

Var Model::encode(Tape& t, Var x) const {
  Var h = x;
  for (const auto& l : enc_) {
    const Var a = t.layer_norm_rows(h, p(t, l.ln1_g), p(t, l.ln1_b));
    h = t.add(h, attention(t, l.attn, a, a));
    h = t.add(h, ffn(t, l.ffn, t.layer_norm_rows(h, p(t, l.ln2_g), p(t, l.ln2_b))));
  }
  return t.mean_rows(t.layer_norm_rows(h, p(t, enc_ln_g_), p(t, enc_ln_b_)));
}

GaussianVars Model::head(Tape& t, const HeadIds& h, Var pooled) const {
  const Var hidden = t.tanh(linear(t, pooled, h.hidden_w, h.hidden_b));
  return {linear(t, hidden, h.mean_w, h.mean_b),
          t.clamp(linear(t, hidden, h.logvar_w, h.logvar_b), -kLogVarClamp, kLogVarClamp)};
}

Var Model::embed_samples(Tape& t, const SampleGrid& grid) const {
  check_grid(grid);
  std::vector<int> ids(grid.ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = grid.ids[i].value;
  const Var flat = t.gather_rows(p(t, num_emb_), ids);
  const int rows = static_cast<int>(grid.rows);
  const int cols = static_cast<int>(grid.row_length()) * cfg_.numeric_embed_dim;
  return linear(t, t.reshape(flat, rows, cols), num_proj_w_, num_proj_b_);
}

GaussianVars Model::posterior(Tape& t, Var samples, const TokenSeq& target) const {
  check_target(target);
  std::vector<int> ids;
  for (TokenId id : target) {
    ids.push_back(id.value);
    if (id == Vocabulary::kEos) break;
  }
  const int len = static_cast<int>(ids.size());
  const Var eq = t.add_const(t.gather_rows(p(t, eq_emb_), ids), positions_.topRows(len));
  const Var joined = t.concat_rows(std::vector<Var>{samples, eq});
  return head(t, post_head_, encode(t, joined));
}

GaussianVars Model::prior(Tape& t, Var samples) const {
  const Var joined = t.concat_rows(std::vector<Var>{samples, p(t, mask_tok_)});
  return head(t, prior_head_, encode(t, joined));
}

Var Model::fuse(Tape& t, Var latents) const {
  return linear(t, t.mean_rows(latents), fuse_w_, fuse_b_);
}

Var Model::decode_logits(Tape& t, Var fused, Var samples) const {
  const Var memory = t.concat_rows(std::vector<Var>{fused, samples});
  Var q = t.add_const(p(t, dec_query_), positions_);
  for (const auto& l : dec_) {
    const Var a = t.layer_norm_rows(q, p(t, l.ln1_g), p(t, l.ln1_b));
    q = t.add(q, attention(t, l.self_attn, a, a));
    const Var c = t.layer_norm_rows(q, p(t, l.ln2_g), p(t, l.ln2_b));
    q = t.add(q, attention(t, l.cross_attn, c, memory));
    q = t.add(q, ffn(t, l.ffn, t.layer_norm_rows(q, p(t, l.ln3_g), p(t, l.ln3_b))));
  }
  return linear(t, t.layer_norm_rows(q, p(t, dec_ln_g_), p(t, dec_ln_b_)), out_w_, out_b_);
}

DiagGaussian Model::to_gaussian(const Tape& t, const GaussianVars& g) const {
  const Matrix& mu = t.value(g.mean);
  const Matrix& lv = t.value(g.logvar);
  DiagGaussian out;
  out.mean.assign(mu.data(), mu.data() + mu.size());
  out.var.resize(static_cast<std::size_t>(lv.size()));
  for (Eigen::Index i = 0; i < lv.size(); ++i) out.var[static_cast<std::size_t>(i)] = std::exp(lv.data()[i]);
  return out;
}

DiagGaussian Model::encode_posterior(const SampleGrid& grid, const TokenSeq& target) const {
  Tape t(false);
  return to_gaussian(t, posterior(t, embed_samples(t, grid), target));
}

DiagGaussian Model::encode_prior(const SampleGrid& grid) const {
  Tape t(false);
  return to_gaussian(t, prior(t, embed_samples(t, grid)));
}

Matrix Model::sample_embedding(const SampleGrid& grid) const {
  Tape t(false);
  return t.value(embed_samples(t, grid));
}

Matrix Model::decode_embedded(std::span<const double> z, const Matrix& samples) const {
  if (static_cast<int>(z.size()) != cfg_.latent_dim) throw ShapeError("latent dimension mismatch");
  if (samples.cols() != cfg_.latent_dim) throw ShapeError("sample embedding width mismatch");
  Tape t(false);
  Matrix zm = Eigen::Map<const Matrix>(z.data(), 1, cfg_.latent_dim);
  return t.value(decode_logits(t, fuse(t, t.constant(std::move(zm))), t.constant(samples)));
}

Matrix Model::decode(std::span<const double> z, const SampleGrid& grid) const {
  return decode_embedded(z, sample_embedding(grid));
}

namespace {

TokenSeq argmax_readout(const Matrix& logits) {
  TokenSeq out;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    logits.row(r).maxCoeff(&best);
    out.push_back(TokenId{static_cast<std::int32_t>(best)});
    if (out.back() == Vocabulary::kEos) break;
  }
  return out;
}

}  // namespace

TokenSeq Model::greedy_decode(std::span<const double> z, const SampleGrid& grid) const {
  return argmax_readout(decode(z, grid));
}

TokenSeq Model::greedy_decode_embedded(std::span<const double> z, const Matrix& samples) const {
  return argmax_readout(decode_embedded(z, samples));
}

LossTerms Model::loss(std::span<const Example> batch, double lambda, const Rng& rng, bool accumulate) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  if (lambda < 0.0) throw InvalidArgument("KL weight must be non-negative");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const int d = cfg_.latent_dim;
  LossTerms out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Example& ex = batch[i];
    Tape t(accumulate);
    const Var samples = embed_samples(t, ex.grid);
    const GaussianVars post = posterior(t, samples, ex.target);
    const GaussianVars pri = prior(t, samples);

    Rng eps_rng = rng.derive("latent", i);
    Matrix eps(cfg_.latent_samples, d);
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps.data()[k] = eps_rng.normal();
    const Var sigma = t.exp(t.scale(post.logvar, 0.5));
    const Var z = t.add_row(t.mul_row(t.constant(std::move(eps)), sigma), post.mean);
    const Var logits = decode_logits(t, fuse(t, z), samples);

    std::vector<int> targets;
    for (TokenId id : ex.target) {
      if (id == Vocabulary::kPad) break;
      targets.push_back(id.value);
    }
    const Var ce = t.cross_entropy_rows(t.slice_rows(logits, 0, static_cast<int>(targets.size())), targets);

    // KL(q || p) = 1/2 sum[(mu_q - mu_p)^2 / var_p + var_q / var_p - ln(var_q / var_p) - 1]
    const Var diff = t.sub(post.mean, pri.mean);
    const Var log_ratio = t.sub(post.logvar, pri.logvar);
    const Var terms = t.sub(t.add(t.mul(t.mul(diff, diff), t.exp(t.scale(pri.logvar, -1.0))), t.exp(log_ratio)),
                            log_ratio);
    const Var kl = t.scale(t.add_scalar(t.sum(terms), -static_cast<double>(d)), 0.5);

    const double ce_v = t.scalar(ce);
    const double kl_v = t.scalar(kl);
    out.lce += ce_v * inv_b;
    out.lkl += kl_v * inv_b;
    if (accumulate) t.backward(t.scale(t.add(ce, t.scale(kl, lambda)), inv_b));
  }
  out.total = out.lce + lambda * out.lkl;
  return out;
}

}  // namespace lsr::nn

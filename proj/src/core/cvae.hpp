#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "autodiff.hpp"
#include "encoding.hpp"
#include "gaussian.hpp"
#include "rng.hpp"

namespace lsr::nn {

struct ModelConfig {
  int latent_dim = 32;          // d: model width and latent dimension
  int numeric_embed_dim = 8;    // d_n
  int layers = 2;               // encoder and decoder depth
  int heads = 2;
  int ffn_dim = 64;
  int max_vars = 2;             // sample-grid width
  int pad_len = 16;             // equation length including BOS/EOS
  int latent_samples = 4;       // n draws fused per training example
  std::uint64_t init_seed = 0;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Output vocabulary of the decoder: the structural token block.
inline constexpr int kOutputVocab = Vocabulary::kStructuralSize;

// One training pair: numeric samples and the padded skeleton ids.
struct Example {
  SampleGrid grid;
  TokenSeq target;
};

struct GaussianVars {
  ad::Var mean;
  ad::Var logvar;
};

struct LossTerms {
  double total = 0.0;
  double lce = 0.0;  // mean over the batch of the summed token cross-entropy
  double lkl = 0.0;  // mean over the batch of KL(posterior || prior)
};

// Dual-branch conditional VAE. The posterior branch encodes (samples,
// equation), the prior branch encodes samples plus a learned mask token; both
// share the numeric embedder and the encoder stack. The decoder is
// non-autoregressive: learned position queries attend to a memory made of the
// fused latent followed by the embedded samples.
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  std::vector<ad::Parameter>& parameters() { return params_; }
  const std::vector<ad::Parameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  void zero_grad();

  // Differentiable building blocks; Tape::param binds weights as needed.
  ad::Var embed_samples(ad::Tape& t, const SampleGrid& grid) const;
  GaussianVars posterior(ad::Tape& t, ad::Var samples, const TokenSeq& target) const;
  GaussianVars prior(ad::Tape& t, ad::Var samples) const;
  ad::Var fuse(ad::Tape& t, ad::Var latents) const;  // n x d -> 1 x d
  ad::Var decode_logits(ad::Tape& t, ad::Var fused, ad::Var samples) const;

  // Inference helpers on a non-recording tape.
  DiagGaussian encode_posterior(const SampleGrid& grid, const TokenSeq& target) const;
  DiagGaussian encode_prior(const SampleGrid& grid) const;
  ad::Matrix decode(std::span<const double> z, const SampleGrid& grid) const;
  // Argmax per position from position 0 through the first EOS (inclusive).
  TokenSeq greedy_decode(std::span<const double> z, const SampleGrid& grid) const;
  // Same as above with the sample embedding computed once and reused.
  ad::Matrix sample_embedding(const SampleGrid& grid) const;
  ad::Matrix decode_embedded(std::span<const double> z, const ad::Matrix& samples) const;
  TokenSeq greedy_decode_embedded(std::span<const double> z, const ad::Matrix& samples) const;

  // Per-example loss sum_tokens CE + lambda * KL, with gradients (scaled by
  // 1/batch) accumulated into the parameters when `accumulate` is set.
  // Latent noise for example i comes from rng.derive("latent", i).
  LossTerms loss(std::span<const Example> batch, double lambda, const Rng& rng, bool accumulate);

  void check_grid(const SampleGrid& g) const;
  void check_target(const TokenSeq& t) const;

 private:
  struct AttentionIds {
    int wq, wk, wv, wo, bo;
  };
  struct FfnIds {
    int w1, b1, w2, b2;
  };
  struct EncoderLayerIds {
    int ln1_g, ln1_b, ln2_g, ln2_b;
    AttentionIds attn;
    FfnIds ffn;
  };
  struct DecoderLayerIds {
    int ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;
    AttentionIds self_attn, cross_attn;
    FfnIds ffn;
  };
  struct HeadIds {
    int hidden_w, hidden_b, mean_w, mean_b, logvar_w, logvar_b;
  };

  int add_param(const char* name, int rows, int cols, double std, Rng& rng);
  int add_const_param(const char* name, int rows, int cols, double value);
  AttentionIds add_attention(const std::string& prefix, Rng& rng);
  FfnIds add_ffn(const std::string& prefix, Rng& rng);
  HeadIds add_head(const std::string& prefix, Rng& rng);

  ad::Var p(ad::Tape& t, int id) const;
  ad::Var linear(ad::Tape& t, ad::Var x, int w, int b) const;
  ad::Var attention(ad::Tape& t, const AttentionIds& a, ad::Var q_in, ad::Var kv_in) const;
  ad::Var ffn(ad::Tape& t, const FfnIds& f, ad::Var x) const;
  ad::Var encode(ad::Tape& t, ad::Var x) const;  // shared encoder stack, mean-pooled
  GaussianVars head(ad::Tape& t, const HeadIds& h, ad::Var pooled) const;
  DiagGaussian to_gaussian(const ad::Tape& t, const GaussianVars& g) const;

  ModelConfig cfg_;
  std::vector<ad::Parameter> params_;
  ad::Matrix positions_;  // pad_len x d sinusoidal encoding

  int num_emb_, num_proj_w_, num_proj_b_, eq_emb_, mask_tok_;
  std::vector<EncoderLayerIds> enc_;
  int enc_ln_g_, enc_ln_b_;
  HeadIds post_head_, prior_head_;
  int fuse_w_, fuse_b_;
  int dec_query_;
  std::vector<DecoderLayerIds> dec_;
  int dec_ln_g_, dec_ln_b_, out_w_, out_b_;
};

// Log-variance outputs are clamped to this range.
inline constexpr double kLogVarClamp = 10.0;

}  // namespace lsr::nn

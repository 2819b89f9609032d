#include "train.hpp"

#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace lsr::nn {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.98;
constexpr double kAdamEps = 1e-9;

bool all_finite(const ad::Matrix& m) { return m.allFinite(); }

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1 || epochs < 1 || steps_per_epoch < 1 || warmup < 1)
    throw InvalidArgument("batch size, epochs, steps per epoch and warmup must be positive");
  if (!(base_lr > 0.0)) throw InvalidArgument("base learning rate must be positive");
  if (!(kl_fraction > 0.0 && kl_fraction <= 1.0)) throw InvalidArgument("KL fraction must lie in (0, 1]");
  if (warmup > total_steps()) throw InvalidArgument("warmup exceeds total training steps");
}

double kl_weight(long step, long total_steps, double fraction) {
  if (total_steps <= 0) return 1.0;
  const double ramp = fraction * static_cast<double>(total_steps);
  return std::min(1.0, static_cast<double>(step) / ramp);
}

double lr_schedule(long step, long warmup, double base) {
  if (step < 1 || warmup < 1) throw InvalidArgument("learning-rate schedule needs step >= 1 and warmup >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return base * std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5));
}

void AdamState::reset(const std::vector<ad::Parameter>& params) {
  m.clear();
  v.clear();
  for (const auto& p : params) {
    m.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
    v.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
  }
  t = 0;
}

void AdamState::apply(std::vector<ad::Parameter>& params, double lr) {
  if (m.size() != params.size()) reset(params);
  ++t;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * p.grad;
    v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + kAdamEps);
  }
}

Example make_example(const Model& model, const CorpusEntry& entry) {
  const auto& cfg = model.config();
  Example ex{encode_samples(entry.data, cfg.max_vars),
             encode_equation(canonicalize_constants(entry.expr), static_cast<std::size_t>(cfg.pad_len))};
  model.check_grid(ex.grid);
  model.check_target(ex.target);
  return ex;
}

std::vector<Example> make_examples(const Model& model, const std::vector<CorpusEntry>& corpus) {
  std::vector<Example> out;
  out.reserve(corpus.size());
  for (const auto& e : corpus) out.push_back(make_example(model, e));
  return out;
}

Trainer::Trainer(Model& model, const TrainConfig& cfg) : model_(model), cfg_(cfg) {
  cfg_.validate();
  adam_.reset(model_.parameters());
}

std::vector<std::size_t> Trainer::batch_indices(long step, std::size_t n) const {
  // Epoch-wise shuffles; batches walk the shuffled order cyclically.
  const long epoch = (step - 1) / cfg_.steps_per_epoch;
  const long within = (step - 1) % cfg_.steps_per_epoch;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = Rng(cfg_.seed).derive("epoch", static_cast<std::uint64_t>(epoch));
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(cfg_.batch_size), n);
  std::vector<std::size_t> out(b);
  for (std::size_t j = 0; j < b; ++j) out[j] = perm[(static_cast<std::size_t>(within) * b + j) % n];
  return out;
}

void Trainer::set_source(const std::vector<CorpusEntry>& corpus, const GenConfig& domain) {
  source_ = &corpus;
  domain_ = domain;
}

Example Trainer::example_at(const std::vector<Example>& data, std::size_t i, long step) const {
  if (!cfg_.resample) return data[i];
  if (!source_ || source_->size() != data.size()) throw InvalidArgument("resampling needs the source corpus");
  const CorpusEntry& entry = (*source_)[i];
  GenConfig g = domain_;
  g.samples = static_cast<int>(entry.data.size());
  Rng rng = Rng(cfg_.seed).derive("resample", static_cast<std::uint64_t>(step)).derive("entry", i);
  Example ex = data[i];
  try {
    ex.grid = encode_samples(sample_dataset(entry.expr, g, rng), model_.config().max_vars);
  } catch (const Error&) {
    return data[i];
  }
  return ex;
}

TrainLogRow Trainer::train_step(const std::vector<Example>& data) {
  if (data.empty()) throw InvalidArgument("training corpus is empty");
  const long step = step_ + 1;
  std::vector<Example> batch;
  for (std::size_t i : batch_indices(step, data.size())) batch.push_back(example_at(data, i, step));

  TrainLogRow row;
  row.step = step;
  row.lambda = kl_weight(step, cfg_.total_steps(), cfg_.kl_fraction);
  row.lr = lr_schedule(step, cfg_.warmup, cfg_.base_lr);

  model_.zero_grad();
  const Rng noise = Rng(cfg_.seed).derive("step", static_cast<std::uint64_t>(step));
  const LossTerms terms = model_.loss(batch, row.lambda, noise, true);
  row.lce = terms.lce;
  row.lkl = terms.lkl;
  if (!std::isfinite(terms.total))
    throw NonFiniteLoss(step, "non-finite loss at step " + std::to_string(step));
  for (const auto& p : model_.parameters())
    if (!all_finite(p.grad))
      throw NonFiniteLoss(step, "non-finite gradient for " + p.name + " at step " + std::to_string(step));
  adam_.apply(model_.parameters(), row.lr);
  step_ = step;
  return row;
}

void Trainer::run(const std::vector<Example>& data, const std::function<void(const TrainLogRow&)>& on_step,
                  const std::function<void(long)>& on_epoch) {
  const long total = cfg_.total_steps();
  while (step_ < total) {
    const TrainLogRow row = train_step(data);
    if (on_step) on_step(row);
    if (on_epoch && step_ % cfg_.steps_per_epoch == 0) on_epoch(step_ / cfg_.steps_per_epoch);
  }
}

}  // namespace lsr::nn

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "corpus.hpp"
#include "cvae.hpp"
#include "datagen.hpp"

namespace lsr::nn {

struct TrainConfig {
  int batch_size = 16;
  int epochs = 10;
  int steps_per_epoch = 100;
  double base_lr = 0.05;
  int warmup = 200;
  double kl_fraction = 0.5;  // KL weight reaches 1 after this share of the steps
  // Draw fresh inputs for an entry each time it is used, keeping its
  // expression; the stored samples remain the fallback.
  bool resample = false;
  std::uint64_t seed = 0;

  long total_steps() const { return static_cast<long>(epochs) * steps_per_epoch; }
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// min(1, step / (fraction * total)).
double kl_weight(long step, long total_steps, double fraction = 0.5);
// base * min(step^-1/2, step * w^-3/2).
double lr_schedule(long step, long warmup, double base);

// Adam with beta = (0.9, 0.98), eps = 1e-9.
struct AdamState {
  std::vector<ad::Matrix> m;
  std::vector<ad::Matrix> v;
  long t = 0;

  void reset(const std::vector<ad::Parameter>& params);
  void apply(std::vector<ad::Parameter>& params, double lr);
};

struct TrainLogRow {
  long step = 0;
  double lce = 0.0;
  double lkl = 0.0;
  double lambda = 0.0;
  double lr = 0.0;
};

// Training pair for a corpus entry: samples on the model's grid width and the
// constant-free skeleton as the target sequence.
Example make_example(const Model& model, const CorpusEntry& entry);
std::vector<Example> make_examples(const Model& model, const std::vector<CorpusEntry>& corpus);

// Runs training from `step` (exclusive) up to cfg.total_steps(). The batch at
// a given step depends only on (seed, step), so a resumed run continues the
// exact sequence. `on_step` sees every log row; `on_epoch` fires after each
// completed epoch. Throws NonFiniteLoss with the step number.
class Trainer {
 public:
  Trainer(Model& model, const TrainConfig& cfg);

  long step() const { return step_; }
  const TrainConfig& config() const { return cfg_; }
  AdamState& adam() { return adam_; }
  const AdamState& adam() const { return adam_; }
  void set_step(long step) { step_ = step; }

  void run(const std::vector<Example>& data, const std::function<void(const TrainLogRow&)>& on_step = {},
           const std::function<void(long epoch)>& on_epoch = {});
  TrainLogRow train_step(const std::vector<Example>& data);

  // Corpus and sampling domain behind `data`, needed when cfg.resample is set.
  // The corpus must outlive the trainer.
  void set_source(const std::vector<CorpusEntry>& corpus, const GenConfig& domain);

  // Indices of the examples used at a given (1-based) step.
  std::vector<std::size_t> batch_indices(long step, std::size_t n) const;

 private:
  Model& model_;
  TrainConfig cfg_;
  Example example_at(const std::vector<Example>& data, std::size_t i, long step) const;

  AdamState adam_;
  long step_ = 0;
  const std::vector<CorpusEntry>* source_ = nullptr;
  GenConfig domain_;
};

}  // namespace lsr::nn

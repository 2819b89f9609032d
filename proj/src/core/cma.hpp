#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gaussian.hpp"
#include "rng.hpp"

namespace lsr {

struct CmaConfig {
  int population = 50;          // s
  int parents = 0;              // p; 0 selects s / 2
  int active_dims = 0;          // k; 0 selects d / 2
  double initial_step = 1.1;    // t, scales the prior standard deviations
  int max_generations = 100;
  double omega = 0.005;         // complexity weight in the fitness
  std::uint64_t seed = 0;

  int resolved_parents() const { return parents > 0 ? parents : std::max(1, population / 2); }
  int resolved_active(int dim) const { return active_dims > 0 ? std::min(active_dims, dim) : std::max(1, dim / 2); }
  void validate(int dim) const;
};

// Diagonal search distribution N(mean, step^2 * diag(var)). Only the `active`
// dimensions (the k largest variances) are perturbed and adapted; the others
// stay frozen at their current mean and variance.
struct CmaState {
  std::vector<double> mean;
  std::vector<double> var;
  double step = 1.0;
  long generation = 0;
  std::vector<int> active;     // ascending indices
  std::vector<double> path;    // cumulative step-size evolution path

  std::size_t dim() const { return mean.size(); }
  double mean_sigma() const;
};

struct RankedCandidate {
  std::vector<double> z;
  double fitness = 0.0;
  std::size_t complexity = 0;
  std::size_t index = 0;
};

// Descending fitness; ties to lower complexity, then lower index.
void rank_candidates(std::vector<RankedCandidate>& c);

// Indices of the k largest values (ties to the lower index), ascending.
std::vector<int> top_k_indices(std::span<const double> values, int k);

CmaState cma_init(const DiagGaussian& prior, const CmaConfig& cfg);

std::vector<std::vector<double>> cma_sample(const CmaState& state, int count, Rng& rng);

// One generation of the diagonal, top-k update from candidates already
// ranked by rank_candidates(). Throws DegenerateError when no candidate has
// finite fitness.
CmaState cma_update(const CmaState& state, std::span<const RankedCandidate> ranked, const CmaConfig& cfg);

// Multiplies every sampling standard deviation by `factor`.
void cma_widen(CmaState& state, double factor = 2.0);

}  // namespace lsr

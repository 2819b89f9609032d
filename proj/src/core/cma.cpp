#include "cma.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace lsr {

void CmaConfig::validate(int dim) const {
  if (population < 1) throw InvalidArgument("population size must be at least 1");
  const int p = resolved_parents();
  if (p < 1 || p > population) throw InvalidArgument("parents must satisfy 1 <= p <= s");
  const int k = resolved_active(dim);
  if (k < 1 || k > dim) throw InvalidArgument("active dimensions must satisfy 1 <= k <= d");
  if (!(initial_step > 0.0)) throw InvalidArgument("initial step must be positive");
  if (max_generations < 0) throw InvalidArgument("max generations must be non-negative");
  if (omega < 0.0) throw InvalidArgument("omega must be non-negative");
}

double CmaState::mean_sigma() const {
  if (var.empty()) return 0.0;
  double s = 0.0;
  for (double v : var) s += std::sqrt(v);
  return step * s / static_cast<double>(var.size());
}

void rank_candidates(std::vector<RankedCandidate>& c) {
  std::sort(c.begin(), c.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.fitness != b.fitness) return a.fitness > b.fitness;
    if (a.complexity != b.complexity) return a.complexity < b.complexity;
    return a.index < b.index;
  });
}

std::vector<int> top_k_indices(std::span<const double> values, int k) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto kk = static_cast<std::size_t>(std::clamp<int>(k, 0, static_cast<int>(values.size())));
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kk), idx.end(), [&](int a, int b) {
    if (values[static_cast<std::size_t>(a)] != values[static_cast<std::size_t>(b)])
      return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)];
    return a < b;
  });
  idx.resize(kk);
  std::sort(idx.begin(), idx.end());
  return idx;
}

CmaState cma_init(const DiagGaussian& prior, const CmaConfig& cfg) {
  prior.validate();
  const int d = static_cast<int>(prior.dim());
  cfg.validate(d);
  CmaState s;
  s.mean = prior.mean;
  s.var.resize(prior.dim());
  const double t2 = cfg.initial_step * cfg.initial_step;
  for (std::size_t j = 0; j < prior.dim(); ++j) s.var[j] = t2 * prior.var[j];
  s.step = 1.0;
  s.active = top_k_indices(s.var, cfg.resolved_active(d));
  s.path.assign(prior.dim(), 0.0);
  return s;
}

std::vector<std::vector<double>> cma_sample(const CmaState& state, int count, Rng& rng) {
  if (count < 1) throw InvalidArgument("population size must be at least 1");
  std::vector<std::vector<double>> out(static_cast<std::size_t>(count), state.mean);
  for (auto& z : out)
    for (int j : state.active) {
      const auto u = static_cast<std::size_t>(j);
      z[u] += state.step * std::sqrt(state.var[u]) * rng.normal();
    }
  return out;
}

CmaState cma_update(const CmaState& state, std::span<const RankedCandidate> ranked, const CmaConfig& cfg) {
  const int d = static_cast<int>(state.dim());
  if (ranked.empty() || !std::isfinite(ranked.front().fitness))
    throw DegenerateError("no candidate in this generation has finite fitness");
  const int p = std::min<int>(cfg.resolved_parents(), static_cast<int>(ranked.size()));

  // Log-rank recombination weights.
  std::vector<double> w(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) w[static_cast<std::size_t>(i)] = std::log(p + 0.5) - std::log(i + 1.0);
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  double w2 = 0.0;
  for (double& v : w) {
    v /= wsum;
    w2 += v * v;
  }
  const double mu_eff = 1.0 / w2;

  CmaState next = state;
  const int k = static_cast<int>(state.active.size());
  const double c_var = 2.0 / (d + 6.0);
  const double c_sigma = (mu_eff + 2.0) / (k + mu_eff + 5.0);
  const double d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (k + 1.0)) - 1.0) + c_sigma;
  const double chi_n = std::sqrt(static_cast<double>(k)) * (1.0 - 1.0 / (4.0 * k) + 1.0 / (21.0 * k * k));
  const double path_gain = std::sqrt(c_sigma * (2.0 - c_sigma) * mu_eff);

  double path_sq = 0.0;
  for (int j : state.active) {
    const auto u = static_cast<std::size_t>(j);
    const double sd = state.step * std::sqrt(state.var[u]);
    double mean_j = 0.0;
    double second = 0.0;
    for (int i = 0; i < p; ++i) {
      const double zi = ranked[static_cast<std::size_t>(i)].z[u];
      const double y = (zi - state.mean[u]) / state.step;
      mean_j += w[static_cast<std::size_t>(i)] * zi;
      second += w[static_cast<std::size_t>(i)] * y * y;
    }
    next.mean[u] = mean_j;
    next.var[u] = std::max(1e-12, (1.0 - c_var) * state.var[u] + c_var * second);
    next.path[u] = (1.0 - c_sigma) * state.path[u] + path_gain * (mean_j - state.mean[u]) / sd;
    path_sq += next.path[u] * next.path[u];
  }
  next.step = state.step * std::exp((c_sigma / d_sigma) * (std::sqrt(path_sq) / chi_n - 1.0));
  next.active = top_k_indices(next.var, k);
  next.generation = state.generation + 1;
  return next;
}

void cma_widen(CmaState& state, double factor) {
  if (!(factor > 0.0)) throw InvalidArgument("widening factor must be positive");
  state.step *= factor;
}

}  // namespace lsr

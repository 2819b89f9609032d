#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bfgs.hpp"
#include "cma.hpp"
#include "corpus.hpp"
#include "cvae.hpp"
#include "pareto.hpp"

namespace lsr {

// Prior-branch distribution of a dataset (encode_samples then encode_prior).
DiagGaussian localize(const nn::Model& model, const Dataset& data);

struct SearchOptions {
  CmaConfig cma;
  double fit_fraction = 0.75;  // share of rows used for fitting and ranking
  int patience = 20;           // generations without improvement before stopping
  double min_improvement = 1e-6;
  int widen_retries = 3;
  BfgsOptions bfgs;
  int jobs = 1;  // worker threads for candidate evaluation
};

struct TraceRow {
  long gen = 0;
  double best_fitness = 0.0;
  double best_r2 = 0.0;
  std::size_t best_complexity = 0;
  double mean_sigma = 0.0;
  int active_dims = 0;
};

enum class SearchStatus {
  kOk,
  kFallback,  // search degenerated; the prior-mean decode was returned
  kFailed,    // degenerated with no valid fallback
};

struct SearchResult {
  SearchStatus status = SearchStatus::kFailed;
  std::optional<Expr> expr;
  double r2 = 0.0;      // held-out split
  double fit_r2 = 0.0;  // fit split
  std::size_t complexity = 0;
  double fitness = 0.0;
  double time_s = 0.0;  // wall time including constant fitting
  long generations = 0;
  std::size_t fit_rows = 0;
  std::size_t heldout_rows = 0;
  std::vector<TraceRow> trace;
};

// Splits data into fit and held-out rows, initializes the search at the
// prior distribution and iterates sample / decode / fit constants / rank /
// update. The held-out rows are scored only once, for the final expression.
// When `heldout_reference` is given it replaces the held-out targets (used to
// score noisy runs against the noise-free function).
SearchResult search(const nn::Model& model, const Dataset& data, const SearchOptions& opt,
                    const std::vector<double>* heldout_reference = nullptr);

std::string search_status_name(SearchStatus s);

struct InterpolationPoint {
  double ratio = 0.0;
  TokenSeq tokens;              // raw greedy readout
  std::optional<Expr> expr;     // nullopt when the readout is not a valid equation
};

struct InterpolationReport {
  std::vector<InterpolationPoint> points;
  double validity = 0.0;
};

const std::vector<double>& default_interpolation_ratios();

// z(r) = (1 - r) z1 + r z2 between the prior means, decoded greedily. The
// sample context is blended the same way when both datasets have the same
// number of rows, otherwise the nearer endpoint's samples are used; either
// way ratio 0 and 1 reproduce the direct decodes exactly.
InterpolationReport interpolate(const nn::Model& model, const Dataset& a, const Dataset& b,
                                const std::vector<double>& ratios = default_interpolation_ratios());

// Greedy decode of the prior mean.
TokenSeq direct_decode(const nn::Model& model, const Dataset& data);

enum class Branch { kPosterior, kPrior };
std::string branch_name(Branch b);

struct ReconstructionReport {
  Branch branch = Branch::kPosterior;
  std::size_t count = 0;
  double mean = 0.0;  // edit distance / target length
  double std = 0.0;
  std::vector<double> per_entry;
};

// Distribution mean of the chosen branch, greedy decode, normalized edit
// distance against the constant-free target skeleton.
ReconstructionReport reconstruction_eval(const nn::Model& model, const std::vector<CorpusEntry>& corpus,
                                         Branch branch);

const std::vector<double>& default_noise_levels();

struct BenchOptions {
  std::vector<double> levels = default_noise_levels();
  GenConfig data;  // domain, samples per target, seed
  SearchOptions search;
};

struct BenchRun {
  std::size_t target = 0;
  double level = 0.0;
  std::uint64_t seed = 0;
  SearchResult result;
};

struct BenchLevel {
  double level = 0.0;
  double mean_r2 = 0.0;
  double mean_time_s = 0.0;
  double mean_complexity = 0.0;
  std::size_t runs = 0;
};

struct BenchReport {
  std::vector<BenchRun> runs;
  std::vector<BenchLevel> levels;
};

// For every target and noise level: sample clean data, add noise, search,
// and score on the noise-free held-out targets. Failed runs record R^2 = -inf.
BenchReport noise_bench(const nn::Model& model, const std::vector<Expr>& targets, const BenchOptions& opt);

// Per-method means of (r2, complexity, time) turned into ranks (1 = best;
// higher R^2, lower complexity, lower time), then Pareto fronts.
struct MethodSummary {
  std::string method;
  double r2 = 0.0;
  double complexity = 0.0;
  double time_s = 0.0;
};
ParetoReport rank_methods(const std::vector<MethodSummary>& methods);

struct LatentRow {
  std::size_t index = 0;
  std::string family;
  std::string expr;
  std::vector<double> mean;
};
std::vector<LatentRow> export_latents(const nn::Model& model, const std::vector<CorpusEntry>& corpus);

}  // namespace lsr

#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "errors.hpp"
#include "metrics.hpp"
#include "prefix.hpp"
#include "train.hpp"

namespace lsr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Candidate {
  double fitness = kNegInf;
  double r2 = kNegInf;
  std::size_t complexity = 0;
  std::optional<Expr> expr;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  return a.complexity < b.complexity;
}

std::optional<std::vector<double>> predict(const Expr& e, const Dataset& d) {
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto v = try_eval(e, d.point(i));
    if (!v) return std::nullopt;
    out[i] = *v;
  }
  return out;
}

// Decoded skeleton for a latent: nullopt when the readout is not a valid
// equation over the dataset's variables.
std::optional<Expr> decode_skeleton(const nn::Model& model, std::span<const double> z, const ad::Matrix& emb,
                                    int dim) {
  try {
    Expr e = canonicalize_constants(from_prefix(model.greedy_decode_embedded(z, emb)));
    if (e.max_variable() >= dim) return std::nullopt;
    return e;
  } catch (const SyntaxError&) {
    return std::nullopt;
  }
}

class Evaluator {
 public:
  Evaluator(const nn::Model& model, const Dataset& fit, const SearchOptions& opt, const Rng& root)
      : model_(model), fit_(fit), opt_(opt), root_(root) {
    emb_ = model_.sample_embedding(encode_samples(fit_, model_.config().max_vars));
  }

  std::vector<Candidate> evaluate(const std::vector<std::vector<double>>& zs) {
    std::vector<std::optional<Expr>> skeletons(zs.size());
    parallel_for(zs.size(), opt_.jobs,
                 [&](std::size_t i) { skeletons[i] = decode_skeleton(model_, zs[i], emb_, fit_.dim); });

    std::vector<std::string> keys(zs.size());
    std::vector<std::size_t> fresh;
    std::map<std::string, std::size_t> pending;
    for (std::size_t i = 0; i < zs.size(); ++i) {
      if (!skeletons[i]) continue;
      keys[i] = to_text(*skeletons[i]);
      if (!cache_.count(keys[i]) && !pending.count(keys[i])) {
        pending.emplace(keys[i], fresh.size());
        fresh.push_back(i);
      }
    }
    std::vector<Candidate> fitted(fresh.size());
    parallel_for(fresh.size(), opt_.jobs, [&](std::size_t j) {
      fitted[j] = fit(*skeletons[fresh[j]], keys[fresh[j]]);
    });
    for (std::size_t j = 0; j < fresh.size(); ++j) cache_.emplace(keys[fresh[j]], std::move(fitted[j]));

    std::vector<Candidate> out(zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i)
      if (skeletons[i]) out[i] = cache_.at(keys[i]);
    return out;
  }

 private:
  Candidate fit(const Expr& skeleton, const std::string& key) const {
    Candidate c;
    try {
      Rng rng = root_.derive(key);
      ConstantFit f = bfgs_fit_constants(skeleton, fit_, rng, opt_.bfgs);
      const auto pred = predict(f.expr, fit_);
      if (!pred) return c;
      c.r2 = r2(fit_.y, *pred);
      if (!std::isfinite(c.r2)) return c;
      c.complexity = complexity(f.expr);
      c.fitness = fitness(c.r2, c.complexity, opt_.cma.omega);
      c.expr = std::move(f.expr);
    } catch (const AllRestartsFailed&) {
    } catch (const DomainError&) {
    }
    return c;
  }

  const nn::Model& model_;
  const Dataset& fit_;
  const SearchOptions& opt_;
  const Rng& root_;
  ad::Matrix emb_;
  std::map<std::string, Candidate> cache_;
};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

DiagGaussian localize(const nn::Model& model, const Dataset& data) {
  if (data.empty()) throw InvalidArgument("cannot localize an empty dataset");
  if (data.dim > model.config().max_vars)
    throw ShapeError("dataset has " + std::to_string(data.dim) + " variables, model supports " +
                     std::to_string(model.config().max_vars));
  return model.encode_prior(encode_samples(data, model.config().max_vars));
}

std::string search_status_name(SearchStatus s) {
  switch (s) {
    case SearchStatus::kOk:
      return "ok";
    case SearchStatus::kFallback:
      return "fallback";
    case SearchStatus::kFailed:
      return "failed";
  }
  return "failed";
}

SearchResult search(const nn::Model& model, const Dataset& data, const SearchOptions& opt,
                    const std::vector<double>* heldout_reference) {
  const auto start = std::chrono::steady_clock::now();
  if (data.size() < 2) throw InvalidArgument("search needs at least two samples");
  if (!(opt.fit_fraction > 0.0 && opt.fit_fraction < 1.0)) throw InvalidArgument("split must lie in (0, 1)");
  if (heldout_reference && heldout_reference->size() != data.size())
    throw InvalidArgument("reference targets must match the dataset size");
  const int d = model.config().latent_dim;
  opt.cma.validate(d);
  const Rng root(opt.cma.seed);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = root.derive("split");
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[split_rng.below(i)]);
  const auto n_fit = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(opt.fit_fraction * static_cast<double>(data.size()))), 1,
      data.size() - 1);
  std::vector<std::size_t> fit_rows(order.begin(), order.begin() + static_cast<long>(n_fit));
  std::vector<std::size_t> held_rows(order.begin() + static_cast<long>(n_fit), order.end());
  std::sort(fit_rows.begin(), fit_rows.end());
  std::sort(held_rows.begin(), held_rows.end());
  const Dataset fit = data.subset(fit_rows);
  const Dataset held = data.subset(held_rows);

  SearchResult res;
  res.fit_rows = fit.size();
  res.heldout_rows = held.size();

  const DiagGaussian prior = localize(model, fit);
  Evaluator evaluator(model, fit, opt, root);
  CmaState state = cma_init(prior, opt.cma);

  Candidate best = evaluator.evaluate({prior.mean}).front();
  auto trace_row = [&](long gen) {
    res.trace.push_back({gen, best.fitness, best.r2, best.complexity, state.mean_sigma(),
                         static_cast<int>(state.active.size())});
  };
  trace_row(0);

  bool degenerate = false;
  int stale = 0;
  const int s = opt.cma.population;
  for (long gen = 1; gen <= opt.cma.max_generations; ++gen) {
    std::vector<std::vector<double>> zs;
    std::vector<Candidate> evals;
    for (int attempt = 0;; ++attempt) {
      Rng rng = root.derive("generation", static_cast<std::uint64_t>(gen) * 16 + static_cast<std::uint64_t>(attempt));
      zs = cma_sample(state, s, rng);
      evals = evaluator.evaluate(zs);
      const bool any = std::any_of(evals.begin(), evals.end(), [](const Candidate& c) { return std::isfinite(c.fitness); });
      if (any) break;
      if (attempt >= opt.widen_retries) {
        degenerate = true;
        break;
      }
      cma_widen(state);
    }
    if (degenerate) break;

    std::vector<RankedCandidate> ranked(zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i)
      ranked[i] = {std::move(zs[i]), evals[i].fitness, evals[i].complexity, i};
    rank_candidates(ranked);
    const Candidate& top = evals[ranked.front().index];
    const double previous = best.fitness;
    if (better(top, best)) best = top;
    stale = (best.fitness > previous + opt.min_improvement) ? 0 : stale + 1;
    state = cma_update(state, ranked, opt.cma);
    res.generations = gen;
    trace_row(gen);
    if (stale >= opt.patience) break;
  }

  if (!best.expr) {
    res.status = SearchStatus::kFailed;
  } else {
    res.status = degenerate && res.generations == 0 ? SearchStatus::kFallback : SearchStatus::kOk;
    res.expr = best.expr;
    res.complexity = best.complexity;
    res.fitness = best.fitness;
    res.fit_r2 = best.r2;
    std::vector<double> target = held.y;
    if (heldout_reference)
      for (std::size_t i = 0; i < held_rows.size(); ++i) target[i] = (*heldout_reference)[held_rows[i]];
    const auto pred = predict(*best.expr, held);
    res.r2 = pred ? r2(target, *pred) : kNegInf;
  }
  res.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

const std::vector<double>& default_interpolation_ratios() {
  static const std::vector<double> r = {0.0, 0.25, 0.5, 0.75, 1.0};
  return r;
}

TokenSeq direct_decode(const nn::Model& model, const Dataset& data) {
  const SampleGrid grid = encode_samples(data, model.config().max_vars);
  const DiagGaussian g = model.encode_prior(grid);
  return model.greedy_decode_embedded(g.mean, model.sample_embedding(grid));
}

InterpolationReport interpolate(const nn::Model& model, const Dataset& a, const Dataset& b,
                                const std::vector<double>& ratios) {
  const int width = model.config().max_vars;
  const SampleGrid ga = encode_samples(a, width);
  const SampleGrid gb = encode_samples(b, width);
  const auto za = model.encode_prior(ga).mean;
  const auto zb = model.encode_prior(gb).mean;
  const ad::Matrix ea = model.sample_embedding(ga);
  const ad::Matrix eb = model.sample_embedding(gb);

  InterpolationReport rep;
  std::size_t valid = 0;
  for (double r : ratios) {
    std::vector<double> z(za.size());
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = (1.0 - r) * za[j] + r * zb[j];
    ad::Matrix ctx;
    if (ea.rows() == eb.rows())
      ctx = (1.0 - r) * ea + r * eb;
    else
      ctx = r < 0.5 ? ea : eb;
    InterpolationPoint p;
    p.ratio = r;
    p.tokens = model.greedy_decode_embedded(z, ctx);
    try {
      p.expr = from_prefix(p.tokens);
      ++valid;
    } catch (const SyntaxError&) {
    }
    rep.points.push_back(std::move(p));
  }
  rep.validity = ratios.empty() ? 0.0 : static_cast<double>(valid) / static_cast<double>(ratios.size());
  return rep;
}

std::string branch_name(Branch b) { return b == Branch::kPosterior ? "posterior" : "prior"; }

ReconstructionReport reconstruction_eval(const nn::Model& model, const std::vector<CorpusEntry>& corpus,
                                         Branch branch) {
  if (corpus.empty()) throw InvalidArgument("reconstruction needs a non-empty corpus");
  ReconstructionReport rep;
  rep.branch = branch;
  for (const auto& entry : corpus) {
    const nn::Example ex = nn::make_example(model, entry);
    const DiagGaussian g =
        branch == Branch::kPosterior ? model.encode_posterior(ex.grid, ex.target) : model.encode_prior(ex.grid);
    const TokenSeq decoded = model.greedy_decode(g.mean, ex.grid);
    const TokenSeq want = body_tokens(ex.target);
    const double dist = static_cast<double>(edit_distance(body_tokens(decoded), want));
    rep.per_entry.push_back(dist / static_cast<double>(want.size()));
  }
  rep.count = rep.per_entry.size();
  rep.mean = mean_of(rep.per_entry);
  double ss = 0.0;
  for (double v : rep.per_entry) ss += (v - rep.mean) * (v - rep.mean);
  rep.std = rep.count > 1 ? std::sqrt(ss / static_cast<double>(rep.count - 1)) : 0.0;
  return rep;
}

const std::vector<double>& default_noise_levels() {
  static const std::vector<double> l = {0.0, 0.001, 0.01, 0.1};
  return l;
}

BenchReport noise_bench(const nn::Model& model, const std::vector<Expr>& targets, const BenchOptions& opt) {
  BenchReport rep;
  const Rng root(opt.data.seed);
  std::vector<Dataset> clean;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    Rng rng = root.derive("bench-data", t);
    clean.push_back(sample_dataset(targets[t], opt.data, rng));
  }
  for (std::size_t li = 0; li < opt.levels.size(); ++li) {
    const double level = opt.levels[li];
    BenchLevel agg;
    agg.level = level;
    std::vector<double> r2s, times, cpx;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      BenchRun run;
      run.target = t;
      run.level = level;
      run.seed = root.derive("bench-search", t).seed();
      Dataset noisy = clean[t];
      Rng noise_rng = root.derive("bench-noise", t * opt.levels.size() + li);
      noisy.y = add_noise(clean[t].y, level, noise_rng);
      SearchOptions so = opt.search;
      so.cma.seed = run.seed;
      try {
        run.result = search(model, noisy, so, &clean[t].y);
      } catch (const Error&) {
        run.result = SearchResult{};
      }
      if (run.result.status == SearchStatus::kFailed) run.result.r2 = kNegInf;
      r2s.push_back(run.result.r2);
      times.push_back(run.result.time_s);
      cpx.push_back(static_cast<double>(run.result.complexity));
      rep.runs.push_back(std::move(run));
    }
    agg.mean_r2 = mean_of(r2s);
    agg.mean_time_s = mean_of(times);
    agg.mean_complexity = mean_of(cpx);
    agg.runs = targets.size();
    rep.levels.push_back(agg);
  }
  return rep;
}

ParetoReport rank_methods(const std::vector<MethodSummary>& methods) {
  auto rank_by = [&](auto key_better) {
    std::vector<double> ranks(methods.size());
    for (std::size_t i = 0; i < methods.size(); ++i) {
      std::size_t ahead = 0;
      for (std::size_t j = 0; j < methods.size(); ++j) ahead += key_better(methods[j], methods[i]);
      ranks[i] = static_cast<double>(ahead + 1);
    }
    return ranks;
  };
  const auto r2_rank = rank_by([](const MethodSummary& a, const MethodSummary& b) { return a.r2 > b.r2; });
  const auto cpx_rank =
      rank_by([](const MethodSummary& a, const MethodSummary& b) { return a.complexity < b.complexity; });
  const auto time_rank = rank_by([](const MethodSummary& a, const MethodSummary& b) { return a.time_s < b.time_s; });
  std::vector<ParetoRow> rows;
  for (std::size_t i = 0; i < methods.size(); ++i)
    rows.push_back({methods[i].method, {r2_rank[i], cpx_rank[i], time_rank[i]}});
  return pareto_rank(rows);
}

std::vector<LatentRow> export_latents(const nn::Model& model, const std::vector<CorpusEntry>& corpus) {
  std::vector<LatentRow> out;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    out.push_back({i, corpus[i].family, to_text(corpus[i].expr), localize(model, corpus[i].data).mean});
  return out;
}

}  // namespace lsr

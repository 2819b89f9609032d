#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "pareto.hpp"
#include "pipeline.hpp"
#include "prefix.hpp"
#include "support/oracles.hpp"
#include "train.hpp"

using namespace lsr;

namespace {

nn::ModelConfig tiny_config() {
  nn::ModelConfig c;
  c.latent_dim = 8;
  c.numeric_embed_dim = 4;
  c.layers = 1;
  c.heads = 2;
  c.ffn_dim = 16;
  c.max_vars = 2;
  c.pad_len = 10;
  c.latent_samples = 2;
  c.init_seed = 21;
  return c;
}

Dataset planted(const Expr& e, int n, std::uint64_t seed) {
  GenConfig g;
  g.samples = n;
  Rng rng(seed);
  return sample_dataset(e, g, rng);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("pareto ranking") {
  std::vector<ParetoRow> one = {{"only", {3, 1}}};
  CHECK(pareto_rank(one).front == std::vector<int>{1});
  std::vector<ParetoRow> two = {{"a", {1, 1}}, {"b", {2, 2}}};
  CHECK(pareto_rank(two).front == std::vector<int>{1, 2});
  std::vector<ParetoRow> bad = {{"a", {1, std::nan("")}}};
  CHECK_THROWS_AS(pareto_rank(bad), InvalidArgument);

  Rng rng(51);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    const std::size_t m = 2 + rng.below(2);
    std::vector<ParetoRow> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
      rows[i].method = std::to_string(i);
      for (std::size_t k = 0; k < m; ++k) rows[i].ranks.push_back(static_cast<double>(1 + rng.below(5)));
    }
    REQUIRE(pareto_rank(rows).front == testing::brute_fronts(rows));
  }
}

TEST_CASE("method ranking orders higher R^2 and lower complexity and time first") {
  std::vector<MethodSummary> m = {{"good", 0.99, 5, 1.0}, {"slow", 0.99, 5, 9.0}, {"bad", 0.5, 9, 9.0}};
  const ParetoReport rep = rank_methods(m);
  CHECK(rep.front == std::vector<int>{1, 2, 3});
  CHECK(rep.rows[0].ranks == std::vector<double>{1, 1, 1});
}

TEST_CASE("localize shape and row-order invariance") {
  const nn::Model model(tiny_config());
  const Dataset d = planted(Expr::binary(Op::kAdd, Expr::variable(0), Expr::variable(1)), 20, 1);
  const DiagGaussian g = localize(model, d);
  CHECK(g.dim() == 8);
  std::vector<std::size_t> rev(d.size());
  for (std::size_t i = 0; i < rev.size(); ++i) rev[i] = rev.size() - 1 - i;
  const DiagGaussian h = localize(model, d.subset(rev));
  for (std::size_t j = 0; j < 8; ++j) CHECK(h.mean[j] == doctest::Approx(g.mean[j]).epsilon(1e-12));
  Dataset wide;
  wide.dim = 3;
  const std::vector<double> x = {1, 2, 3};
  wide.push_back(x, 1.0);
  CHECK_THROWS_AS(localize(model, wide), ShapeError);
}

TEST_CASE("interpolation endpoints reproduce the direct decodes") {
  const nn::Model model(tiny_config());
  const Dataset a = planted(Expr::binary(Op::kMul, Expr::variable(0), Expr::variable(1)), 16, 2);
  const Dataset b = planted(Expr::unary(Op::kExp, Expr::variable(0)), 16, 3);
  const auto rep = interpolate(model, a, b);
  REQUIRE(rep.points.size() == 5);
  CHECK(default_interpolation_ratios() == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
  CHECK(rep.points.front().tokens == direct_decode(model, a));
  CHECK(rep.points.back().tokens == direct_decode(model, b));

  const Dataset c = planted(Expr::variable(0), 11, 4);
  const auto uneven = interpolate(model, a, c);
  CHECK(uneven.points.front().tokens == direct_decode(model, a));
  CHECK(uneven.points.back().tokens == direct_decode(model, c));
}

TEST_CASE("reconstruction evaluation is deterministic") {
  const nn::Model model(tiny_config());
  GenConfig g;
  g.max_tokens = 7;
  g.max_vars = 2;
  g.samples = 10;
  g.seed = 5;
  const auto corpus = generate_corpus(g, 10);
  const auto a = reconstruction_eval(model, corpus, Branch::kPosterior);
  const auto b = reconstruction_eval(model, corpus, Branch::kPosterior);
  CHECK(a.per_entry == b.per_entry);
  CHECK(a.count == 10);
  for (double v : a.per_entry) CHECK(v >= 0.0);
  CHECK_THROWS_AS(reconstruction_eval(model, {}, Branch::kPrior), InvalidArgument);
}

TEST_CASE("search trace is monotone and the result is reproducible") {
  const nn::Model model(tiny_config());
  const Dataset d = planted(Expr::binary(Op::kAdd, Expr::variable(0), Expr::variable(1)), 40, 6);
  SearchOptions opt;
  opt.cma.population = 12;
  opt.cma.max_generations = 15;
  opt.cma.seed = 3;
  const SearchResult a = search(model, d, opt);
  for (std::size_t i = 1; i < a.trace.size(); ++i) CHECK(a.trace[i].best_fitness >= a.trace[i - 1].best_fitness);
  CHECK(a.fit_rows == 30);
  CHECK(a.heldout_rows == 10);
  const SearchResult b = search(model, d, opt);
  CHECK(a.generations == b.generations);
  CHECK(a.r2 == b.r2);
  if (a.expr) CHECK(*a.expr == *b.expr);
  for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i].best_fitness == b.trace[i].best_fitness);

  SearchOptions parallel = opt;
  parallel.jobs = 3;
  const SearchResult c = search(model, d, parallel);
  CHECK(c.r2 == a.r2);
  CHECK(c.generations == a.generations);

  SearchOptions bad = opt;
  bad.fit_fraction = 1.0;
  CHECK_THROWS_AS(search(model, d, bad), InvalidArgument);
}

TEST_CASE("noise bench produces one summary row per level") {
  const nn::Model model(tiny_config());
  BenchOptions opt;
  opt.data.samples = 20;
  opt.search.cma.population = 6;
  opt.search.cma.max_generations = 3;
  CHECK(opt.levels == std::vector<double>{0, 0.001, 0.01, 0.1});
  const std::vector<Expr> targets = {Expr::binary(Op::kMul, Expr::variable(0), Expr::variable(1))};
  const BenchReport rep = noise_bench(model, targets, opt);
  CHECK(rep.levels.size() == 4);
  CHECK(rep.runs.size() == 4);
}

TEST_CASE("export latents") {
  const nn::Model model(tiny_config());
  GenConfig g;
  g.max_tokens = 5;
  g.max_vars = 2;
  g.samples = 6;
  const auto corpus = generate_corpus(g, 4);
  const auto rows = export_latents(model, corpus);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].mean.size() == 8);
  CHECK(rows[2].expr == to_text(corpus[2].expr));
}

}  // TEST_SUITE

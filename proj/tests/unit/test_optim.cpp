#include <doctest.h>

#include <cmath>
#include <limits>

#include "bfgs.hpp"
#include "cma.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "support/gen.hpp"

using namespace lsr;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sphere(const std::vector<double>& z, const std::vector<double>& target) {
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (z[i] - target[i]) * (z[i] - target[i]);
  return -s;
}

// Generations needed to reach best fitness > -1e-6 on the sphere.
long sphere_generations(int d, int s, int p, int k, std::uint64_t seed, long cap) {
  Rng rng(seed);
  std::vector<double> target(static_cast<std::size_t>(d));
  for (double& v : target) v = rng.normal();
  DiagGaussian prior{std::vector<double>(static_cast<std::size_t>(d), 0.0), std::vector<double>(static_cast<std::size_t>(d), 1.0)};
  CmaConfig cfg;
  cfg.population = s;
  cfg.parents = p;
  cfg.active_dims = k;
  cfg.initial_step = 1.0;
  CmaState st = cma_init(prior, cfg);
  for (long g = 1; g <= cap; ++g) {
    auto zs = cma_sample(st, s, rng);
    std::vector<RankedCandidate> ranked;
    for (std::size_t i = 0; i < zs.size(); ++i) ranked.push_back({zs[i], sphere(zs[i], target), 0, i});
    rank_candidates(ranked);
    if (ranked.front().fitness > -1e-6) return g;
    st = cma_update(st, ranked, cfg);
  }
  return -1;
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("cma_init") {
  DiagGaussian prior{{0.0, 1.0, 2.0, 3.0}, {3.0, 1.0, 5.0, 2.0}};
  CmaConfig cfg;
  cfg.initial_step = 1.0;
  cfg.active_dims = 2;
  CmaState s = cma_init(prior, cfg);
  CHECK(s.var == prior.var);
  CHECK(s.mean == prior.mean);
  CHECK(s.active == std::vector<int>{0, 2});
  cfg.active_dims = 4;
  CHECK(cma_init(prior, cfg).active.size() == 4);
  cfg.initial_step = 2.0;
  CHECK(cma_init(prior, cfg).var[1] == doctest::Approx(4.0));
}

TEST_CASE("cma_sample freezes inactive dimensions") {
  DiagGaussian prior{{0.5, -1.0, 2.0, 0.0}, {1.0, 4.0, 0.25, 9.0}};
  CmaConfig cfg;
  cfg.initial_step = 1.0;
  cfg.active_dims = 2;  // dims 1 and 3
  const CmaState s = cma_init(prior, cfg);
  Rng rng(41);
  const int n = 100000;
  const auto zs = cma_sample(s, n, rng);
  double v1 = 0.0, v3 = 0.0;
  for (const auto& z : zs) {
    REQUIRE(z[0] == 0.5);
    REQUIRE(z[2] == 2.0);
    v1 += (z[1] + 1.0) * (z[1] + 1.0);
    v3 += z[3] * z[3];
  }
  CHECK(std::abs(v1 / n - 4.0) < 0.05 * 4.0);
  CHECK(std::abs(v3 / n - 9.0) < 0.05 * 9.0);
}

TEST_CASE("cma_update with identical parents keeps the mean and shrinks variances") {
  DiagGaussian prior{{1.0, 2.0}, {1.0, 1.0}};
  CmaConfig cfg;
  cfg.population = 4;
  cfg.parents = 2;
  cfg.active_dims = 2;
  cfg.initial_step = 1.0;
  const CmaState s = cma_init(prior, cfg);
  std::vector<RankedCandidate> ranked;
  for (std::size_t i = 0; i < 4; ++i) ranked.push_back({s.mean, 1.0, 0, i});
  const CmaState next = cma_update(s, ranked, cfg);
  CHECK(next.mean == s.mean);
  const double c_var = 2.0 / (2 + 6);
  CHECK(next.var[0] == doctest::Approx((1 - c_var) * 1.0));
  CHECK(next.generation == 1);
}

TEST_CASE("cma_update rejects an all-invalid generation") {
  DiagGaussian prior{{0.0}, {1.0}};
  CmaConfig cfg;
  cfg.population = 2;
  const CmaState s = cma_init(prior, cfg);
  std::vector<RankedCandidate> ranked = {{{0.1}, -kInf, 0, 0}, {{0.2}, -kInf, 0, 1}};
  CHECK_THROWS_AS(cma_update(s, ranked, cfg), DegenerateError);
}

TEST_CASE("ranking ties prefer lower complexity then lower index") {
  std::vector<RankedCandidate> c = {{{}, 0.5, 7, 0}, {{}, 0.9, 3, 1}, {{}, 0.5, 2, 2}, {{}, 0.5, 2, 3}, {{}, -kInf, 1, 4}};
  rank_candidates(c);
  CHECK(c[0].index == 1);
  CHECK(c[1].index == 2);
  CHECK(c[2].index == 3);
  CHECK(c[3].index == 0);
  CHECK(c[4].index == 4);
}

TEST_CASE("property: active variances stay positive") {
  Rng rng(42);
  DiagGaussian prior{std::vector<double>(6, 0.0), std::vector<double>(6, 1.0)};
  CmaConfig cfg;
  cfg.population = 10;
  cfg.active_dims = 3;
  CmaState s = cma_init(prior, cfg);
  for (int g = 0; g < 300; ++g) {
    auto zs = cma_sample(s, 10, rng);
    std::vector<RankedCandidate> ranked;
    for (std::size_t i = 0; i < zs.size(); ++i) ranked.push_back({zs[i], -std::abs(zs[i][0]) * 1e6, 0, i});
    rank_candidates(ranked);
    s = cma_update(s, ranked, cfg);
    for (int j : s.active) REQUIRE(s.var[static_cast<std::size_t>(j)] > 0.0);
  }
}

TEST_CASE("sphere convergence with s=32, p=16, k=d=64") {
  const long g = sphere_generations(64, 32, 16, 64, 1, 400);
  MESSAGE("generations to reach -1e-6: " << g);
  CHECK(g > 0);
}

TEST_CASE("BFGS recovers a linear model") {
  Dataset d;
  d.dim = 1;
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> x = {-2.0 + 0.2 * i};
    d.push_back(x, 2.0 * x[0] + 3.0);
  }
  const Expr sk = Expr::binary(Op::kAdd, Expr::binary(Op::kMul, Expr::placeholder(), Expr::variable(0)), Expr::placeholder());
  Rng rng(43);
  const ConstantFit fit = bfgs_fit_constants(sk, d, rng);
  CHECK(fit.mse < 1e-12);
  CHECK(std::abs(fit.expr.nodes()[2].value - 2.0) < 1e-6);
  CHECK(std::abs(fit.expr.nodes()[4].value - 3.0) < 1e-6);
}

TEST_CASE("BFGS on a 2-constant quadratic converges quickly") {
  const Objective f = [](std::span<const double> c) -> std::optional<double> {
    return 3 * (c[0] - 1) * (c[0] - 1) + (c[1] + 2) * (c[1] + 2) + (c[0] - 1) * (c[1] + 2);
  };
  const auto r = bfgs_minimize(f, {0.0, 0.0});
  REQUIRE(r);
  CHECK(r->iterations <= 20);
  CHECK(std::abs(r->x[0] - 1) < 1e-6);
  CHECK(std::abs(r->x[1] + 2) < 1e-6);
}

TEST_CASE("BFGS without placeholders and with undefined starts") {
  Dataset d;
  d.dim = 1;
  const std::vector<double> x = {-1.0};
  d.push_back(x, 1.0);
  Rng rng(44);
  const ConstantFit direct = bfgs_fit_constants(Expr::variable(0), d, rng);
  CHECK(direct.expr == Expr::variable(0));
  CHECK(direct.mse == 4.0);
  // log(x0) is undefined on negative data whatever the constant.
  const Expr bad = Expr::binary(Op::kMul, Expr::placeholder(), Expr::unary(Op::kLog, Expr::variable(0)));
  CHECK_THROWS_AS(bfgs_fit_constants(bad, d, rng), AllRestartsFailed);
}

TEST_CASE("r2 and fitness formulas") {
  const std::vector<double> y = {1, 2, 3};
  CHECK(r2(y, y) == 1.0);
  const std::vector<double> mean = {2, 2, 2};
  CHECK(r2(y, mean) == 0.0);
  const std::vector<double> hand = {1, 2, 4};
  CHECK(r2(y, hand) == doctest::Approx(0.5));
  const std::vector<double> flat = {5, 5};
  CHECK(r2(flat, flat) == 1.0);
  const std::vector<double> off = {5, 6};
  CHECK(r2(flat, off) == -kInf);

  CHECK(fitness(0.9, 10, 0.01) == doctest::Approx(0.8));
  CHECK(fitness(0.7, 123, 0.0) == 0.7);
  CHECK_THROWS_AS(fitness(0.7, 1, -0.1), InvalidArgument);
  for (std::size_t c = 1; c < 20; ++c) CHECK(fitness(0.5, c + 1, 0.01) < fitness(0.5, c, 0.01));
}

TEST_CASE("property: r2 is invariant under a joint permutation") {
  Rng rng(45);
  for (int i = 0; i < 100; ++i) {
    auto y = testing::random_vector(rng, 12, -3, 3);
    auto yh = testing::random_vector(rng, 12, -3, 3);
    const double base = r2(y, yh);
    for (std::size_t k = y.size(); k > 1; --k) {
      const auto j = rng.below(k);
      std::swap(y[k - 1], y[j]);
      std::swap(yh[k - 1], yh[j]);
    }
    CHECK(r2(y, yh) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("property: fitness argmax is invariant to shifting every R^2") {
  Rng rng(46);
  for (int i = 0; i < 100; ++i) {
    std::size_t best_a = 0, best_b = 0;
    double fa = -kInf, fb = -kInf;
    const double shift = rng.uniform(-1, 1);
    for (std::size_t j = 0; j < 10; ++j) {
      const double r = rng.uniform(-1, 1);
      const std::size_t c = 1 + rng.below(15);
      if (fitness(r, c, 0.01) > fa) fa = fitness(r, c, 0.01), best_a = j;
      if (fitness(r + shift, c, 0.01) > fb) fb = fitness(r + shift, c, 0.01), best_b = j;
    }
    CHECK(best_a == best_b);
  }
}

}  // TEST_SUITE

#include "bfgs.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "metrics.hpp"

namespace lsr {

std::vector<double> central_gradient(const Objective& f, std::span<const double> x, double fx) {
  std::vector<double> g(x.size());
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::fabs(x[i]));
    probe[i] = x[i] + h;
    const auto fp = f(probe);
    probe[i] = x[i] - h;
    const auto fm = f(probe);
    probe[i] = x[i];
    if (fp && fm) {
      g[i] = (*fp - *fm) / (2.0 * h);
    } else if (fp) {
      g[i] = (*fp - fx) / h;
    } else if (fm) {
      g[i] = (fx - *fm) / h;
    } else {
      g[i] = 0.0;
    }
  }
  return g;
}

std::optional<BfgsResult> bfgs_minimize(const Objective& f, std::vector<double> x0, const BfgsOptions& opt) {
  using Vec = Eigen::VectorXd;
  const auto n = static_cast<Eigen::Index>(x0.size());
  auto f0 = f(x0);
  if (!f0 || !std::isfinite(*f0)) return std::nullopt;
  BfgsResult res{std::move(x0), *f0, 0};
  if (n == 0) return res;

  Vec x = Eigen::Map<Vec>(res.x.data(), n);
  double fx = res.f;
  auto gv = central_gradient(f, res.x, fx);
  Vec g = Eigen::Map<Vec>(gv.data(), n);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  std::vector<double> trial(static_cast<std::size_t>(n));

  for (int it = 0; it < opt.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= opt.gradient_tol * std::max(1.0, std::fabs(fx))) break;
    Vec dir = -H * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      H.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }
    double alpha = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    while (alpha > 1e-16) {
      for (Eigen::Index i = 0; i < n; ++i) trial[static_cast<std::size_t>(i)] = x(i) + alpha * dir(i);
      const auto ft = f(trial);
      if (ft && std::isfinite(*ft) && *ft <= fx + opt.armijo_c1 * alpha * slope) {
        f_new = *ft;
        accepted = true;
        break;
      }
      alpha *= opt.backtrack;
    }
    res.iterations = it + 1;
    if (!accepted) break;

    const Vec s = alpha * dir;
    const Vec x_new = x + s;
    auto gnv = central_gradient(f, trial, f_new);
    const Vec g_new = Eigen::Map<Vec>(gnv.data(), n);
    const Vec y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    const double prev = fx;
    x = x_new;
    fx = f_new;
    g = g_new;
    if (fx == 0.0 || prev - fx <= 1e-16 * std::fabs(prev)) {
      if (g.lpNorm<Eigen::Infinity>() <= opt.gradient_tol * std::max(1.0, std::fabs(fx)) || fx == 0.0) break;
    }
  }
  res.x.assign(x.data(), x.data() + n);
  res.f = fx;
  return res;
}

ConstantFit bfgs_fit_constants(const Expr& skeleton, const Dataset& data, Rng& rng, const BfgsOptions& opt) {
  if (data.empty()) throw InvalidArgument("cannot fit constants without data");
  const int k = skeleton.placeholder_count();
  std::vector<double> pred(data.size());

  const Objective mse = [&](std::span<const double> c) -> std::optional<double> {
    for (std::size_t r = 0; r < data.size(); ++r) {
      const auto v = try_eval(skeleton, data.point(r), c);
      if (!v) return std::nullopt;
      pred[r] = *v;
    }
    const double m = mean_squared_error(data.y, pred);
    if (!std::isfinite(m)) return std::nullopt;
    return m;
  };

  if (k == 0) {
    const auto m = mse({});
    if (!m) throw AllRestartsFailed("expression is undefined on the data: " + to_text(skeleton));
    return {skeleton, *m, 0};
  }

  double target_scale = 0.0;
  for (double v : data.y) target_scale += v * v;
  target_scale /= static_cast<double>(data.size());

  std::optional<BfgsResult> best;
  for (int start = 0; start < std::max(1, opt.starts); ++start) {
    std::vector<double> x0(static_cast<std::size_t>(k), 1.0);
    if (start > 0)
      for (double& v : x0) v = rng.normal();
    auto r = bfgs_minimize(mse, std::move(x0), opt);
    if (r && (!best || r->f < best->f)) best = std::move(r);
    // An essentially exact fit cannot be improved by further starts.
    if (best && best->f <= 1e-24 * std::max(1.0, target_scale)) break;
  }
  if (!best) throw AllRestartsFailed("every start is undefined on the data: " + to_text(skeleton));
  return {skeleton.with_constants(best->x), best->f, best->iterations};
}

}  // namespace lsr

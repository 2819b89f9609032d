#include "gaussian.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "errors.hpp"

namespace lsr {

void DiagGaussian::validate() const {
  if (mean.size() != var.size()) throw ShapeError("mean and variance dimensions differ");
  for (double v : var)
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("variances must be positive and finite");
}

double kl_divergence(const DiagGaussian& q, const DiagGaussian& p) {
  if (q.dim() != p.dim()) throw ShapeError("KL between Gaussians of different dimension");
  double total = 0.0;
  for (std::size_t j = 0; j < q.dim(); ++j) {
    const double diff = q.mean[j] - p.mean[j];
    const double ratio = q.var[j] / p.var[j];
    total += diff * diff / p.var[j] + ratio - std::log(ratio) - 1.0;
  }
  return 0.5 * total;
}

std::vector<std::vector<double>> reparameterize(const DiagGaussian& g, int n, Rng& rng) {
  if (n < 1) throw InvalidArgument("need at least one latent sample");
  std::vector<std::vector<double>> out(static_cast<std::size_t>(n), std::vector<double>(g.dim()));
  for (auto& z : out)
    for (std::size_t j = 0; j < g.dim(); ++j) z[j] = g.mean[j] + std::sqrt(g.var[j]) * rng.normal();
  return out;
}

double mahalanobis_sq(const DiagGaussian& g, const std::vector<double>& z) {
  if (z.size() != g.dim()) throw ShapeError("point dimension differs from the distribution");
  double s = 0.0;
  for (std::size_t j = 0; j < g.dim(); ++j) {
    const double d = z[j] - g.mean[j];
    s += d * d / g.var[j];
  }
  return s;
}

double chi2_quantile(int dof, double alpha) {
  if (dof < 1) throw InvalidArgument("chi-squared needs at least one degree of freedom");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), alpha);
}

bool region_contains(const DiagGaussian& g, const std::vector<double>& z, double alpha) {
  return mahalanobis_sq(g, z) <= chi2_quantile(static_cast<int>(g.dim()), alpha);
}

}  // namespace lsr

#pragma once

#include <vector>

#include "rng.hpp"

namespace lsr {

// N(mean, diag(var)); every var entry is positive and finite.
struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> var;

  std::size_t dim() const { return mean.size(); }
  void validate() const;  // throws ShapeError / InvalidArgument
};

// Closed form KL(q || p) between diagonal Gaussians.
double kl_divergence(const DiagGaussian& q, const DiagGaussian& p);

// n draws z_i = mean + sqrt(var) * eps_i, eps_i ~ N(0, I).
std::vector<std::vector<double>> reparameterize(const DiagGaussian& g, int n, Rng& rng);

// Sum_j (z_j - mean_j)^2 / var_j.
double mahalanobis_sq(const DiagGaussian& g, const std::vector<double>& z);

// alpha-quantile of chi^2 with d degrees of freedom.
double chi2_quantile(int dof, double alpha);

// z lies in the alpha high-confidence ellipsoid of g.
bool region_contains(const DiagGaussian& g, const std::vector<double>& z, double alpha);

}  // namespace lsr

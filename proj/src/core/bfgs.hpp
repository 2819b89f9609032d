#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dataset.hpp"
#include "expr.hpp"
#include "rng.hpp"

namespace lsr {

// Objective returning nullopt where it is undefined.
using Objective = std::function<std::optional<double>(std::span<const double>)>;

struct BfgsOptions {
  int max_iterations = 100;
  int starts = 3;              // first at 1.0, then N(0, 1) initial points
  double gradient_tol = 1e-10;  // on the max-norm, scaled by max(1, |f|)
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
};

struct BfgsResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
};

// Quasi-Newton minimization from x0 with central finite-difference
// gradients (h = 1e-6 * max(1, |x_i|)) and backtracking Armijo line search.
// Returns nullopt if the objective is undefined at x0.
std::optional<BfgsResult> bfgs_minimize(const Objective& f, std::vector<double> x0,
                                        const BfgsOptions& opt = {});

std::vector<double> central_gradient(const Objective& f, std::span<const double> x, double fx);

struct ConstantFit {
  Expr expr;  // skeleton with placeholders replaced by fitted values
  double mse = 0.0;
  int iterations = 0;
};

// Fits the placeholder constants of `skeleton` by minimizing mean squared
// error on `data`. Throws AllRestartsFailed when every start is undefined.
ConstantFit bfgs_fit_constants(const Expr& skeleton, const Dataset& data, Rng& rng,
                               const BfgsOptions& opt = {});

}  // namespace lsr

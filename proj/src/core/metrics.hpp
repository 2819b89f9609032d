#pragma once

#include <span>

namespace lsr {

// Coefficient of determination. When the target has zero variance the
// convention is 1 for an exact fit and -inf otherwise.
double r2(std::span<const double> y, std::span<const double> yhat);

// R^2 - omega * complexity.
double fitness(double r2_value, std::size_t complexity, double omega);

double mean_squared_error(std::span<const double> y, std::span<const double> yhat);

}  // namespace lsr

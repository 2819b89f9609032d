#include "metrics.hpp"

#include <limits>

#include "errors.hpp"

namespace lsr {

double r2(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw ShapeError("r2: length mismatch");
  if (y.size() < 2) throw InvalidArgument("r2 needs at least two points");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - yhat[i];
    const double t = y[i] - mean;
    ss_res += r * r;
    ss_tot += t * t;
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  return 1.0 - ss_res / ss_tot;
}

double fitness(double r2_value, std::size_t complexity, double omega) {
  if (omega < 0.0) throw InvalidArgument("omega must be non-negative");
  return r2_value - omega * static_cast<double>(complexity);
}

double mean_squared_error(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size() || y.empty()) throw ShapeError("mse: length mismatch or empty");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - yhat[i];
    s += r * r;
  }
  return s / static_cast<double>(y.size());
}

}  // namespace lsr

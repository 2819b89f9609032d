#pragma once

#include <span>
#include <string>
#include <vector>

namespace lsr {

// Per-method metric ranks, lower is better.
struct ParetoRow {
  std::string method;
  std::vector<double> ranks;
};

struct ParetoReport {
  std::vector<ParetoRow> rows;
  std::vector<int> front;  // 1 = non-dominated
};

// a is no worse on every metric and strictly better on at least one.
bool dominates(std::span<const double> a, std::span<const double> b);

// Iterative non-dominated sorting.
ParetoReport pareto_rank(std::span<const ParetoRow> rows);

}  // namespace lsr

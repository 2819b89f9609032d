#include "pareto.hpp"

#include <cmath>

#include "errors.hpp"

namespace lsr {

bool dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dominance between rows with different metric counts");
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly = true;
  }
  return strictly;
}

ParetoReport pareto_rank(std::span<const ParetoRow> rows) {
  ParetoReport rep;
  rep.rows.assign(rows.begin(), rows.end());
  rep.front.assign(rows.size(), 0);
  for (const auto& r : rows)
    for (double v : r.ranks)
      if (!std::isfinite(v)) throw InvalidArgument("ranks must be finite");

  std::size_t assigned = 0;
  for (int front = 1; assigned < rows.size(); ++front) {
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rep.front[i] != 0) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < rows.size() && !dominated; ++j)
        dominated = j != i && rep.front[j] == 0 && dominates(rows[j].ranks, rows[i].ranks);
      if (!dominated) current.push_back(i);
    }
    for (std::size_t i : current) rep.front[i] = front;
    assigned += current.size();
  }
  return rep;
}

}  // namespace lsr

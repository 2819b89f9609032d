#pragma once

// Independent reference implementations used to check the library.

#include <algorithm>
#include <vector>

#include "pareto.hpp"
#include "vocab.hpp"

namespace lsr::testing {

// Plain recursive Levenshtein, exponential but fine for short sequences.
inline std::size_t naive_distance(const TokenSeq& a, std::size_t i, const TokenSeq& b, std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const std::size_t sub = naive_distance(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  const std::size_t del = naive_distance(a, i + 1, b, j) + 1;
  const std::size_t ins = naive_distance(a, i, b, j + 1) + 1;
  return std::min({sub, del, ins});
}

inline std::size_t naive_distance(const TokenSeq& a, const TokenSeq& b) { return naive_distance(a, 0, b, 0); }

// Every sequence over `letters` token ids with length at most max_len.
inline std::vector<TokenSeq> all_sequences(int letters, int max_len) {
  std::vector<TokenSeq> all = {{}};
  std::size_t begin = 0;
  for (int len = 1; len <= max_len; ++len) {
    const std::size_t end = all.size();
    for (std::size_t i = begin; i < end; ++i)
      for (int t = 0; t < letters; ++t) {
        auto c = all[i];
        c.push_back(TokenId{t});
        all.push_back(std::move(c));
      }
    begin = end;
  }
  return all;
}

// Brute-force fronts: peel off the rows nobody remaining dominates.
inline std::vector<int> brute_fronts(const std::vector<ParetoRow>& rows) {
  std::vector<int> front(rows.size(), 0);
  int level = 0;
  std::size_t assigned = 0;
  while (assigned < rows.size()) {
    ++level;
    std::vector<std::size_t> now;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (front[i]) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < rows.size() && !dominated; ++j) {
        if (j == i || front[j]) continue;
        bool no_worse = true, better = false;
        for (std::size_t m = 0; m < rows[i].ranks.size(); ++m) {
          no_worse = no_worse && rows[j].ranks[m] <= rows[i].ranks[m];
          better = better || rows[j].ranks[m] < rows[i].ranks[m];
        }
        dominated = no_worse && better;
      }
      if (!dominated) now.push_back(i);
    }
    for (std::size_t i : now) front[i] = level;
    assigned += now.size();
  }
  return front;
}

}  // namespace lsr::testing

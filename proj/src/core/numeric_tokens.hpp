#pragma once

#include <array>

#include "vocab.hpp"

namespace lsr {

// Base-10 float with four significant digits: sign * mantissa * 10^exponent.
// Nonzero values have mantissa in [1000, 9999]; zero is (+, 0, 0).
struct NumericTriple {
  bool negative = false;
  int mantissa = 0;
  int exponent = 0;

  bool operator==(const NumericTriple&) const = default;
  std::array<TokenId, 3> tokens() const;
};

// Round-half-even to four significant digits. Throws RangeError for
// non-finite input or an exponent outside [-100, 100].
NumericTriple tokenize_float(double v);

double detokenize_float(const NumericTriple& t);

// The value actually representable by a numeric token triple.
inline double round_to_tokens(double v) { return detokenize_float(tokenize_float(v)); }

}  // namespace lsr

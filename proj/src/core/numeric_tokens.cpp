#include "numeric_tokens.hpp"

#include <cfenv>
#include <cmath>

#include "errors.hpp"

namespace lsr {

namespace {

// Exact for |k| <= 22, which covers every normal four-digit scaling step.
long double pow10l(int k) {
  static constexpr double kExact[] = {1e0,  1e1,  1e2,  1e3,  1e4,  1e5,  1e6,  1e7,
                                      1e8,  1e9,  1e10, 1e11, 1e12, 1e13, 1e14, 1e15,
                                      1e16, 1e17, 1e18, 1e19, 1e20, 1e21, 1e22};
  if (k >= 0 && k <= 22) return kExact[k];
  return std::pow(10.0L, static_cast<long double>(k));
}

// |v| / 10^shift, computed with a single rounding where possible.
long double scale_down(long double a, int shift) {
  if (shift >= 0) return a / pow10l(shift);
  return a * pow10l(-shift);
}

}  // namespace

std::array<TokenId, 3> NumericTriple::tokens() const {
  return {Vocabulary::sign(negative), Vocabulary::mantissa(mantissa), Vocabulary::exponent(exponent)};
}

NumericTriple tokenize_float(double v) {
  if (!std::isfinite(v)) throw RangeError("cannot tokenize a non-finite value");
  if (v == 0.0) return {};
  const long double a = std::fabs(static_cast<long double>(v));
  int e10 = static_cast<int>(std::floor(std::log10(a)));
  long double q = 0;
  for (int attempt = 0; attempt < 3; ++attempt) {
    q = std::nearbyint(scale_down(a, e10 - 3));  // default rounding mode: ties to even
    if (q >= 10000.0L) {
      ++e10;
    } else if (q < 1000.0L) {
      --e10;
    } else {
      break;
    }
  }
  // A value like 9999.6 rounds up to 10000: renormalize to 1000 at the next decade.
  if (q >= 10000.0L) {
    q = 1000.0L;
    ++e10;
  }
  const int exponent = e10 - 3;
  if (exponent < Vocabulary::kMinExponent || exponent > Vocabulary::kMaxExponent)
    throw RangeError("exponent " + std::to_string(exponent) + " outside [-100, 100]");
  return {v < 0, static_cast<int>(q), exponent};
}

double detokenize_float(const NumericTriple& t) {
  double mag;
  if (std::abs(t.exponent) <= 22) {
    // Both operands exact: one correctly rounded operation.
    const double p = static_cast<double>(pow10l(std::abs(t.exponent)));
    mag = t.exponent >= 0 ? t.mantissa * p : t.mantissa / p;
  } else {
    const long double m = t.mantissa;
    mag = static_cast<double>(t.exponent >= 0 ? m * pow10l(t.exponent) : m / pow10l(-t.exponent));
  }
  return t.negative ? -mag : mag;
}

}  // namespace lsr

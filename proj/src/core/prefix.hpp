#pragma once

#include "expr.hpp"
#include "vocab.hpp"

namespace lsr {

// BOS, prefix traversal, EOS. Constants become their (sign, mantissa,
// exponent) token triple, so they are rounded to four significant digits.
TokenSeq to_prefix(const Expr& e);

// Inverse of to_prefix. Accepts trailing PAD after EOS; throws SyntaxError on
// anything else that is not a valid prefix encoding.
Expr from_prefix(const TokenSeq& tokens);

// Prefix tokens without BOS/EOS/PAD.
TokenSeq body_tokens(const TokenSeq& tokens);

// Levenshtein distance over token ids.
std::size_t edit_distance(const TokenSeq& a, const TokenSeq& b);

}  // namespace lsr

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "expr.hpp"

namespace lsr {

struct TokenId {
  std::int32_t value = 0;
  friend auto operator<=>(TokenId, TokenId) = default;
};

using TokenSeq = std::vector<TokenId>;

// Fixed token table shared by equations and numeric samples.
//
// Layout: PAD BOS EOS | 9 operators | x0..x9 | c   (structural block, 23 ids)
//         +  -        | E-100..E100 | 0..9999      (numeric block)
//
// The decoder only ever emits structural ids; numeric ids appear in encoded
// samples and in constants of fully specified expressions.
class Vocabulary {
 public:
  static const Vocabulary& standard();

  static constexpr TokenId kPad{0};
  static constexpr TokenId kBos{1};
  static constexpr TokenId kEos{2};
  static constexpr std::int32_t kOpBase = 3;
  static constexpr std::int32_t kVarBase = kOpBase + kNumOps;
  static constexpr TokenId kPlaceholder{kVarBase + kMaxVariables};
  static constexpr std::int32_t kStructuralSize = kPlaceholder.value + 1;
  static constexpr TokenId kPlus{kStructuralSize};
  static constexpr TokenId kMinus{kStructuralSize + 1};
  static constexpr std::int32_t kMinExponent = -100;
  static constexpr std::int32_t kMaxExponent = 100;
  static constexpr std::int32_t kExpBase = kStructuralSize + 2;
  static constexpr std::int32_t kMantissaBase = kExpBase + (kMaxExponent - kMinExponent + 1);
  static constexpr std::int32_t kMaxMantissa = 9999;
  static constexpr std::int32_t kSize = kMantissaBase + kMaxMantissa + 1;

  static constexpr std::string_view kVersion = "lsr-vocab-1";

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  // Throws SyntaxError on an unknown token.
  TokenId id(std::string_view token) const;

  static TokenId op(Op o) { return {kOpBase + static_cast<std::int32_t>(o)}; }
  static TokenId variable(int i) { return {kVarBase + i}; }
  static TokenId sign(bool negative) { return negative ? kMinus : kPlus; }
  static TokenId exponent(int e) { return {kExpBase + (e - kMinExponent)}; }
  static TokenId mantissa(int m) { return {kMantissaBase + m}; }

  static bool is_op(TokenId t) { return t.value >= kOpBase && t.value < kVarBase; }
  static bool is_variable(TokenId t) { return t.value >= kVarBase && t.value < kPlaceholder.value; }
  static bool is_sign(TokenId t) { return t == kPlus || t == kMinus; }
  static bool is_exponent(TokenId t) { return t.value >= kExpBase && t.value < kMantissaBase; }
  static bool is_mantissa(TokenId t) { return t.value >= kMantissaBase && t.value < kSize; }
  static bool is_structural(TokenId t) { return t.value >= 0 && t.value < kStructuralSize; }

  static Op op_of(TokenId t) { return static_cast<Op>(t.value - kOpBase); }
  static int variable_of(TokenId t) { return t.value - kVarBase; }
  static int exponent_of(TokenId t) { return t.value - kExpBase + kMinExponent; }
  static int mantissa_of(TokenId t) { return t.value - kMantissaBase; }

 private:
  Vocabulary();
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

std::string join_tokens(const TokenSeq& seq);
// Whitespace-separated token strings; throws SyntaxError on unknown tokens.
TokenSeq parse_tokens(std::string_view text);

}  // namespace lsr

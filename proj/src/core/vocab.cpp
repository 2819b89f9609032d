#include "vocab.hpp"

#include <sstream>

#include "errors.hpp"

namespace lsr {

Vocabulary::Vocabulary() {
  tokens_.reserve(kSize);
  tokens_ = {"<PAD>", "<BOS>", "<EOS>"};
  for (int o = 0; o < kNumOps; ++o) tokens_.emplace_back(op_name(static_cast<Op>(o)));
  for (int i = 0; i < kMaxVariables; ++i) tokens_.push_back("x" + std::to_string(i));
  tokens_.emplace_back("c");
  tokens_.emplace_back("+");
  tokens_.emplace_back("-");
  for (int e = kMinExponent; e <= kMaxExponent; ++e) tokens_.push_back("E" + std::to_string(e));
  for (int m = 0; m <= kMaxMantissa; ++m) tokens_.push_back(std::to_string(m));
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    index_.emplace(tokens_[i], static_cast<std::int32_t>(i));
}

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary v;
  return v;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id.value < 0 || static_cast<std::size_t>(id.value) >= tokens_.size())
    throw SyntaxError("token id out of range: " + std::to_string(id.value));
  return tokens_[static_cast<std::size_t>(id.value)];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return TokenId{it->second};
}

TokenId Vocabulary::id(std::string_view token) const {
  if (auto t = find(token)) return *t;
  throw SyntaxError("unknown token '" + std::string(token) + "'");
}

std::string join_tokens(const TokenSeq& seq) {
  const auto& v = Vocabulary::standard();
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += v.token(seq[i]);
  }
  return out;
}

TokenSeq parse_tokens(std::string_view text) {
  const auto& v = Vocabulary::standard();
  std::istringstream in{std::string(text)};
  TokenSeq out;
  std::string tok;
  while (in >> tok) out.push_back(v.id(tok));
  return out;
}

}  // namespace lsr

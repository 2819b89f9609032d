#include "prefix.hpp"

#include <algorithm>
#include <numeric>

#include "errors.hpp"
#include "numeric_tokens.hpp"

namespace lsr {

TokenSeq to_prefix(const Expr& e) {
  TokenSeq out;
  out.reserve(complexity(e) + 2);
  out.push_back(Vocabulary::kBos);
  for (const Node& n : e.nodes()) {
    switch (n.kind) {
      case NodeKind::kOperator:
        out.push_back(Vocabulary::op(n.op));
        break;
      case NodeKind::kVariable:
        out.push_back(Vocabulary::variable(n.variable));
        break;
      case NodeKind::kPlaceholder:
        out.push_back(Vocabulary::kPlaceholder);
        break;
      case NodeKind::kConstant: {
        const auto t = tokenize_float(n.value).tokens();
        out.insert(out.end(), t.begin(), t.end());
        break;
      }
    }
  }
  out.push_back(Vocabulary::kEos);
  return out;
}

Expr from_prefix(const TokenSeq& tokens) {
  if (tokens.empty() || tokens.front() != Vocabulary::kBos)
    throw SyntaxError("sequence does not start with BOS");
  const auto eos = std::find(tokens.begin() + 1, tokens.end(), Vocabulary::kEos);
  if (eos == tokens.end()) throw SyntaxError("missing EOS");
  if (!std::all_of(eos + 1, tokens.end(), [](TokenId t) { return t == Vocabulary::kPad; }))
    throw SyntaxError("non-PAD token after EOS");

  std::vector<Node> nodes;
  for (auto it = tokens.begin() + 1; it != eos; ++it) {
    const TokenId t = *it;
    if (Vocabulary::is_op(t)) {
      nodes.push_back(Node::make_op(Vocabulary::op_of(t)));
    } else if (Vocabulary::is_variable(t)) {
      nodes.push_back(Node::make_variable(Vocabulary::variable_of(t)));
    } else if (t == Vocabulary::kPlaceholder) {
      nodes.push_back(Node::make_placeholder());
    } else if (Vocabulary::is_sign(t)) {
      if (eos - it < 3 || !Vocabulary::is_mantissa(it[1]) || !Vocabulary::is_exponent(it[2]))
        throw SyntaxError("sign token not followed by mantissa and exponent");
      const NumericTriple triple{t == Vocabulary::kMinus, Vocabulary::mantissa_of(it[1]),
                                 Vocabulary::exponent_of(it[2])};
      nodes.push_back(Node::make_constant(detokenize_float(triple)));
      it += 2;
    } else if (Vocabulary::is_mantissa(t) || Vocabulary::is_exponent(t)) {
      throw SyntaxError("dangling numeric sub-token");
    } else if (t == Vocabulary::kPad) {
      throw SyntaxError("PAD inside expression");
    } else {
      throw SyntaxError("unexpected special token inside expression");
    }
  }
  if (nodes.empty()) throw SyntaxError("empty expression");
  return Expr::from_nodes(std::move(nodes));
}

TokenSeq body_tokens(const TokenSeq& tokens) {
  TokenSeq out;
  for (TokenId t : tokens) {
    if (t == Vocabulary::kBos || t == Vocabulary::kPad) continue;
    if (t == Vocabulary::kEos) break;
    out.push_back(t);
  }
  return out;
}

std::size_t edit_distance(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

}  // namespace lsr

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lsr {

inline constexpr int kMaxVariables = 10;

enum class Op : std::uint8_t { kAdd, kSub, kMul, kDiv, kLog, kExp, kSin, kCos, kTan };
inline constexpr int kNumOps = 9;

int arity(Op op);
std::string_view op_name(Op op);

enum class NodeKind : std::uint8_t { kOperator, kVariable, kConstant, kPlaceholder };

struct Node {
  NodeKind kind = NodeKind::kPlaceholder;
  Op op = Op::kAdd;    // kOperator only
  int variable = 0;    // kVariable only
  double value = 0.0;  // kConstant only

  static Node make_op(Op o) { return {NodeKind::kOperator, o, 0, 0.0}; }
  static Node make_variable(int i) { return {NodeKind::kVariable, Op::kAdd, i, 0.0}; }
  static Node make_constant(double v) { return {NodeKind::kConstant, Op::kAdd, 0, v}; }
  static Node make_placeholder() { return {NodeKind::kPlaceholder, Op::kAdd, 0, 0.0}; }

  bool operator==(const Node& o) const;
};

// An expression tree stored as its prefix (Polish) node sequence. The
// sequence is always a complete tree: every operator is followed by exactly
// arity(op) sub-trees.
class Expr {
 public:
  Expr() = default;

  // Throws SyntaxError if `nodes` is not a single complete prefix tree.
  static Expr from_nodes(std::vector<Node> nodes);

  static Expr variable(int index);
  static Expr constant(double value);
  static Expr placeholder();
  static Expr unary(Op op, const Expr& arg);
  static Expr binary(Op op, const Expr& lhs, const Expr& rhs);

  std::span<const Node> nodes() const { return nodes_; }
  bool empty() const { return nodes_.empty(); }

  int placeholder_count() const;
  // Highest variable index used, or -1.
  int max_variable() const;
  bool contains(Op op) const;

  // Replaces placeholders, in prefix order, with the given values.
  Expr with_constants(std::span<const double> values) const;

  bool operator==(const Expr& o) const { return nodes_ == o.nodes_; }

 private:
  explicit Expr(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}
  std::vector<Node> nodes_;
};

// Evaluates at point x. Placeholders take successive entries of
// `placeholder_values` in prefix order. Throws DomainError on log of a
// non-positive value, division by |d| < 1e-300, tan with |cos| < 1e-12, or
// any non-finite intermediate.
double eval(const Expr& e, std::span<const double> x,
            std::span<const double> placeholder_values = {});

// Non-throwing variant; nullopt on a domain failure.
std::optional<double> try_eval(const Expr& e, std::span<const double> x,
                               std::span<const double> placeholder_values = {});

// Token count: operators, variables and constants (a constant is one token).
std::size_t complexity(const Expr& e);

Expr canonicalize_constants(const Expr& e);

// Infix with explicit parentheses around every binary node; constants in
// shortest round-trip decimal; placeholders as "c".
std::string to_text(const Expr& e);

std::string format_double(double v);

}  // namespace lsr

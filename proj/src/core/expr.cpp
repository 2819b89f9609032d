#include "expr.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "errors.hpp"

namespace lsr {

namespace {

constexpr std::array<std::string_view, kNumOps> kOpNames = {"add", "sub", "mul", "div", "log",
                                                            "exp", "sin", "cos", "tan"};

struct Evaluator {
  std::span<const Node> nodes;
  std::span<const double> x;
  std::span<const double> constants;
  std::size_t pos = 0;
  std::size_t next_constant = 0;
  bool failed = false;

  double run() {
    const Node& n = nodes[pos++];
    switch (n.kind) {
      case NodeKind::kVariable:
        return x[static_cast<std::size_t>(n.variable)];
      case NodeKind::kConstant:
        return n.value;
      case NodeKind::kPlaceholder:
        return constants[next_constant++];
      case NodeKind::kOperator:
        break;
    }
    if (arity(n.op) == 1) {
      const double a = run();
      if (failed) return 0.0;
      return check(apply_unary(n.op, a));
    }
    const double a = run();
    if (failed) return 0.0;
    const double b = run();
    if (failed) return 0.0;
    return check(apply_binary(n.op, a, b));
  }

  double check(double v) {
    if (!std::isfinite(v)) failed = true;
    return v;
  }

  double apply_unary(Op op, double a) {
    switch (op) {
      case Op::kLog:
        if (a <= 0.0) {
          failed = true;
          return 0.0;
        }
        return std::log(a);
      case Op::kExp:
        return std::exp(a);
      case Op::kSin:
        return std::sin(a);
      case Op::kCos:
        return std::cos(a);
      case Op::kTan:
        if (std::fabs(std::cos(a)) < 1e-12) {
          failed = true;
          return 0.0;
        }
        return std::tan(a);
      default:
        failed = true;
        return 0.0;
    }
  }

  double apply_binary(Op op, double a, double b) {
    switch (op) {
      case Op::kAdd:
        return a + b;
      case Op::kSub:
        return a - b;
      case Op::kMul:
        return a * b;
      case Op::kDiv:
        if (std::fabs(b) < 1e-300) {
          failed = true;
          return 0.0;
        }
        return a / b;
      default:
        failed = true;
        return 0.0;
    }
  }
};

void check_inputs(const Expr& e, std::span<const double> x, std::span<const double> constants) {
  if (e.empty()) throw InvalidArgument("cannot evaluate an empty expression");
  if (e.max_variable() >= static_cast<int>(x.size()))
    throw InvalidArgument("expression uses x" + std::to_string(e.max_variable()) + " but point has " +
                          std::to_string(x.size()) + " coordinates");
  if (static_cast<std::size_t>(e.placeholder_count()) > constants.size())
    throw InvalidArgument("not enough values for constant placeholders");
}

void append_text(std::span<const Node> nodes, std::size_t& pos, std::string& out) {
  const Node& n = nodes[pos++];
  switch (n.kind) {
    case NodeKind::kVariable:
      out += 'x';
      out += std::to_string(n.variable);
      return;
    case NodeKind::kConstant:
      out += format_double(n.value);
      return;
    case NodeKind::kPlaceholder:
      out += 'c';
      return;
    case NodeKind::kOperator:
      break;
  }
  if (arity(n.op) == 1) {
    out += op_name(n.op);
    out += '(';
    append_text(nodes, pos, out);
    out += ')';
    return;
  }
  static constexpr std::array<std::string_view, 4> kSymbols = {" + ", " - ", " * ", " / "};
  out += '(';
  append_text(nodes, pos, out);
  out += kSymbols[static_cast<std::size_t>(n.op)];
  append_text(nodes, pos, out);
  out += ')';
}

}  // namespace

int arity(Op op) { return static_cast<int>(op) < static_cast<int>(Op::kLog) ? 2 : 1; }

std::string_view op_name(Op op) { return kOpNames[static_cast<std::size_t>(op)]; }

bool Node::operator==(const Node& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case NodeKind::kOperator:
      return op == o.op;
    case NodeKind::kVariable:
      return variable == o.variable;
    case NodeKind::kConstant:
      return value == o.value;
    case NodeKind::kPlaceholder:
      return true;
  }
  return false;
}

Expr Expr::from_nodes(std::vector<Node> nodes) {
  long open = 1;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (open <= 0) throw SyntaxError("trailing nodes after a complete expression");
    const Node& n = nodes[i];
    if (n.kind == NodeKind::kVariable && (n.variable < 0 || n.variable >= kMaxVariables))
      throw SyntaxError("variable index out of range");
    open += (n.kind == NodeKind::kOperator ? arity(n.op) : 0) - 1;
  }
  if (open != 0) throw SyntaxError("incomplete expression: missing operands");
  return Expr(std::move(nodes));
}

Expr Expr::variable(int index) { return from_nodes({Node::make_variable(index)}); }
Expr Expr::constant(double value) { return Expr({Node::make_constant(value)}); }
Expr Expr::placeholder() { return Expr({Node::make_placeholder()}); }

Expr Expr::unary(Op op, const Expr& arg) {
  if (arity(op) != 1) throw InvalidArgument("operator is not unary");
  std::vector<Node> n;
  n.reserve(arg.nodes_.size() + 1);
  n.push_back(Node::make_op(op));
  n.insert(n.end(), arg.nodes_.begin(), arg.nodes_.end());
  return Expr(std::move(n));
}

Expr Expr::binary(Op op, const Expr& lhs, const Expr& rhs) {
  if (arity(op) != 2) throw InvalidArgument("operator is not binary");
  std::vector<Node> n;
  n.reserve(lhs.nodes_.size() + rhs.nodes_.size() + 1);
  n.push_back(Node::make_op(op));
  n.insert(n.end(), lhs.nodes_.begin(), lhs.nodes_.end());
  n.insert(n.end(), rhs.nodes_.begin(), rhs.nodes_.end());
  return Expr(std::move(n));
}

int Expr::placeholder_count() const {
  int c = 0;
  for (const Node& n : nodes_) c += n.kind == NodeKind::kPlaceholder;
  return c;
}

int Expr::max_variable() const {
  int m = -1;
  for (const Node& n : nodes_)
    if (n.kind == NodeKind::kVariable && n.variable > m) m = n.variable;
  return m;
}

bool Expr::contains(Op op) const {
  for (const Node& n : nodes_)
    if (n.kind == NodeKind::kOperator && n.op == op) return true;
  return false;
}

Expr Expr::with_constants(std::span<const double> values) const {
  std::vector<Node> out = nodes_;
  std::size_t next = 0;
  for (Node& n : out) {
    if (n.kind != NodeKind::kPlaceholder) continue;
    if (next >= values.size()) throw InvalidArgument("not enough values for constant placeholders");
    n = Node::make_constant(values[next++]);
  }
  return Expr(std::move(out));
}

double eval(const Expr& e, std::span<const double> x, std::span<const double> placeholder_values) {
  check_inputs(e, x, placeholder_values);
  Evaluator ev{e.nodes(), x, placeholder_values};
  const double v = ev.run();
  if (ev.failed) throw DomainError("expression is undefined at the given point: " + to_text(e));
  return v;
}

std::optional<double> try_eval(const Expr& e, std::span<const double> x,
                               std::span<const double> placeholder_values) {
  check_inputs(e, x, placeholder_values);
  Evaluator ev{e.nodes(), x, placeholder_values};
  const double v = ev.run();
  if (ev.failed) return std::nullopt;
  return v;
}

std::size_t complexity(const Expr& e) { return e.nodes().size(); }

Expr canonicalize_constants(const Expr& e) {
  std::vector<Node> out(e.nodes().begin(), e.nodes().end());
  for (Node& n : out)
    if (n.kind == NodeKind::kConstant) n = Node::make_placeholder();
  return Expr::from_nodes(std::move(out));
}

std::string to_text(const Expr& e) {
  if (e.empty()) return {};
  std::string out;
  std::size_t pos = 0;
  append_text(e.nodes(), pos, out);
  return out;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

}  // namespace lsr

#include "datagen.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "corpus.hpp"
#include "errors.hpp"
#include "numeric_tokens.hpp"
#include "prefix.hpp"

namespace lsr {

namespace {

constexpr int kMaxRejections = 10000;

bool is_family_op(OpSet s, Op op) {
  switch (s) {
    case OpSet::kExpFamily:
      return op == Op::kExp;
    case OpSet::kLogFamily:
      return op == Op::kLog;
    case OpSet::kTrigFamily:
      return op == Op::kSin || op == Op::kCos || op == Op::kTan;
    default:
      return false;
  }
}

bool needs_family_op(OpSet s) {
  return s == OpSet::kExpFamily || s == OpSet::kLogFamily || s == OpSet::kTrigFamily;
}

struct Grower {
  const GenConfig& cfg;
  const std::vector<Op>& ops;
  double root_op_prob;
  double op_prob;
  Rng& rng;
  std::vector<Node> nodes;

  // Returns false once the tree exceeds the token cap.
  bool grow(int depth) {
    if (static_cast<int>(nodes.size()) >= cfg.max_tokens) return false;
    if (rng.uniform() < (depth == 0 ? root_op_prob : op_prob)) {
      const Op op = ops[rng.below(ops.size())];
      nodes.push_back(Node::make_op(op));
      for (int i = 0; i < arity(op); ++i)
        if (!grow(depth + 1)) return false;
      return true;
    }
    if (rng.uniform() < 0.75) {
      nodes.push_back(Node::make_variable(static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_vars)))));
    } else {
      const double mag = std::pow(10.0, rng.uniform(-1.0, 1.0));
      const double v = rng.uniform() < 0.5 ? -mag : mag;
      nodes.push_back(Node::make_constant(round_to_tokens(v)));
    }
    return true;
  }
};

}  // namespace

std::string op_set_name(OpSet s) {
  switch (s) {
    case OpSet::kLogExp:
      return "logexp";
    case OpSet::kTrig:
      return "trig";
    case OpSet::kExpFamily:
      return "exp-family";
    case OpSet::kLogFamily:
      return "log-family";
    case OpSet::kTrigFamily:
      return "trig-family";
  }
  return "logexp";
}

OpSet parse_op_set(const std::string& name) {
  for (OpSet s : {OpSet::kLogExp, OpSet::kTrig, OpSet::kExpFamily, OpSet::kLogFamily, OpSet::kTrigFamily})
    if (op_set_name(s) == name) return s;
  throw InvalidArgument("unknown operator set '" + name + "'");
}

std::vector<Op> op_set_operators(OpSet s) {
  std::vector<Op> ops = {Op::kAdd, Op::kSub, Op::kMul, Op::kDiv};
  switch (s) {
    case OpSet::kLogExp:
      ops.insert(ops.end(), {Op::kLog, Op::kExp});
      break;
    case OpSet::kTrig:
      ops.insert(ops.end(), {Op::kLog, Op::kExp, Op::kSin, Op::kCos, Op::kTan});
      break;
    case OpSet::kExpFamily:
      ops.push_back(Op::kExp);
      break;
    case OpSet::kLogFamily:
      ops.push_back(Op::kLog);
      break;
    case OpSet::kTrigFamily:
      ops.insert(ops.end(), {Op::kSin, Op::kCos, Op::kTan});
      break;
  }
  return ops;
}

void GenConfig::validate() const {
  if (max_tokens < 1) throw InvalidArgument("max_tokens must be at least 1");
  if (max_vars < 1 || max_vars > kMaxVariables) throw InvalidArgument("max_vars must lie in [1, 10]");
  if (samples < 1) throw InvalidArgument("samples per equation must be at least 1");
  if (!(domain_lo < domain_hi)) throw InvalidArgument("input domain must be a non-empty interval");
}

Expr sample_expression(const GenConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto ops = op_set_operators(cfg.ops);
  double binary = 0.0;
  for (Op o : ops) binary += arity(o) == 2;
  const double binary_share = binary / static_cast<double>(ops.size());
  // The root is an operator with probability r, deeper nodes with q. A
  // subtree below the root has expected size S = 1 / (1 - q (1 + b)) with b
  // the binary share, so the whole tree has 1 + r (1 + b) S nodes on average.
  // Aim for 60% of the cap.
  const double fanout = 1.0 + binary_share;
  const double target = 0.6 * cfg.max_tokens;
  const double root_op_prob = cfg.max_tokens >= 2 ? 0.9 : 0.0;
  double op_prob = 0.0;
  if (root_op_prob > 0.0 && target > 1.0) {
    const double subtree = std::max(1.0, (target - 1.0) / (root_op_prob * fanout));
    op_prob = (1.0 - 1.0 / subtree) / fanout;
  }

  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    Grower g{cfg, ops, root_op_prob, op_prob, rng, {}};
    if (!g.grow(0)) continue;
    if (static_cast<int>(g.nodes.size()) > cfg.max_tokens) continue;
    if (needs_family_op(cfg.ops)) {
      bool found = false;
      for (const Node& n : g.nodes) found = found || (n.kind == NodeKind::kOperator && is_family_op(cfg.ops, n.op));
      if (!found) continue;
    }
    return Expr::from_nodes(std::move(g.nodes));
  }
  throw GenerationTimeout("no expression satisfied the configuration after 10000 attempts");
}

Dataset sample_dataset(const Expr& e, const GenConfig& cfg, Rng& rng) {
  cfg.validate();
  Dataset d;
  d.dim = std::max(1, e.max_variable() + 1);
  double lo = cfg.domain_lo;
  const double hi = cfg.domain_hi;
  const bool positive = e.contains(Op::kLog) && hi > 0.0;
  if (positive) lo = 0.0;

  const long budget = 100L * cfg.samples;
  std::vector<double> x(static_cast<std::size_t>(d.dim));
  for (long attempt = 0; attempt < budget && static_cast<int>(d.size()) < cfg.samples; ++attempt) {
    for (double& v : x) v = positive ? hi - (hi - lo) * rng.uniform() : rng.uniform(lo, hi);
    if (auto y = try_eval(e, x)) d.push_back(x, *y);
  }
  if (static_cast<int>(d.size()) < cfg.samples)
    throw GenerationTimeout("acceptance rate below 1% for " + to_text(e));
  return d;
}

std::vector<double> add_noise(const std::vector<double>& ys, double level, Rng& rng) {
  if (level < 0.0) throw InvalidArgument("noise level must be non-negative");
  std::vector<double> out = ys;
  if (level == 0.0 || ys.size() < 2) return out;
  double mean = 0.0;
  for (double v : ys) mean += v;
  mean /= static_cast<double>(ys.size());
  double ss = 0.0;
  for (double v : ys) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(ys.size() - 1));
  if (sd == 0.0) return out;
  for (double& v : out) v += level * sd * rng.normal();
  return out;
}

std::vector<CorpusEntry> generate_corpus(const GenConfig& cfg, std::size_t count) {
  cfg.validate();
  std::vector<CorpusEntry> out;
  out.reserve(count);
  std::unordered_set<std::string> seen;
  const Rng root(cfg.seed);
  const std::uint64_t budget = 100 * static_cast<std::uint64_t>(count) + 10000;
  for (std::uint64_t attempt = 0; out.size() < count; ++attempt) {
    if (attempt >= budget)
      throw GenerationTimeout("could not generate " + std::to_string(count) + " unique entries");
    Rng rng = root.derive("entry", attempt);
    const std::uint64_t entry_seed = rng.seed();
    Expr e = sample_expression(cfg, rng);
    std::string key = join_tokens(to_prefix(e));
    if (seen.count(key)) continue;
    Dataset data;
    try {
      data = sample_dataset(e, cfg, rng);
    } catch (const GenerationTimeout&) {
      continue;  // pathological expression, discard
    }
    // Numeric tokenization must succeed for every sample the model will see.
    bool representable = true;
    for (double v : data.y) {
      try {
        tokenize_float(v);
      } catch (const RangeError&) {
        representable = false;
        break;
      }
    }
    if (!representable) continue;
    seen.insert(std::move(key));
    out.push_back({std::move(e), std::move(data), op_set_name(cfg.ops), entry_seed});
  }
  return out;
}

void build_corpus(const GenConfig& cfg, std::size_t count, const std::filesystem::path& out) {
  try {
    const auto entries = generate_corpus(cfg, count);
    save_corpus(entries, out);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(out, ec);
    throw;
  }
}

}  // namespace lsr

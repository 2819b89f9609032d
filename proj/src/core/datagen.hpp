#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "expr.hpp"
#include "rng.hpp"

namespace lsr {

enum class OpSet {
  kLogExp,       // + - * / log exp
  kTrig,         // LogExp plus sin cos tan
  kExpFamily,    // + - * / exp, at least one exp
  kLogFamily,    // + - * / log, at least one log
  kTrigFamily,   // + - * / sin cos tan, at least one trig operator
};

std::string op_set_name(OpSet s);
OpSet parse_op_set(const std::string& name);  // throws InvalidArgument
std::vector<Op> op_set_operators(OpSet s);

struct GenConfig {
  OpSet ops = OpSet::kLogExp;
  int max_tokens = 15;
  int max_vars = 3;
  int samples = 50;  // m
  double domain_lo = -2.0;
  double domain_hi = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Random expression with complexity <= max_tokens over x0..x{max_vars-1}.
// Constants are log-uniform in [0.1, 10) with a random sign, rounded to what
// the numeric tokens represent. Throws GenerationTimeout after 10,000
// rejections.
Expr sample_expression(const GenConfig& cfg, Rng& rng);

// `samples` points uniform in the configured domain (restricted to (0, hi]
// when the expression contains log), rejecting points where the expression
// is undefined. Dimension is max variable index + 1. Throws
// GenerationTimeout when the acceptance rate falls below 1%.
Dataset sample_dataset(const Expr& e, const GenConfig& cfg, Rng& rng);

// y_i + level * std(y) * N(0, 1), std with the n-1 denominator.
std::vector<double> add_noise(const std::vector<double>& ys, double level, Rng& rng);

struct CorpusEntry {
  Expr expr;
  Dataset data;
  std::string family;
  std::uint64_t seed = 0;
};

// `count` entries unique by prefix string, each generated from its own
// derived stream. Throws GenerationTimeout when the attempt budget runs out.
std::vector<CorpusEntry> generate_corpus(const GenConfig& cfg, std::size_t count);

// generate_corpus streamed to a JSON-lines file; the file is removed on failure.
void build_corpus(const GenConfig& cfg, std::size_t count, const std::filesystem::path& out);

}  // namespace lsr

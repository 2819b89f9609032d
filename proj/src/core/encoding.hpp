#pragma once

#include "dataset.hpp"
#include "expr.hpp"
#include "vocab.hpp"

namespace lsr {

// Padded id encoding: BOS ... EOS then PAD up to pad_len.
// Throws LengthError if the prefix form is longer than pad_len.
TokenSeq encode_equation(const Expr& e, std::size_t pad_len);

// Numeric token grid: one row per sample, 3 * (width + 1) ids per row laid
// out as x0 triple, ..., x{width-1} triple, y triple. Variables beyond the
// dataset dimension are filled with PAD.
struct SampleGrid {
  std::size_t rows = 0;
  int width = 0;
  std::vector<TokenId> ids;

  std::size_t row_length() const { return 3 * static_cast<std::size_t>(width + 1); }
};

// Throws InvalidArgument on empty data, ShapeError if width < data.dim or
// width > 10, RangeError when a value cannot be tokenized.
SampleGrid encode_samples(const Dataset& data, int width);
inline SampleGrid encode_samples(const Dataset& data) { return encode_samples(data, data.dim); }

}  // namespace lsr

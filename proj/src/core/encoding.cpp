#include "encoding.hpp"

#include "errors.hpp"
#include "numeric_tokens.hpp"
#include "prefix.hpp"

namespace lsr {

TokenSeq encode_equation(const Expr& e, std::size_t pad_len) {
  TokenSeq seq = to_prefix(e);
  if (seq.size() > pad_len)
    throw LengthError("prefix form has " + std::to_string(seq.size()) + " tokens, pad length is " +
                      std::to_string(pad_len));
  seq.resize(pad_len, Vocabulary::kPad);
  return seq;
}

SampleGrid encode_samples(const Dataset& data, int width) {
  if (data.empty()) throw InvalidArgument("cannot encode an empty dataset");
  if (data.dim < 1 || width < data.dim || width > kMaxVariables)
    throw ShapeError("sample width must satisfy dim <= width <= 10");
  SampleGrid g;
  g.rows = data.size();
  g.width = width;
  g.ids.reserve(g.rows * g.row_length());
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (int i = 0; i < width; ++i) {
      if (i < data.dim) {
        const auto t = tokenize_float(data.point(r)[static_cast<std::size_t>(i)]).tokens();
        g.ids.insert(g.ids.end(), t.begin(), t.end());
      } else {
        g.ids.insert(g.ids.end(), 3, Vocabulary::kPad);
      }
    }
    const auto t = tokenize_float(data.y[r]).tokens();
    g.ids.insert(g.ids.end(), t.begin(), t.end());
  }
  return g;
}

}  // namespace lsr

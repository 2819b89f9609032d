#include "dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "expr.hpp"

namespace lsr {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InvalidArgument("line " + std::to_string(line) + ": not a number: '" + s + "'");
  return v;
}

}  // namespace

void Dataset::push_back(std::span<const double> xi, double yi) {
  if (static_cast<int>(xi.size()) != dim) throw ShapeError("sample dimension mismatch");
  x.insert(x.end(), xi.begin(), xi.end());
  y.push_back(yi);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.dim = dim;
  for (std::size_t r : rows) out.push_back(point(r), y[r]);
  return out;
}

Dataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.size() < 2) throw InvalidArgument("CSV header must be x0..x{D-1},y");
  const int dim = static_cast<int>(header.size()) - 1;
  if (dim > kMaxVariables) throw ShapeError("at most 10 input variables are supported");
  for (int i = 0; i < dim; ++i)
    if (header[static_cast<std::size_t>(i)] != "x" + std::to_string(i))
      throw InvalidArgument("CSV header column " + std::to_string(i) + " must be x" + std::to_string(i));
  if (header.back() != "y") throw InvalidArgument("last CSV header column must be y");

  Dataset d;
  d.dim = dim;
  std::vector<double> row(static_cast<std::size_t>(dim));
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw InvalidArgument("line " + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " columns");
    for (int i = 0; i < dim; ++i) row[static_cast<std::size_t>(i)] = parse_number(cells[static_cast<std::size_t>(i)], lineno);
    d.push_back(row, parse_number(cells.back(), lineno));
  }
  return d;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_csv(buf.str());
}

std::string to_csv(const Dataset& d) {
  std::string out;
  for (int i = 0; i < d.dim; ++i) out += "x" + std::to_string(i) + ",";
  out += "y\n";
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (double v : d.point(r)) out += format_double(v) + ",";
    out += format_double(d.y[r]) + "\n";
  }
  return out;
}

}  // namespace lsr

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lsr {

// m samples (x, y) with x in R^dim, stored row-major.
struct Dataset {
  int dim = 0;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
  bool empty() const { return y.empty(); }
  std::span<const double> point(std::size_t i) const {
    return {x.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  void push_back(std::span<const double> xi, double yi);
  Dataset subset(std::span<const std::size_t> rows) const;
};

// CSV with header x0..x{D-1},y. Throws IoError / InvalidArgument.
Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(const std::string& text);
std::string to_csv(const Dataset& d);

}  // namespace lsr

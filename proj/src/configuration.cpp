#include "birthsim/configuration.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace birthsim {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Configuration::Configuration(int dimension) : dimension_(dimension) {
  if (dimension < 1 || dimension > kMaxDimension) {
    throw std::invalid_argument("Configuration: dimension must be in [1, " +
                                std::to_string(kMaxDimension) + "]");
  }
}

Configuration::Configuration(int dimension, std::vector<double> flat_coords)
    : Configuration(dimension) {
  if (flat_coords.size() % static_cast<std::size_t>(dimension) != 0) {
    throw std::invalid_argument("Configuration: coordinate count is not a multiple of dimension");
  }
  coords_.reserve(flat_coords.size());
  for (std::size_t i = 0; i < flat_coords.size(); i += static_cast<std::size_t>(dimension)) {
    add(std::span<const double>(flat_coords.data() + i, static_cast<std::size_t>(dimension)));
  }
}

void Configuration::check_dimension(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(dimension_)) {
    throw std::invalid_argument("Configuration: point has " + std::to_string(x.size()) +
                                " coordinates, expected " + std::to_string(dimension_));
  }
}

std::uint64_t Configuration::hash_point(std::span<const double> x) const {
  std::uint64_t h = 0x9E3779B97F4A7C15ull;
  for (double c : x) {
    // +0.0 and -0.0 are the same point.
    const double v = c == 0.0 ? 0.0 : c;
    h ^= std::bit_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  }
  return h;
}

bool Configuration::contains(std::span<const double> x) const {
  check_dimension(x);
  auto [lo, hi] = index_.equal_range(hash_point(x));
  for (auto it = lo; it != hi; ++it) {
    const auto p = point(it->second);
    if (std::equal(p.begin(), p.end(), x.begin())) return true;
  }
  return false;
}

void Configuration::add(std::span<const double> x) {
  check_dimension(x);
  if (contains(x)) throw std::invalid_argument("Configuration: duplicate point");
  index_.emplace(hash_point(x), size());
  coords_.insert(coords_.end(), x.begin(), x.end());
}

}  // namespace birthsim

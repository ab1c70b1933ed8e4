#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace birthsim {

inline constexpr int kMaxDimension = 3;

// Fixed-capacity position; only the first `dimension` coordinates are used.
using Vec = std::array<double, kMaxDimension>;

inline Vec make_vec(std::span<const double> x) {
  Vec v{};
  for (std::size_t i = 0; i < x.size() && i < v.size(); ++i) v[i] = x[i];
  return v;
}

double squared_distance(std::span<const double> a, std::span<const double> b);

// A finite, duplicate-free set of points in R^d, kept in insertion order.
class Configuration {
 public:
  explicit Configuration(int dimension);
  Configuration(int dimension, std::vector<double> flat_coords);
  Configuration(int dimension, std::initializer_list<double> flat_coords)
      : Configuration(dimension, std::vector<double>(flat_coords)) {}

  int dimension() const { return dimension_; }
  std::size_t size() const { return coords_.size() / static_cast<std::size_t>(dimension_); }
  bool empty() const { return coords_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dimension_),
            static_cast<std::size_t>(dimension_)};
  }
  const std::vector<double>& coords() const { return coords_; }

  // Throws std::invalid_argument on dimension mismatch or an exact duplicate.
  void add(std::span<const double> x);
  void add(std::initializer_list<double> x) { add(std::span<const double>(x.begin(), x.size())); }
  bool contains(std::span<const double> x) const;
  bool contains(std::initializer_list<double> x) const { return contains(std::span<const double>(x.begin(), x.size())); }

  friend bool operator==(const Configuration& a, const Configuration& b) {
    return a.dimension_ == b.dimension_ && a.coords_ == b.coords_;
  }

 private:
  std::uint64_t hash_point(std::span<const double> x) const;
  void check_dimension(std::span<const double> x) const;

  int dimension_;
  std::vector<double> coords_;
  std::unordered_multimap<std::uint64_t, std::size_t> index_;
};

}  // namespace birthsim

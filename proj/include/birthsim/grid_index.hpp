#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "birthsim/configuration.hpp"
#include "birthsim/kernel.hpp"

namespace birthsim {

// Uniform hash grid over R^d (d <= 3). With cell size equal to the interaction
// range, every partner of a point lies in its 3^d neighbouring cells.
class GridIndex {
 public:
  GridIndex(int dimension, double cell_size);

  int dimension() const { return dim_; }
  double cell_size() const { return cell_; }
  std::size_t size() const { return coords_.size() / static_cast<std::size_t>(dim_); }
  std::size_t cell_count() const { return cells_.size(); }

  std::size_t insert(std::span<const double> x);
  void insert_all(const Configuration& c);
  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  std::int64_t cell_coord(double v) const;
  std::uint64_t key_of(std::span<const double> x) const;

  // Calls f(index) for every stored point in the 3^d cells around x.
  template <class F>
  void for_each_candidate(std::span<const double> x, F&& f) const;

  // b(x, eta) for the stored points; early exit once the cap is reached.
  double rate(const BallSum& kernel, std::span<const double> x) const;

 private:
  static std::uint64_t pack(const std::int64_t* c, int dim);

  int dim_;
  double cell_;
  std::vector<double> coords_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

template <class F>
void GridIndex::for_each_candidate(std::span<const double> x, F&& f) const {
  std::int64_t base[kMaxDimension] = {};
  for (int i = 0; i < dim_; ++i) base[i] = cell_coord(x[static_cast<std::size_t>(i)]);
  int total = 1;
  for (int i = 0; i < dim_; ++i) total *= 3;
  std::int64_t c[kMaxDimension] = {};
  for (int n = 0; n < total; ++n) {
    int m = n;
    for (int i = 0; i < dim_; ++i) {
      c[i] = base[i] + (m % 3) - 1;
      m /= 3;
    }
    auto it = cells_.find(pack(c, dim_));
    if (it == cells_.end()) continue;
    for (std::uint32_t idx : it->second) f(static_cast<std::size_t>(idx));
  }
}

// Reference evaluator: all-pairs, no index.
double brute_force_rate(const BallSum& kernel, std::span<const double> x, const Configuration& c);

}  // namespace birthsim

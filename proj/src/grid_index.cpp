#include "birthsim/grid_index.hpp"

#include <cmath>
#include <stdexcept>

namespace birthsim {

namespace {

constexpr std::size_t kMaxTerms = 16;

// Bit-identical across evaluators: counts are integers, then combined by BallSum::combine.
template <class Each>
double rate_from_candidates(const BallSum& kernel, std::span<const double> x, Each&& each) {
  const std::size_t nt = kernel.terms.size();
  if (nt > kMaxTerms) throw std::invalid_argument("kernel has too many profile steps");
  double r2[kMaxTerms];
  for (std::size_t j = 0; j < nt; ++j) r2[j] = kernel.terms[j].radius * kernel.terms[j].radius;
  std::int64_t counts[kMaxTerms] = {};
  const bool capped = kernel.capped();
  // The cap is reached once the running sum hits it; counts only grow.
  bool saturated = false;
  each([&](std::span<const double> y) {
    if (saturated) return;
    const double d2 = squared_distance(x, y);
    if (d2 > r2[nt - 1]) return;
    for (std::size_t j = 0; j < nt; ++j) {
      if (d2 <= r2[j]) ++counts[j];
    }
    if (capped && kernel.combine(counts) >= kernel.cap) saturated = true;
  });
  return saturated ? kernel.cap : kernel.combine(counts);
}

}  // namespace

GridIndex::GridIndex(int dimension, double cell_size) : dim_(dimension), cell_(cell_size) {
  if (dimension < 1 || dimension > kMaxDimension) throw std::invalid_argument("GridIndex: bad dimension");
  if (!(cell_size > 0.0)) throw std::invalid_argument("GridIndex: cell size must be positive");
}

std::int64_t GridIndex::cell_coord(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }

std::uint64_t GridIndex::pack(const std::int64_t* c, int dim) {
  std::uint64_t k = 0;
  const int bits = 64 / dim;
  const std::uint64_t mask = bits == 64 ? ~0ull : ((1ull << bits) - 1);
  for (int i = 0; i < dim; ++i) k = (k << bits) | (static_cast<std::uint64_t>(c[i]) & mask);
  return k;
}

std::uint64_t GridIndex::key_of(std::span<const double> x) const {
  std::int64_t c[kMaxDimension] = {};
  for (int i = 0; i < dim_; ++i) c[i] = cell_coord(x[static_cast<std::size_t>(i)]);
  return pack(c, dim_);
}

std::size_t GridIndex::insert(std::span<const double> x) {
  const std::size_t idx = size();
  coords_.insert(coords_.end(), x.begin(), x.begin() + dim_);
  cells_[key_of(x)].push_back(static_cast<std::uint32_t>(idx));
  return idx;
}

void GridIndex::insert_all(const Configuration& c) {
  for (std::size_t i = 0; i < c.size(); ++i) insert(c.point(i));
}

double GridIndex::rate(const BallSum& kernel, std::span<const double> x) const {
  return rate_from_candidates(kernel, x, [&](auto&& visit) {
    for_each_candidate(x, [&](std::size_t i) { visit(point(i)); });
  });
}

double brute_force_rate(const BallSum& kernel, std::span<const double> x, const Configuration& c) {
  return rate_from_candidates(kernel, x, [&](auto&& visit) {
    for (std::size_t i = 0; i < c.size(); ++i) visit(c.point(i));
  });
}

}  // namespace birthsim

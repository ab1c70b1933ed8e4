#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

namespace birthsim {

// Fenwick tree over nonnegative doubles, growable by appending.
class Fenwick {
 public:
  Fenwick() = default;
  explicit Fenwick(std::vector<double> values) : values_(std::move(values)) {
    rebuild(std::max<std::size_t>(1024, std::bit_ceil(values_.size())));
  }

  std::size_t size() const { return values_.size(); }
  double total() const { return total_; }

  std::size_t append(double v) {
    values_.push_back(0.0);
    if (values_.size() > tree_.size()) rebuild(std::max<std::size_t>(1024, tree_.size() * 2));
    const std::size_t i = values_.size() - 1;
    add(i, v);
    return i;
  }

  void set(std::size_t i, double v) { add(i, v - values_[i]); }

  // First index whose inclusive prefix sum exceeds target.
  std::size_t find(double target) const {
    std::size_t pos = 0;
    for (std::size_t step = std::bit_floor(tree_.size()); step; step >>= 1) {
      if (pos + step <= tree_.size() && tree_[pos + step - 1] <= target) {
        pos += step;
        target -= tree_[pos - 1];
      }
    }
    return std::min(pos, values_.size() - 1);
  }

  double value(std::size_t i) const { return values_[i]; }

 private:
  void add(std::size_t i, double delta) {
    values_[i] += delta;
    total_ += delta;
    for (std::size_t j = i + 1; j <= tree_.size(); j += j & (~j + 1)) tree_[j - 1] += delta;
    if (++updates_ >= (1u << 20)) rebuild(tree_.size());
  }

  void rebuild(std::size_t capacity) {
    tree_.assign(capacity, 0.0);
    double s = 0.0;
    for (std::size_t i = 0; i < capacity; ++i) {
      if (i < values_.size()) {
        tree_[i] += values_[i];
        s += values_[i];
      }
      const std::size_t parent = (i + 1) + ((i + 1) & (~(i + 1) + 1));
      if (parent <= capacity) tree_[parent - 1] += tree_[i];
    }
    total_ = s;
    updates_ = 0;
  }

  std::vector<double> values_;
  std::vector<double> tree_;
  double total_ = 0.0;
  std::uint32_t updates_ = 0;
};

}  // namespace birthsim

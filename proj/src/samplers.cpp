#include "birthsim/samplers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "birthsim/fenwick.hpp"
#include "birthsim/grid_index.hpp"

namespace birthsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Piecewise-constant profile b(., eta) in 1D, stored as segment start -> level.
// Levels are already capped, so a saturated stretch is one segment and births
// inside it cost a lookup.
class IntervalProfileSampler final : public BirthSampler {
 public:
  IntervalProfileSampler(BallSum k, const Configuration& init) : k_(std::move(k)) {
    seg_.emplace(-kInf, 0.0);
    for (std::size_t i = 0; i < init.size(); ++i) commit(make_vec(init.point(i)));
  }

  int dimension() const override { return 1; }
  std::size_t size() const override { return n_; }

  double rate(std::span<const double> x) const override {
    auto it = seg_.upper_bound(x[0]);
    --it;
    return it->second;
  }

  Birth next(CounterRng& rng) override {
    if (!(total_ > 0.0)) return {kInf, {}};
    ++proposals_;
    const double dt = rng.exponential(total_);
    const double target = rng.uniform() * total_;
    double cum = 0.0;
    double x = 0.0;
    bool found = false;
    for (auto it = std::next(seg_.begin()); it != seg_.end(); ++it) {
      const auto nx = std::next(it);
      if (nx == seg_.end()) break;
      const double len = nx->first - it->first;
      const double piece = it->second * len;
      if (piece <= 0.0) continue;
      if (cum + piece > target) {
        x = it->first + std::min(len, (target - cum) / it->second);
        // Stay on the half-open segment [start, next).
        if (x >= nx->first) x = std::nextafter(nx->first, -kInf);
        found = true;
        break;
      }
      cum += piece;
      x = std::nextafter(nx->first, -kInf);
    }
    if (!found && !(cum > 0.0)) throw std::logic_error("interval sampler: empty profile with positive total");
    Vec v{};
    v[0] = x;
    return {dt, v};
  }

  void commit(const Vec& x) override {
    for (const auto& t : k_.terms) add_interval(x[0] - t.radius, x[0] + t.radius, t.weight);
    ++n_;
    if (++since_recompute_ >= 4096) recompute_total();
  }

 private:
  void split_at(double x) {
    auto it = seg_.upper_bound(x);
    auto prev = std::prev(it);
    if (prev->first != x) seg_.emplace_hint(it, x, prev->second);
  }

  void add_interval(double a, double b, double w) {
    {
      auto it = std::prev(seg_.upper_bound(a));
      auto nx = std::next(it);
      if (it->second >= k_.cap && (nx == seg_.end() || nx->first >= b)) return;
    }
    split_at(a);
    split_at(b);
    auto first = seg_.find(a);
    auto last = seg_.find(b);
    for (auto it = first; it != last; ++it) {
      const double old = it->second;
      if (old >= k_.cap) continue;
      const double now = std::min(k_.cap, old + w);
      total_ += (now - old) * (std::next(it)->first - it->first);
      it->second = now;
    }
    // Merge equal neighbours across the touched range.
    auto it = first == seg_.begin() ? first : std::prev(first);
    while (it != seg_.end()) {
      auto nx = std::next(it);
      if (nx == seg_.end()) break;
      if (nx->second == it->second) {
        const bool at_end = nx->first >= b;
        seg_.erase(nx);
        if (at_end) break;
        continue;
      }
      if (nx->first > b) break;
      it = nx;
    }
  }

  void recompute_total() {
    double s = 0.0;
    for (auto it = seg_.begin(); it != seg_.end(); ++it) {
      auto nx = std::next(it);
      if (nx == seg_.end()) break;
      if (it->second > 0.0) s += it->second * (nx->first - it->first);
    }
    total_ = s;
    since_recompute_ = 0;
  }

  BallSum k_;
  std::map<double, double> seg_;
  double total_ = 0.0;
  std::size_t n_ = 0;
  std::uint32_t since_recompute_ = 0;
};

// 2D thinning sampler: square cells of side range/4 carry an upper bound of
// b over the cell; cells whose lower bound already reaches the cap accept
// every proposal without a rate evaluation.
class CellEnvelopeSampler final : public BirthSampler {
 public:
  CellEnvelopeSampler(BallSum k, const Configuration& init)
      : k_(std::move(k)), h_(k_.range() / 4.0), half_diag_(h_ * std::numbers::sqrt2 / 2.0), grid_(2, k_.range()) {
    for (std::size_t i = 0; i < init.size(); ++i) commit(make_vec(init.point(i)));
  }

  int dimension() const override { return 2; }
  std::size_t size() const override { return grid_.size(); }
  double rate(std::span<const double> x) const override { return grid_.rate(k_, x); }

  Birth next(CounterRng& rng) override {
    double dt = 0.0;
    while (true) {
      const double total = fen_.total();
      if (!(total > 0.0)) return {kInf, {}};
      dt += rng.exponential(total);
      ++proposals_;
      const std::size_t c = fen_.find(rng.uniform() * total);
      Vec x{};
      x[0] = (static_cast<double>(cx_[c]) + rng.uniform()) * h_;
      x[1] = (static_cast<double>(cy_[c]) + rng.uniform()) * h_;
      const double env = envelope(c);
      const double u = rng.uniform() * env;
      if (lower_[c] >= k_.cap) return {dt, x};
      if (env <= 0.0) continue;
      const double b = grid_.rate(k_, std::span<const double>(x.data(), 2));
      if (b > env * (1.0 + 1e-12)) throw std::logic_error("cell sampler: rate exceeds its envelope");
      if (u < b) return {dt, x};
    }
  }

  void commit(const Vec& y) override {
    grid_.insert(std::span<const double>(y.data(), 2));
    const double reach = k_.range() + half_diag_;
    const auto ix0 = static_cast<std::int64_t>(std::floor((y[0] - reach) / h_));
    const auto ix1 = static_cast<std::int64_t>(std::floor((y[0] + reach) / h_));
    const auto iy0 = static_cast<std::int64_t>(std::floor((y[1] - reach) / h_));
    const auto iy1 = static_cast<std::int64_t>(std::floor((y[1] + reach) / h_));
    const double area = h_ * h_;
    for (std::int64_t ix = ix0; ix <= ix1; ++ix) {
      for (std::int64_t iy = iy0; iy <= iy1; ++iy) {
        const double dx = (static_cast<double>(ix) + 0.5) * h_ - y[0];
        const double dy = (static_cast<double>(iy) + 0.5) * h_ - y[1];
        const double dc = std::sqrt(dx * dx + dy * dy);
        if (dc > reach) continue;
        const std::size_t c = cell(ix, iy);
        if (lower_[c] >= k_.cap) continue;
        for (const auto& t : k_.terms) {
          if (dc <= t.radius + half_diag_) upper_[c] += t.weight;
          if (dc + half_diag_ <= t.radius) lower_[c] += t.weight;
        }
        fen_.set(c, envelope(c) * area);
      }
    }
  }

 private:
  double envelope(std::size_t c) const {
    return lower_[c] >= k_.cap ? k_.cap : std::min(k_.cap, upper_[c]);
  }

  std::size_t cell(std::int64_t ix, std::int64_t iy) {
    const std::uint64_t key = (static_cast<std::uint64_t>(ix) << 32) ^ (static_cast<std::uint64_t>(iy) & 0xFFFFFFFFull);
    auto [it, fresh] = cell_of_.emplace(key, 0);
    if (fresh) {
      it->second = fen_.append(0.0);
      cx_.push_back(ix);
      cy_.push_back(iy);
      upper_.push_back(0.0);
      lower_.push_back(0.0);
    }
    return it->second;
  }

  BallSum k_;
  double h_;
  double half_diag_;
  GridIndex grid_;
  Fenwick fen_;
  std::unordered_map<std::uint64_t, std::size_t> cell_of_;
  std::vector<std::int64_t> cx_, cy_;
  std::vector<double> upper_, lower_;
};

// Offspring proposal: uniform parent, displacement drawn from the
// normalised single-particle profile. Exact for uncapped kernels; capped
// kernels thin each proposal with probability (k ^ S(x)) / S(x).
class MixtureSampler final : public BirthSampler {
 public:
  MixtureSampler(BallSum k, int dimension, const Configuration& init)
      : k_(std::move(k)), uncapped_{k_.terms, kInf}, d_(dimension), grid_(dimension, k_.range()) {
    if (d_ > 2) throw std::invalid_argument("mixture sampler: d <= 2 only");
    mass_ = k_.single_particle_mass(d_);
    double cum = 0.0;
    for (const auto& t : k_.terms) {
      cum += t.weight * ball_volume(d_, t.radius);
      term_cdf_.push_back(cum / mass_);
    }
    for (std::size_t i = 0; i < init.size(); ++i) commit(make_vec(init.point(i)));
  }

  int dimension() const override { return d_; }
  std::size_t size() const override { return grid_.size(); }
  double rate(std::span<const double> x) const override { return grid_.rate(k_, x); }

  Birth next(CounterRng& rng) override {
    double dt = 0.0;
    while (true) {
      const std::size_t n = grid_.size();
      if (n == 0) return {kInf, {}};
      dt += rng.exponential(static_cast<double>(n) * mass_);
      ++proposals_;
      const auto parent = grid_.point(rng.below(n));
      const double u = rng.uniform();
      std::size_t j = 0;
      while (j + 1 < term_cdf_.size() && u >= term_cdf_[j]) ++j;
      const double rho = k_.terms[j].radius;
      Vec x{};
      if (d_ == 1) {
        x[0] = parent[0] + rng.uniform(-rho, rho);
      } else {
        const double r = rho * std::sqrt(rng.uniform());
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        x[0] = parent[0] + r * std::cos(phi);
        x[1] = parent[1] + r * std::sin(phi);
      }
      if (!k_.capped()) return {dt, x};
      const double s = grid_.rate(uncapped_, std::span<const double>(x.data(), static_cast<std::size_t>(d_)));
      if (s <= k_.cap || rng.uniform() * s < k_.cap) return {dt, x};
    }
  }

  void commit(const Vec& x) override { grid_.insert(std::span<const double>(x.data(), static_cast<std::size_t>(d_))); }

 private:
  BallSum k_;
  BallSum uncapped_;
  int d_;
  GridIndex grid_;
  double mass_ = 0.0;
  std::vector<double> term_cdf_;
};

}  // namespace

SamplerKind default_sampler_kind(const BirthKernel& kernel, int dimension) {
  if (kernel.is_lattice()) throw std::invalid_argument("lattice kernels are simulated by the lattice module");
  if (!kernel.balls().capped()) return SamplerKind::mixture;
  return dimension == 1 ? SamplerKind::interval_profile : SamplerKind::cell_envelope;
}

std::unique_ptr<BirthSampler> make_sampler(const BirthKernel& kernel, const Configuration& initial, SamplerKind kind) {
  const int d = initial.dimension();
  if (d > 2) throw std::invalid_argument("simulation supports d = 1 or 2");
  if (kind == SamplerKind::automatic) kind = default_sampler_kind(kernel, d);
  const auto& balls = kernel.balls();
  switch (kind) {
    case SamplerKind::interval_profile:
      if (d != 1) throw std::invalid_argument("interval sampler needs d = 1");
      return std::make_unique<IntervalProfileSampler>(balls, initial);
    case SamplerKind::cell_envelope:
      if (d != 2) throw std::invalid_argument("cell sampler needs d = 2");
      return std::make_unique<CellEnvelopeSampler>(balls, initial);
    case SamplerKind::mixture:
      return std::make_unique<MixtureSampler>(balls, d, initial);
    case SamplerKind::automatic:
      break;
  }
  throw std::logic_error("unreachable sampler kind");
}

}  // namespace birthsim

#include "birthsim/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "birthsim/fenwick.hpp"
#include "birthsim/rng.hpp"

namespace birthsim {

namespace {

void check_lattice_args(double lambda, int dimension, double t_end) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (dimension != 1 && dimension != 2) throw std::invalid_argument("lattice growth supports d = 1 or 2");
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be >= 0");
}

int neighbours(const Site& s, int d, Site* out) {
  out[0] = {s[0] - 1, s[1]};
  out[1] = {s[0] + 1, s[1]};
  if (d == 1) return 2;
  out[2] = {s[0], s[1] - 1};
  out[3] = {s[0], s[1] + 1};
  return 4;
}

double advance(double t, double dt) {
  double tn = t + dt;
  if (!(tn > t)) tn = std::nextafter(t, std::numeric_limits<double>::infinity());
  return tn;
}

// Vector of sites with O(1) membership, insertion and removal.
class SiteSet {
 public:
  bool contains(const Site& s) const { return where_.count(s) != 0; }
  std::size_t size() const { return items_.size(); }
  const Site& operator[](std::size_t i) const { return items_[i]; }
  void insert(const Site& s) {
    if (where_.emplace(s, items_.size()).second) items_.push_back(s);
  }
  void erase_at(std::size_t i) {
    where_.erase(items_[i]);
    if (i + 1 != items_.size()) {
      items_[i] = items_.back();
      where_[items_[i]] = i;
    }
    items_.pop_back();
  }

 private:
  std::vector<Site> items_;
  std::unordered_map<Site, std::size_t, SiteHash> where_;
};

bool should_stop(const OccupationRecord& rec, const LatticeOptions& o, const Site& last) {
  if (o.stop_at && last == *o.stop_at) return true;
  return o.stop_after_events && rec.events >= o.stop_after_events;
}

}  // namespace

std::int64_t l1_norm(const Site& s) { return std::abs(s[0]) + std::abs(s[1]); }

std::int64_t LatticeState::total() const {
  std::int64_t n = 0;
  for (const auto& [s, c] : counts) n += c;
  return n;
}

std::int64_t LatticeState::count(const Site& s) const {
  auto it = counts.find(s);
  return it == counts.end() ? 0 : it->second;
}

void OccupationRecord::finalize() {
  index_.clear();
  index_.reserve(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) index_.emplace(sites[i], times[i]);
}

std::optional<double> OccupationRecord::first_occupation(const Site& s) const {
  if (index_.size() == sites.size()) {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i] == s) return times[i];
  }
  return std::nullopt;
}

bool OccupationRecord::occupied_at(const Site& s, double t) const {
  const auto v = first_occupation(s);
  return v && *v <= t;
}

std::size_t OccupationRecord::occupied_count_at(double t) const {
  return static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
}

OccupationRecord simulate_eden(double lambda, int dimension, double t_end, std::uint64_t seed,
                               const LatticeOptions& options) {
  check_lattice_args(lambda, dimension, t_end);
  CounterRng rng(seed, stream_id(options.replica, StreamPurpose::dynamics));
  OccupationRecord rec;
  rec.dimension = dimension;
  std::unordered_map<Site, double, SiteHash> occupied;
  SiteSet boundary;
  Site nb[4];
  auto occupy = [&](const Site& s, double t) {
    occupied.emplace(s, t);
    rec.sites.push_back(s);
    rec.times.push_back(t);
    const int n = neighbours(s, dimension, nb);
    for (int i = 0; i < n; ++i) {
      if (!occupied.count(nb[i])) boundary.insert(nb[i]);
    }
  };
  occupy({0, 0}, 0.0);
  double t = 0.0;
  bool stopped = options.stop_at && *options.stop_at == Site{0, 0};
  if (!stopped) {
    while (true) {
      const double tn = advance(t, rng.exponential(lambda * static_cast<double>(boundary.size())));
      if (tn > t_end) break;
      if (rec.events >= options.max_events) throw ExplosionError("explosion guard in Eden growth");
      t = tn;
      const std::size_t i = rng.below(boundary.size());
      const Site s = boundary[i];
      boundary.erase_at(i);
      occupy(s, t);
      ++rec.events;
      if ((stopped = should_stop(rec, options, s))) break;
    }
  }
  rec.t_end = stopped ? t : t_end;
  rec.finalize();
  return rec;
}

OccupancyRun simulate_occupancy_growth(double lambda, int dimension, double t_end, std::uint64_t seed,
                                       const LatticeOptions& options) {
  check_lattice_args(lambda, dimension, t_end);
  CounterRng rng(seed, stream_id(options.replica, StreamPurpose::dynamics));
  OccupancyRun run;
  run.state.dimension = dimension;
  run.record.dimension = dimension;
  SiteSet active;
  Site nb[4];
  auto add = [&](const Site& s, double t) {
    auto& c = run.state.counts[s];
    if (c++ > 0) return;
    run.record.sites.push_back(s);
    run.record.times.push_back(t);
    active.insert(s);
    const int n = neighbours(s, dimension, nb);
    for (int i = 0; i < n; ++i) active.insert(nb[i]);
  };
  add({0, 0}, 0.0);
  double t = 0.0;
  bool stopped = false;
  while (true) {
    const double tn = advance(t, rng.exponential(lambda * static_cast<double>(active.size())));
    if (tn > t_end) break;
    if (run.record.events >= options.max_events) throw ExplosionError("explosion guard in occupancy growth");
    t = tn;
    const Site s = active[rng.below(active.size())];
    add(s, t);
    ++run.record.events;
    if ((stopped = should_stop(run.record, options, s))) break;
  }
  run.state.time = stopped ? t : t_end;
  run.record.t_end = run.state.time;
  run.record.finalize();
  return run;
}

namespace {

// Dense near-field profile S_near(x) = sum_{|x-y| <= R0} alpha(y) a(x-y) on a
// growable window, with a Fenwick tree over k ^ S_near for site selection.
class NearField {
 public:
  NearField(std::vector<double> weights, double cap) : w_(std::move(weights)), cap_(cap) {
    r0_ = static_cast<std::int64_t>(w_.size() / 2);
  }

  double total() const { return fen_.total(); }
  std::int64_t site_of(std::size_t idx) const { return base_ + static_cast<std::int64_t>(idx); }
  std::size_t locate(double target) const { return fen_.find(target); }
  double capped_at(std::size_t idx) const { return fen_.value(idx); }

  double s_near(std::int64_t x) const {
    if (x < base_ || x >= base_ + static_cast<std::int64_t>(s_.size())) return 0.0;
    return s_[static_cast<std::size_t>(x - base_)];
  }

  void add_particle(std::int64_t y) {
    ensure(y - r0_, y + r0_);
    for (std::int64_t m = -r0_; m <= r0_; ++m) {
      const auto i = static_cast<std::size_t>(y + m - base_);
      s_[i] += w_[static_cast<std::size_t>(m + r0_)];
      fen_.set(i, std::min(cap_, s_[i]));
    }
  }

 private:
  void ensure(std::int64_t lo, std::int64_t hi) {
    const std::int64_t end = base_ + static_cast<std::int64_t>(s_.size());
    if (!s_.empty() && lo >= base_ && hi < end) return;
    std::int64_t new_lo = s_.empty() ? lo : std::min(lo, base_);
    std::int64_t new_hi = s_.empty() ? hi : std::max(hi, end - 1);
    const std::int64_t span = new_hi - new_lo + 1;
    new_lo -= span / 2;
    new_hi += span / 2;
    std::vector<double> s(static_cast<std::size_t>(new_hi - new_lo + 1), 0.0);
    for (std::size_t i = 0; i < s_.size(); ++i) s[static_cast<std::size_t>(base_ - new_lo) + i] = s_[i];
    s_ = std::move(s);
    base_ = new_lo;
    std::vector<double> capped(s_.size());
    for (std::size_t i = 0; i < s_.size(); ++i) capped[i] = std::min(cap_, s_[i]);
    fen_ = Fenwick(std::move(capped));
  }

  std::vector<double> w_;
  double cap_;
  std::int64_t r0_ = 0;
  std::int64_t base_ = 0;
  std::vector<double> s_;
  Fenwick fen_;
};

}  // namespace

PowerLawRun simulate_discrete_powerlaw(double alpha, double cap, double t_end, std::uint64_t seed,
                                       const LatticeOptions& options, EventSink* sink) {
  const BirthKernel kernel = BirthKernel::power_law(alpha, cap);
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be >= 0");
  const PowerLawTable& a = kernel.power_law_table();
  const std::int64_t r_max = a.truncation_radius();
  const std::int64_t r0 = std::min<std::int64_t>(r_max, 32);

  std::vector<double> near_w;
  for (std::int64_t m = -r0; m <= r0; ++m) near_w.push_back(a(m));
  // One-sided far offsets r0 < m <= r_max; the sign is a fair coin.
  std::vector<double> far_cdf;
  double far_one_side = 0.0;
  for (std::int64_t m = r0 + 1; m <= r_max; ++m) {
    far_one_side += a(m);
    far_cdf.push_back(far_one_side);
  }
  const double far_mass = 2.0 * far_one_side;

  CounterRng rng(seed, stream_id(options.replica, StreamPurpose::dynamics));
  PowerLawRun run;
  run.alpha = alpha;
  run.cap = cap;
  run.state.dimension = 1;
  run.record.dimension = 1;
  NearField near(near_w, cap);
  std::vector<std::int64_t> particles;
  std::map<std::int64_t, std::int64_t> occupied;

  auto far_sum_below = [&](std::int64_t x, double threshold) {
    // Sum over occupied y with r0 < |x - y| <= r_max; stops once it reaches threshold.
    double s = 0.0;
    auto visit = [&](std::map<std::int64_t, std::int64_t>::const_iterator lo,
                     std::map<std::int64_t, std::int64_t>::const_iterator hi) {
      for (auto it = lo; it != hi && s < threshold; ++it) s += static_cast<double>(it->second) * a(x - it->first);
    };
    visit(occupied.lower_bound(x - r_max), occupied.lower_bound(x - r0));
    visit(occupied.upper_bound(x + r0), occupied.upper_bound(x + r_max));
    return s < threshold;
  };

  auto birth = [&](std::int64_t x, double t) {
    auto& c = occupied[x];
    if (c++ == 0) {
      run.record.sites.push_back({x, 0});
      run.record.times.push_back(t);
    }
    particles.push_back(x);
    near.add_particle(x);
    if (sink && t > 0.0) {
      const double xd = static_cast<double>(x);
      sink->on_event(t, std::span<const double>(&xd, 1), EventOp::birth);
    }
  };
  birth(0, 0.0);

  double t = 0.0;
  while (true) {
    if (options.stop_after_events && run.record.events >= options.stop_after_events) break;
    const double near_total = near.total();
    const double far_total = far_mass * static_cast<double>(particles.size());
    const double total = near_total + far_total;
    const double tn = advance(t, rng.exponential(total));
    if (tn > t_end) break;
    if (run.record.events >= options.max_events) throw ExplosionError("explosion guard in power-law growth");
    t = tn;
    const double pick = rng.uniform() * total;
    std::int64_t x = 0;
    if (pick < near_total) {
      ++run.near_proposals;
      const std::size_t idx = near.locate(pick);
      if (!(near.capped_at(idx) > 0.0)) continue;
      x = near.site_of(idx);
    } else {
      ++run.far_proposals;
      const std::int64_t parent = particles[rng.below(particles.size())];
      const double u = rng.uniform() * far_one_side;
      const auto j = static_cast<std::int64_t>(std::upper_bound(far_cdf.begin(), far_cdf.end(), u) - far_cdf.begin());
      const std::int64_t m = r0 + 1 + std::min<std::int64_t>(j, static_cast<std::int64_t>(far_cdf.size()) - 1);
      x = rng.uniform() < 0.5 ? parent - m : parent + m;
      // Far intensity is S_far; the wanted increment is k ^ (S_near + S_far) - k ^ S_near.
      // Accept iff U * S_far < k - S_near.
      const double room = cap - near.s_near(x);
      if (!(room > 0.0)) continue;
      const double v = rng.uniform();
      if (v > 0.0 && !far_sum_below(x, room / v)) continue;
    }
    birth(x, t);
    ++run.record.events;
  }
  run.state.counts.clear();
  for (const auto& [s, c] : occupied) run.state.counts[{s, 0}] = c;
  run.state.time = options.stop_after_events && run.record.events >= options.stop_after_events ? t : t_end;
  run.record.t_end = run.state.time;
  run.record.finalize();
  return run;
}

double gap_fraction(const LatticeState& state) {
  if (state.dimension != 1) throw std::invalid_argument("gap fraction is defined for d = 1");
  if (state.counts.empty()) throw std::invalid_argument("gap fraction of an empty state");
  const std::int64_t lo = state.counts.begin()->first[0];
  const std::int64_t hi = state.counts.rbegin()->first[0];
  const double len = static_cast<double>(hi - lo + 1);
  return (len - static_cast<double>(state.counts.size())) / len;
}

Site lattice_cell(std::span<const double> x, double cell) {
  if (!(cell > 0.0)) throw std::invalid_argument("cell size must be positive");
  if (x.size() > 2) throw std::invalid_argument("lattice projection supports d <= 2");
  Site s{0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = static_cast<std::int64_t>(std::ceil(x[i] / cell - 0.5));
  return s;
}

LatticeState project_configuration(const Configuration& config, double cell) {
  LatticeState st;
  st.dimension = config.dimension();
  for (std::size_t i = 0; i < config.size(); ++i) ++st.counts[lattice_cell(config.point(i), cell)];
  return st;
}

LatticeState project_to_lattice(const EventLog& log, double cell, double t) {
  LatticeState st = project_configuration(log.initial(), cell);
  const std::size_t n = log.events_until(t);
  for (std::size_t i = 0; i < n; ++i) {
    const Site s = lattice_cell(log.position(i), cell);
    if (log.op(i) == EventOp::birth) {
      ++st.counts[s];
    } else if (--st.counts[s] == 0) {
      st.counts.erase(s);
    }
  }
  st.time = t;
  return st;
}

std::vector<LatticeState> project_to_lattice(const EventLog& log, double cell, const std::vector<double>& times) {
  std::vector<LatticeState> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(project_to_lattice(log, cell, t));
  return out;
}

LatticeState lattice_state_at(const EventLog& log, double t) { return project_to_lattice(log, 1.0, t); }

CellNeighbourTracker::CellNeighbourTracker(int dimension, double c0, double cell, const Configuration& initial)
    : dim_(dimension), c0_(c0), cell_(cell) {
  if (dimension != 1 && dimension != 2) throw std::invalid_argument("cell tracker supports d = 1 or 2");
  if (!(c0 > 0.0) || !(cell > 0.0)) throw std::invalid_argument("cell tracker needs c0 > 0 and cell > 0");
  for (std::size_t i = 0; i < initial.size(); ++i) ++counts_[lattice_cell(initial.point(i), cell_)];
}

double CellNeighbourTracker::rate(std::span<const double> x) const {
  const Site s = lattice_cell(x, cell_);
  if (counts_.count(s)) return c0_;
  Site nb[4];
  const int n = neighbours(s, dim_, nb);
  for (int i = 0; i < n; ++i) {
    if (counts_.count(nb[i])) return c0_;
  }
  return 0.0;
}

void CellNeighbourTracker::commit(const Vec& x) {
  ++counts_[lattice_cell(std::span<const double>(x.data(), static_cast<std::size_t>(dim_)), cell_)];
}

std::string CellNeighbourTracker::description() const {
  return "cell_neighbour:c0=" + format_double(c0_) + ",cell=" + format_double(cell_);
}

void write_occupation_csv(const OccupationRecord& record, std::ostream& out) {
  out << (record.dimension == 1 ? "site,first_occupation_time\n" : "site_x,site_y,first_occupation_time\n");
  for (std::size_t i = 0; i < record.sites.size(); ++i) {
    out << record.sites[i][0];
    if (record.dimension == 2) out << ',' << record.sites[i][1];
    out << ',' << format_double(record.times[i]) << '\n';
  }
}

EventLog occupation_log(const OccupationRecord& record, const std::string& model, std::uint64_t seed) {
  Configuration init(record.dimension);
  EventLog log(record.dimension, init);
  if (!record.sites.empty()) {
    std::vector<double> origin;
    for (int i = 0; i < record.dimension; ++i) origin.push_back(static_cast<double>(record.sites[0][static_cast<std::size_t>(i)]));
    Configuration c(record.dimension);
    c.add(origin);
    log = EventLog(record.dimension, c);
  }
  log.model = model;
  log.seed = seed;
  log.t_end = record.t_end;
  for (std::size_t i = 1; i < record.sites.size(); ++i) {
    std::vector<double> x;
    for (int j = 0; j < record.dimension; ++j) x.push_back(static_cast<double>(record.sites[i][static_cast<std::size_t>(j)]));
    log.append(record.times[i], x);
  }
  return log;
}

}  // namespace birthsim

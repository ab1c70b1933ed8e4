#include "birthsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "birthsim/grid_index.hpp"
#include "birthsim/rng.hpp"

namespace birthsim {

namespace {

void check_run_arguments(const BirthKernel& kernel, const Configuration& initial, double t_end) {
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("t_end must be finite and >= 0");
  if (initial.empty()) throw std::invalid_argument("initial configuration is empty");
  if (kernel.is_lattice()) throw std::invalid_argument("lattice kernels are simulated by the lattice module");
  if (initial.dimension() > 2) throw std::invalid_argument("simulation supports d = 1 or 2");
}

double advance(double t, double dt) {
  double tn = t + dt;
  if (!(tn > t)) tn = std::nextafter(t, std::numeric_limits<double>::infinity());
  return tn;
}

// on_birth(t, x, sampler) is called before the sampler commits x.
template <class OnBirth>
RunSummary run_birth_process(const BirthKernel& kernel, const Configuration& initial, double t_end,
                             std::uint64_t seed, const SimulationOptions& options, OnBirth&& on_birth) {
  check_run_arguments(kernel, initial, t_end);
  auto sampler = make_sampler(kernel, initial, options.sampler);
  CounterRng rng(seed, stream_id(options.replica, StreamPurpose::dynamics));
  RunSummary s;
  double t = 0.0;
  while (true) {
    if (options.max_size && sampler->size() >= options.max_size) {
      s.stopped_on_size = true;
      break;
    }
    const Birth b = sampler->next(rng);
    if (!std::isfinite(b.dt)) break;
    const double tn = advance(t, b.dt);
    if (tn > t_end) break;
    if (s.events >= options.max_events) {
      throw ExplosionError("explosion guard: more than " + std::to_string(options.max_events) + " events by t = " +
                           std::to_string(tn));
    }
    t = tn;
    on_birth(t, b.x, *sampler);
    sampler->commit(b.x);
    ++s.events;
  }
  s.t_last = t;
  s.final_size = sampler->size();
  s.proposals = sampler->proposals();
  return s;
}

class GridRateTracker final : public RateTracker {
 public:
  GridRateTracker(const BirthKernel& kernel, const Configuration& initial)
      : balls_(kernel.balls()), grid_(initial.dimension(), kernel.balls().range()) {
    grid_.insert_all(initial);
  }
  double rate(std::span<const double> x) const override { return grid_.rate(balls_, x); }
  void commit(const Vec& x) override {
    grid_.insert(std::span<const double>(x.data(), static_cast<std::size_t>(grid_.dimension())));
  }

 private:
  BallSum balls_;
  GridIndex grid_;
};

// 1D uncapped kernels: neighbour counts from a sorted coordinate array. The
// candidate window is widened by a few ulps and every candidate near its edge is
// re-tested with the squared-distance rule of GridIndex, so counts agree exactly.
class SortedLineTracker final : public RateTracker {
 public:
  SortedLineTracker(const BirthKernel& kernel, const Configuration& initial) : balls_(kernel.balls()) {
    for (std::size_t i = 0; i < initial.size(); ++i) xs_.push_back(initial.point(i)[0]);
    std::sort(xs_.begin(), xs_.end());
  }
  double rate(std::span<const double> x) const override {
    std::int64_t counts[16] = {};
    for (std::size_t j = 0; j < balls_.terms.size(); ++j) counts[j] = count_within(x[0], balls_.terms[j].radius);
    return balls_.combine(counts);
  }
  void commit(const Vec& x) override { xs_.insert(std::upper_bound(xs_.begin(), xs_.end(), x[0]), x[0]); }

 private:
  std::int64_t count_within(double x, double r) const {
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * (std::abs(x) + r);
    const double r2 = r * r;
    auto inside = [&](double y) { return (x - y) * (x - y) <= r2; };
    auto lo_outer = std::lower_bound(xs_.begin(), xs_.end(), x - r - slack);
    auto lo_inner = std::lower_bound(lo_outer, xs_.end(), x - r + slack);
    auto hi_inner = std::upper_bound(lo_inner, xs_.end(), x + r - slack);
    auto hi_outer = std::upper_bound(hi_inner, xs_.end(), x + r + slack);
    std::int64_t n = hi_inner - lo_inner;
    for (auto it = lo_outer; it != lo_inner; ++it) n += inside(*it);
    for (auto it = hi_inner; it != hi_outer; ++it) n += inside(*it);
    return n;
  }

  BallSum balls_;
  std::vector<double> xs_;
};

bool contains_all(const Configuration& big, const Configuration& small) {
  for (std::size_t i = 0; i < small.size(); ++i) {
    if (!big.contains(small.point(i))) return false;
  }
  return true;
}

}  // namespace

EventLog simulate(const BirthKernel& kernel, const Configuration& initial, double t_end, std::uint64_t seed,
                  const SimulationOptions& options) {
  EventLog log(initial.dimension(), initial);
  log.kernel = kernel.to_string();
  log.seed = seed;
  log.stream = stream_id(options.replica, StreamPurpose::dynamics);
  log.t_end = t_end;
  LogRecorder rec(log);
  simulate_streaming(kernel, initial, t_end, seed, rec, options);
  return log;
}

RunSummary simulate_streaming(const BirthKernel& kernel, const Configuration& initial, double t_end,
                              std::uint64_t seed, EventSink& sink, const SimulationOptions& options) {
  const auto d = static_cast<std::size_t>(initial.dimension());
  return run_birth_process(kernel, initial, t_end, seed, options, [&](double t, const Vec& x, BirthSampler&) {
    sink.on_event(t, std::span<const double>(x.data(), d), EventOp::birth);
  });
}

std::unique_ptr<RateTracker> make_rate_tracker(const BirthKernel& kernel, const Configuration& initial) {
  if (kernel.is_lattice()) throw std::invalid_argument("rate tracker: continuum kernels only");
  if (initial.dimension() == 1 && !kernel.balls().capped() && kernel.balls().terms.size() <= 16) {
    return std::make_unique<SortedLineTracker>(kernel, initial);
  }
  return std::make_unique<GridRateTracker>(kernel, initial);
}

CoupledRun simulate_dominated(RateTracker& lo, const std::string& lo_description, const BirthKernel& kernel_hi,
                              const Configuration& initial_lo, const Configuration& initial_hi, double t_end,
                              std::uint64_t seed, const CouplingOptions& options) {
  if (initial_lo.dimension() != initial_hi.dimension()) throw std::invalid_argument("coupling: dimension mismatch");
  if (initial_lo.empty()) throw std::invalid_argument("coupling: empty lo configuration");
  const auto d = static_cast<std::size_t>(initial_hi.dimension());
  CoupledRun run{EventLog(initial_lo.dimension(), initial_lo), EventLog(initial_hi.dimension(), initial_hi), {}};
  const std::uint64_t dyn = stream_id(options.sim.replica, StreamPurpose::dynamics);
  run.hi.kernel = kernel_hi.to_string();
  run.lo.kernel = lo_description;
  run.hi.seed = run.lo.seed = seed;
  run.hi.stream = run.lo.stream = dyn;
  run.hi.t_end = run.lo.t_end = t_end;

  auto hi_rate = make_rate_tracker(kernel_hi, initial_hi);
  CounterRng marks(seed, stream_id(options.sim.replica, StreamPurpose::coupling_marks));
  Configuration hi_points = initial_hi;
  bool active = false;
  auto activate = [&] {
    if (!contains_all(hi_points, initial_lo)) {
      throw std::invalid_argument("coupling: lo initial configuration is not contained in the hi configuration");
    }
    active = true;
  };
  if (options.lo_start <= 0.0) activate();

  run_birth_process(kernel_hi, initial_hi, t_end, seed, options.sim, [&](double t, const Vec& x, BirthSampler&) {
    const std::span<const double> xs(x.data(), d);
    const double u = marks.uniform();
    if (!active && t > options.lo_start) activate();
    if (!active) {
      hi_points.add(xs);
    } else {
      const double b_hi = hi_rate->rate(xs);
      const double b_lo = lo.rate(xs);
      ++run.stats.rate_checks;
      if (b_lo > b_hi * (1.0 + 1e-12)) {
        ++run.stats.order_violations;
        if (options.strict) {
          throw CouplingError("coupling: b_lo = " + format_double(b_lo) + " exceeds b_hi = " + format_double(b_hi) +
                              " at t = " + format_double(t));
        }
      }
      if (u * b_hi < b_lo) {
        lo.commit(x);
        run.lo.append(t, xs);
      }
    }
    hi_rate->commit(x);
    run.hi.append(t, xs);
  });
  if (!active) activate();
  return run;
}

CoupledRun simulate_coupled(const BirthKernel& kernel_lo, const BirthKernel& kernel_hi,
                            const Configuration& initial_lo, const Configuration& initial_hi, double t_end,
                            std::uint64_t seed, const CouplingOptions& options) {
  auto lo = make_rate_tracker(kernel_lo, initial_lo);
  return simulate_dominated(*lo, kernel_lo.to_string(), kernel_hi, initial_lo, initial_hi, t_end, seed, options);
}

RunSummary simulate_restricted_brw(std::size_t n_cap, double t_end, std::uint64_t seed, EventSink& sink,
                                   const SimulationOptions& options) {
  if (n_cap < 1) throw std::invalid_argument("n_cap must be >= 1");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("t_end must be finite and >= 0");
  CounterRng rng(seed, stream_id(options.replica, StreamPurpose::dynamics));
  std::vector<double> pos{0.0};
  using Slot = std::pair<double, std::size_t>;
  std::priority_queue<Slot, std::vector<Slot>, std::greater<>> leftmost;
  leftmost.emplace(0.0, 0);
  RunSummary s;
  double t = 0.0;
  while (true) {
    const std::size_t n = pos.size();
    const double tn = advance(t, rng.exponential(2.0 * static_cast<double>(n)));
    if (tn > t_end) break;
    if (s.events >= options.max_events) throw ExplosionError("explosion guard in restricted BRW");
    t = tn;
    const double x = pos[rng.below(n)] + rng.uniform(-1.0, 1.0);
    ++s.proposals;
    sink.on_event(t, std::span<const double>(&x, 1), EventOp::birth);
    ++s.events;
    if (n < n_cap) {
      leftmost.emplace(x, n);
      pos.push_back(x);
      continue;
    }
    const Slot top = leftmost.top();
    if (x < top.first) {
      sink.on_event(t, std::span<const double>(&x, 1), EventOp::remove);
    } else {
      leftmost.pop();
      sink.on_event(t, std::span<const double>(&top.first, 1), EventOp::remove);
      pos[top.second] = x;
      leftmost.emplace(x, top.second);
    }
    ++s.events;
  }
  s.t_last = t;
  s.final_size = pos.size();
  return s;
}

EventLog simulate_restricted_brw(std::size_t n_cap, double t_end, std::uint64_t seed,
                                 const SimulationOptions& options) {
  EventLog log(1, Configuration(1, {0.0}));
  log.kernel = BirthKernel::free(1.0).to_string();
  log.model = "restricted_brw:n_cap=" + std::to_string(n_cap);
  log.seed = seed;
  log.stream = stream_id(options.replica, StreamPurpose::dynamics);
  log.t_end = t_end;
  LogRecorder rec(log);
  simulate_restricted_brw(n_cap, t_end, seed, rec, options);
  return log;
}

}  // namespace birthsim

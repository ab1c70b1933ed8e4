#include "birthsim/analytics.hpp"

#include <algorithm>
#include <cmath>

#include "birthsim/gap_density.hpp"
#include "birthsim/stats.hpp"

namespace birthsim {

namespace {

void check_window(double window_fraction) {
  if (!(window_fraction > 0.0 && window_fraction < 1.0)) {
    throw std::invalid_argument("window_fraction must lie in (0, 1)");
  }
}

SpeedEstimate pool(std::vector<double> slopes, double t_lo, double t_hi) {
  const MeanSe m = mean_se(slopes);
  SpeedEstimate e;
  e.slope = m.mean;
  e.std_error = m.se;
  e.t_lo = t_lo;
  e.t_hi = t_hi;
  e.replicas = slopes.size();
  e.per_replica = std::move(slopes);
  return e;
}

double distance(const Vec& a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double norm(const Vec& a, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += a[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i)];
  return std::sqrt(s);
}

}  // namespace

double window_slope(const FrontSeries& front, double window_fraction) {
  check_window(window_fraction);
  const double t_hi = front.t_end;
  const double t_lo = t_hi * (1.0 - window_fraction);
  std::vector<double> ts{t_lo}, vs{front.at(t_lo)};
  std::size_t changes = 0;
  for (std::size_t i = 1; i < front.times.size(); ++i) {
    if (front.times[i] > t_lo && front.times[i] <= t_hi) {
      ts.push_back(front.times[i]);
      vs.push_back(front.values[i]);
      ++changes;
    }
  }
  if (changes < kMinWindowEvents) {
    throw InsufficientDataError("speed window [" + format_double(t_lo) + ", " + format_double(t_hi) + "] holds " +
                                std::to_string(changes) + " front changes, need " +
                                std::to_string(kMinWindowEvents));
  }
  return least_squares(ts, vs).slope;
}

SpeedEstimate estimate_speed(const std::vector<FrontSeries>& fronts, double window_fraction) {
  check_window(window_fraction);
  if (fronts.empty()) throw std::invalid_argument("estimate_speed: no fronts");
  std::vector<double> slopes;
  for (const auto& f : fronts) slopes.push_back(window_slope(f, window_fraction));
  const double t_hi = fronts.front().t_end;
  return pool(std::move(slopes), t_hi * (1.0 - window_fraction), t_hi);
}

SpeedEstimate estimate_speed(const std::vector<EventLog>& logs, Vec direction, double window_fraction) {
  std::vector<FrontSeries> fronts;
  for (const auto& log : logs) fronts.push_back(front_series(log, direction));
  return estimate_speed(fronts, window_fraction);
}

SpeedEstimate measure_speed(const BirthKernel& kernel, const Configuration& initial, std::size_t replicas,
                            double t_end, std::uint64_t seed, const SpeedRunOptions& options) {
  check_window(options.window_fraction);
  if (replicas < 1) throw std::invalid_argument("measure_speed: replicas must be >= 1");
  const bool two = options.both_sides && initial.dimension() == 1;
  auto slopes = replica_map(replicas, [&](std::size_t r) {
    SimulationOptions sim = options.sim;
    sim.replica = r;
    FrontTracker right(initial, Vec{1.0, 0.0, 0.0});
    FrontTracker left(initial, Vec{-1.0, 0.0, 0.0});
    if (two) {
      TeeSink both(right, left);
      simulate_streaming(kernel, initial, t_end, seed, both, sim);
      return 0.5 * (window_slope(right.finish(t_end), options.window_fraction) +
                    window_slope(left.finish(t_end), options.window_fraction));
    }
    simulate_streaming(kernel, initial, t_end, seed, right, sim);
    return window_slope(right.finish(t_end), options.window_fraction);
  });
  return pool(std::move(slopes), t_end * (1.0 - options.window_fraction), t_end);
}

SpeedEstimate measure_restricted_brw_speed(std::size_t n_cap, std::size_t replicas, double t_end, std::uint64_t seed,
                                           double window_fraction) {
  check_window(window_fraction);
  if (replicas < 1) throw std::invalid_argument("measure_restricted_brw_speed: replicas must be >= 1");
  auto slopes = replica_map(replicas, [&](std::size_t r) {
    SimulationOptions sim;
    sim.replica = r;
    FrontTracker right(Configuration(1, {0.0}), Vec{1.0, 0.0, 0.0}, true);
    simulate_restricted_brw(n_cap, t_end, seed, right, sim);
    return window_slope(right.finish(t_end), window_fraction);
  });
  return pool(std::move(slopes), t_end * (1.0 - window_fraction), t_end);
}

std::vector<HittingRecord> hitting_times(const EventLog& log, const std::vector<HittingTarget>& targets) {
  const int d = log.dimension();
  std::vector<HittingRecord> out;
  std::vector<double> radius;
  for (const auto& tg : targets) {
    if (!(tg.lambda > 0.0 && tg.lambda < 1.0)) throw std::invalid_argument("hitting_times: lambda must lie in (0, 1)");
    const double nx = norm(tg.x, d);
    if (!(nx > 0.0)) throw std::invalid_argument("hitting_times: target x must be nonzero");
    out.push_back({tg.x, tg.lambda, kUnreached});
    radius.push_back(tg.lambda * nx);
  }
  std::size_t open = out.size();
  auto visit = [&](double t, std::span<const double> p) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!out[i].reached() && distance(out[i].x, p) <= radius[i]) {
        out[i].T = t;
        --open;
      }
    }
  };
  for (std::size_t i = 0; i < log.initial().size() && open; ++i) visit(0.0, log.initial().point(i));
  for (std::size_t i = 0; i < log.size() && open; ++i) {
    if (log.op(i) == EventOp::birth) visit(log.time(i), log.position(i));
  }
  return out;
}

BallEntry first_entry(const EventLog& log, Vec center, double radius, double t_from) {
  auto inside = [&](std::span<const double> p) { return distance(center, p) <= radius; };
  for (std::size_t i = 0; i < log.initial().size(); ++i) {
    if (inside(log.initial().point(i))) return {t_from, make_vec(log.initial().point(i))};
  }
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log.op(i) != EventOp::birth || !inside(log.position(i))) continue;
    return {std::max(t_from, log.time(i)), make_vec(log.position(i))};
  }
  return {kUnreached, {}};
}

SubadditiveSeries subadditive_ratios(const std::vector<HittingRecord>& records) {
  if (records.size() < 8) throw std::invalid_argument("subadditive_ratios: need N >= 8");
  SubadditiveSeries s;
  for (std::size_t i = 0; i < records.size(); ++i) {
    s.n.push_back(i + 1);
    s.ratio.push_back(records[i].T / static_cast<double>(i + 1));
  }
  for (std::size_t n = 1; 2 * n <= records.size(); ++n) {
    const double a = s.ratio[n - 1];
    const double b = s.ratio[2 * n - 1];
    s.stabilization.push_back(std::isfinite(a) && std::isfinite(b) && a != 0.0 ? std::abs(b - a) / a : kUnreached);
  }
  return s;
}

SuperadditivityReport superadditivity_experiment(const std::optional<BirthKernel>& b1,
                                                 const std::optional<BirthKernel>& b2, std::size_t replicas,
                                                 double t_end, std::uint64_t seed, const SpeedRunOptions& options) {
  if (!b1 && !b2) throw std::invalid_argument("superadditivity: at least one kernel must be nonzero");
  const Configuration origin(1, {0.0});
  auto speed = [&](const std::optional<BirthKernel>& k) {
    if (!k) {
      SpeedEstimate z;
      z.replicas = replicas;
      z.t_hi = t_end;
      z.t_lo = t_end * (1.0 - options.window_fraction);
      z.per_replica.assign(replicas, 0.0);
      return z;
    }
    return measure_speed(*k, origin, replicas, t_end, seed, options);
  };
  SuperadditivityReport r;
  r.s1 = speed(b1);
  r.s2 = speed(b2);
  const BirthKernel sum = b1 && b2 ? kernel_sum(*b1, *b2) : (b1 ? *b1 : *b2);
  r.kernel_sum = sum.to_string();
  // Identical seeds make s(b) and s(b + 0) the same estimate.
  r.s12 = measure_speed(sum, origin, replicas, t_end, seed, options);
  r.lhs = r.s1.slope + r.s2.slope;
  r.rhs = r.s12.slope;
  r.pooled_se = std::sqrt(r.s1.std_error * r.s1.std_error + r.s2.std_error * r.s2.std_error +
                          r.s12.std_error * r.s12.std_error);
  r.holds = r.lhs <= r.rhs + 3.0 * r.pooled_se;
  return r;
}

OccupationReport gap_occupation_vs_g(const GapTrajectory& tr, int bins) {
  if (bins < 1) throw std::invalid_argument("gap_occupation_vs_g: bins must be >= 1");
  if (!(tr.t_end >= 1e3)) throw std::invalid_argument("gap_occupation_vs_g: trajectory shorter than 1e3");
  OccupationReport r;
  std::vector<double> time(static_cast<std::size_t>(bins), 0.0);
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double end = i + 1 < tr.times.size() ? tr.times[i + 1] : tr.t_end;
    const double dt = std::max(0.0, std::min(end, tr.t_end) - tr.times[i]);
    const auto b = std::min(static_cast<std::size_t>(bins - 1), static_cast<std::size_t>(tr.z[i] * bins));
    time[b] += dt;
  }
  double total = 0.0;
  for (double v : time) total += v;
  r.total_time = total;
  for (int b = 0; b < bins; ++b) {
    const double lo = static_cast<double>(b) / bins;
    const double hi = b + 1 == bins ? 1.0 : static_cast<double>(b + 1) / bins;
    const double occ = time[static_cast<std::size_t>(b)] / total;
    const double gm = integrate(invariant_density, lo, hi);
    r.bin_lo.push_back(lo);
    r.bin_hi.push_back(hi);
    r.occupation.push_back(occ);
    r.g_mass.push_back(gm);
    const double diff = std::abs(occ - gm);
    r.sup_norm = std::max(r.sup_norm, diff);
    r.sup_density_gap = std::max(r.sup_density_gap, diff / (hi - lo));
    r.chi_square += diff * diff / gm;
  }
  return r;
}

}  // namespace birthsim

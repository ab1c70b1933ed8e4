#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "birthsim/engine.hpp"
#include "birthsim/rates.hpp"
#include "birthsim/reduced.hpp"
#include "birthsim/samplers.hpp"
#include "birthsim/stats.hpp"

using namespace birthsim;

namespace {

const BirthKernel k2 = BirthKernel::truncated(2.0, 1.0);
const Configuration origin1(1, {0.0});

std::vector<double> waiting_times(BirthSampler& s, CounterRng& rng, std::size_t n, std::vector<Vec>* at = nullptr) {
  std::vector<double> w(n);
  for (auto& v : w) {
    const Birth b = s.next(rng);
    v = b.dt;
    if (at) at->push_back(b.x);
  }
  return w;
}

bool same_point(std::span<const double> a, std::span<const double> b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

// Replays a log with removals and checks |eta| after every event group.
std::vector<std::size_t> population_after_each_birth(const EventLog& log) {
  std::vector<std::size_t> pop;
  std::size_t n = log.initial().size();
  for (std::size_t i = 0; i < log.size(); ++i) {
    n += log.op(i) == EventOp::birth ? 1 : 0;
    n -= log.op(i) == EventOp::remove ? 1 : 0;
    if (i + 1 == log.size() || log.op(i + 1) == EventOp::birth) pop.push_back(n);
  }
  return pop;
}

}  // namespace

TEST_CASE("simulate argument contract") {
  CHECK_THROWS_AS(simulate(k2, origin1, -1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(simulate(k2, Configuration(1), 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(simulate(BirthKernel::power_law(3.0, 1.0), origin1, 1.0, 1), std::invalid_argument);
  CHECK(simulate(k2, origin1, 0.0, 1).empty());
  SimulationOptions opt;
  opt.max_events = 100;
  CHECK_THROWS_AS(simulate(k2, origin1, 1e6, 1, opt), ExplosionError);
}

TEST_CASE("runs are deterministic in the seed") {
  for (const Configuration& init : {origin1, Configuration(2, {0.0, 0.0})}) {
    const BirthKernel k = init.dimension() == 1 ? k2 : BirthKernel::truncated(5.0, 1.0);
    const EventLog a = simulate(k, init, 8.0, 123);
    const EventLog b = simulate(k, init, 8.0, 123);
    const EventLog c = simulate(k, init, 8.0, 124);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(a.size() > 10);
  }
}

TEST_CASE("log invariants: strictly increasing times, only births, replay") {
  const EventLog log = simulate(k2, origin1, 30.0, 9);
  REQUIRE(log.size() > 0);
  CHECK(log.time(0) > 0.0);
  for (std::size_t i = 1; i < log.size(); ++i) REQUIRE(log.time(i) > log.time(i - 1));
  CHECK(log.births() == log.size());
  CHECK(log.time(log.size() - 1) <= 30.0);
  const double mid = log.time(log.size() / 2);
  const Configuration c = log.configuration_at(mid);
  CHECK(c.size() == 1 + log.size() / 2 + 1);
  const Configuration earlier = log.configuration_at(mid / 2);
  for (std::size_t i = 0; i < earlier.size(); ++i) CHECK(c.contains(earlier.point(i)));
}

TEST_CASE("first event time has mean 1/2 for k = 2 from one particle") {
  SimulationOptions opt;
  opt.max_size = 2;
  double sum = 0.0;
  const int n = 100000;
  for (int r = 0; r < n; ++r) {
    opt.replica = static_cast<std::uint64_t>(r);
    NullSink sink;
    const RunSummary s = simulate_streaming(k2, origin1, 1e9, 77, sink, opt);
    REQUIRE(s.events == 1);
    sum += s.t_last;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("free branching population follows the Yule mean e^{2t}") {
  const BirthKernel free = BirthKernel::free(1.0);
  const int n = 10000;
  for (double t : {0.1, 0.2}) {
    std::vector<double> sizes(n);
    for (int r = 0; r < n; ++r) {
      SimulationOptions opt;
      opt.replica = static_cast<std::uint64_t>(r);
      NullSink sink;
      sizes[static_cast<std::size_t>(r)] = static_cast<double>(simulate_streaming(free, origin1, t, 5, sink, opt).final_size);
    }
    const MeanSe m = mean_se(sizes);
    CHECK(std::abs(m.mean - std::exp(2.0 * t)) < 3.0 * m.se);
  }
}

TEST_CASE("frozen-configuration waiting times are Exponential(total rate)") {
  struct Case {
    BirthKernel k;
    Configuration c;
    SamplerKind kind;
  };
  const std::vector<Case> cases = {
      {k2, Configuration(1, {0.0, 0.5, 1.8}), SamplerKind::interval_profile},
      {k2, Configuration(1, {0.0, 0.5, 1.8}), SamplerKind::mixture},
      {BirthKernel::free(1.0), Configuration(1, {0.0, 0.4}), SamplerKind::mixture},
      {BirthKernel::truncated(2.0, 1.0), Configuration(2, {0.0, 0.0, 0.6, 0.3, -0.5, 1.1}), SamplerKind::cell_envelope},
      {BirthKernel::truncated(2.0, 1.0), Configuration(2, {0.0, 0.0, 0.6, 0.3, -0.5, 1.1}), SamplerKind::mixture},
  };
  for (const auto& cs : cases) {
    auto s = make_sampler(cs.k, cs.c, cs.kind);
    CounterRng rng(99, 0);
    const double total = total_rate(cs.k, cs.c);
    const auto w = waiting_times(*s, rng, 100000);
    const TestResult ks = ks_one_sample(w, [total](double x) { return 1.0 - std::exp(-total * x); });
    CHECK(ks.p_value > 0.001);
  }
}

TEST_CASE("1D birth locations follow the exact step profile") {
  const Configuration c(1, {0.0, 0.5, 1.8});
  const double lo = -1.0, hi = 2.8;
  const int bins = 19;
  const double width = (hi - lo) / bins;
  const double total = total_rate(k2, c);
  // Exact bin mass: the profile is constant between the breakpoints y +- 1 and the bin edges.
  std::vector<double> p(bins);
  for (int b = 0; b < bins; ++b) {
    std::vector<double> cuts = {lo + b * width, lo + (b + 1) * width};
    for (double y : {-1.0, 1.0, -0.5, 1.5, 0.8, 2.8}) {
      if (y > cuts[0] && y < cuts[1]) cuts.push_back(y);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
      p[b] += (cuts[j + 1] - cuts[j]) * evaluate_rate(k2, {0.5 * (cuts[j] + cuts[j + 1])}, c) / total;
    }
  }
  for (SamplerKind kind : {SamplerKind::interval_profile, SamplerKind::mixture}) {
    auto s = make_sampler(k2, c, kind);
    CounterRng rng(1234, 0);
    std::vector<Vec> xs;
    waiting_times(*s, rng, 100000, &xs);
    std::vector<double> counts(bins);
    for (const auto& x : xs) {
      REQUIRE(x[0] >= lo);
      REQUIRE(x[0] < hi);
      counts[static_cast<std::size_t>(std::min<int>(bins - 1, static_cast<int>((x[0] - lo) / width)))] += 1.0;
    }
    const double n = static_cast<double>(xs.size());
    for (int b = 0; b < bins; ++b) {
      const double se = std::sqrt(n * p[b] * (1.0 - p[b]));
      CHECK(std::abs(counts[b] - n * p[b]) <= 3.0 * se);
    }
    CHECK(chi_square_gof(counts, p).p_value > 0.001);
  }
}

TEST_CASE("2D birth locations match a brute-force rejection oracle") {
  const BirthKernel k = BirthKernel::truncated(2.0, 1.0);
  const Configuration c(2, {0.0, 0.0, 0.6, 0.3, -0.5, 1.1, 1.9, -0.2});
  const std::size_t n = 100000;
  // Oracle: uniform proposals in the bounding box, accepted with probability b / k.
  CounterRng orng(5, stream_id(0, StreamPurpose::fixtures));
  std::vector<double> ox, oy, oa;
  while (ox.size() < n) {
    const double x = orng.uniform(-1.5, 2.9), y = orng.uniform(-1.2, 2.1);
    if (orng.uniform() * 2.0 < evaluate_rate(k, {x, y}, c)) {
      ox.push_back(x);
      oy.push_back(y);
      oa.push_back(std::atan2(y - 0.3, x - 0.5));
    }
  }
  for (SamplerKind kind : {SamplerKind::cell_envelope, SamplerKind::mixture}) {
    auto s = make_sampler(k, c, kind);
    CounterRng rng(6, 0);
    std::vector<Vec> xs;
    waiting_times(*s, rng, n, &xs);
    std::vector<double> sx, sy, sa;
    for (const auto& v : xs) {
      sx.push_back(v[0]);
      sy.push_back(v[1]);
      sa.push_back(std::atan2(v[1] - 0.3, v[0] - 0.5));
    }
    CHECK(ks_two_sample(sx, ox).p_value > 0.001);
    CHECK(ks_two_sample(sy, oy).p_value > 0.001);
    CHECK(ks_two_sample(sa, oa).p_value > 0.001);
  }
}

TEST_CASE("samplers agree on the total and on the rate") {
  CounterRng rng(8, 0);
  Configuration c(2);
  for (int i = 0; i < 300; ++i) {
    const double p[2] = {rng.uniform(-6, 6), rng.uniform(-6, 6)};
    c.add(p);
  }
  const BirthKernel k = BirthKernel::truncated(3.0, 1.0);
  auto s = make_sampler(k, c);
  for (int q = 0; q < 1000; ++q) {
    const double x[2] = {rng.uniform(-7, 7), rng.uniform(-7, 7)};
    REQUIRE(s->rate(x) == evaluate_rate(k, x, c));
  }
}

TEST_CASE("coupled runs: nested kernels keep nested configurations") {
  const BirthKernel k1 = BirthKernel::truncated(1.0, 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const CoupledRun run = simulate_coupled(k1, k2, origin1, origin1, 10.0, seed);
    CHECK(run.stats.inclusion_violations == 0);
    CHECK(run.stats.order_violations == 0);
    CHECK(run.hi == simulate(k2, origin1, 10.0, seed));
    std::size_t j = 0;
    for (std::size_t i = 0; i < run.lo.size(); ++i) {
      while (j < run.hi.size() && run.hi.time(j) < run.lo.time(i)) ++j;
      REQUIRE(j < run.hi.size());
      CHECK(run.hi.time(j) == run.lo.time(i));
      CHECK(same_point(run.hi.position(j), run.lo.position(i)));
    }
    CHECK(run.lo.size() < run.hi.size());
  }
}

TEST_CASE("coupled runs with equal kernels give identical logs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CoupledRun run = simulate_coupled(k2, k2, origin1, origin1, 10.0, seed);
    CHECK(run.lo.size() == run.hi.size());
    for (std::size_t i = 0; i < run.lo.size(); ++i) {
      CHECK(run.lo.time(i) == run.hi.time(i));
      CHECK(same_point(run.lo.position(i), run.hi.position(i)));
    }
  }
  const Configuration o2(2, {0.0, 0.0});
  const BirthKernel k5 = BirthKernel::truncated(5.0, 1.0);
  const CoupledRun run = simulate_coupled(k5, k5, o2, o2, 3.0, 4);
  CHECK(run.lo.size() == run.hi.size());
}

TEST_CASE("capped kernel under free branching: inclusion over 100 seeds") {
  const BirthKernel lo = BirthKernel::truncated(1.5, 1.0);
  const BirthKernel hi = BirthKernel::free(1.0);
  std::uint64_t checks = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const CoupledRun run = simulate_coupled(lo, hi, origin1, origin1, 5.0, seed);
    REQUIRE(run.stats.inclusion_violations == 0);
    REQUIRE(run.stats.order_violations == 0);
    checks += run.stats.rate_checks;
  }
  CHECK(checks > 1000);
}

TEST_CASE("a rate-order breach is detected") {
  // lo = k 2 dominates hi = k 1: the coupling must refuse.
  const BirthKernel k1 = BirthKernel::truncated(1.0, 1.0);
  CHECK_THROWS_AS(simulate_coupled(k2, k1, origin1, origin1, 10.0, 1), CouplingError);
  CouplingOptions lax;
  lax.strict = false;
  const CoupledRun run = simulate_coupled(k2, k1, origin1, origin1, 10.0, 1, lax);
  CHECK(run.stats.order_violations > 0);
  CHECK_THROWS_AS(simulate_coupled(k1, k2, Configuration(1, {0.0, 3.0}), origin1, 1.0, 1), std::invalid_argument);
}

TEST_CASE("gap chain jump densities") {
  auto mass = [](double z) {
    double s = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) s += gap_jump_density(z, (i + 0.5) / n) / n;
    return s;
  };
  CHECK(mass(0.3) == doctest::Approx(2.3).epsilon(1e-4));
  CHECK(mass(0.7) == doctest::Approx(2.7).epsilon(1e-4));
  for (double z : {0.0, 0.1, 0.5, 0.9, 1.0}) {
    CHECK(gap_total_rate(z) == doctest::Approx(2.0 + z));
    CHECK(mass(z) == doctest::Approx(2.0 + z).epsilon(1e-4));
  }
  CHECK(gap_jump_density(0.3, 0.2) == 4.0);
  CHECK(gap_jump_density(0.3, 0.5) == 2.0);
  CHECK(gap_jump_density(0.3, 0.8) == 1.0);
  CHECK(gap_jump_density(0.7, 0.5) == 3.0);
  CHECK_THROWS_AS(simulate_gap_chain(1.5, 1.0, 1), std::invalid_argument);
  const GapTrajectory tr = simulate_gap_chain(0.2, 100.0, 3);
  for (double z : tr.z) REQUIRE((z >= 0.0 && z <= 1.0));
}

TEST_CASE("gap chain holding times are Exponential(2 + z)") {
  const GapTrajectory tr = simulate_gap_chain(0.5, 1e9, 12, 200000);
  // Rescaled holding times (t_{i+1} - t_i)(2 + z_i) are unit exponentials.
  std::vector<double> e;
  for (std::size_t i = 0; i + 1 < tr.times.size(); ++i) e.push_back((tr.times[i + 1] - tr.times[i]) * (2.0 + tr.z[i]));
  CHECK(ks_one_sample(e, [](double x) { return 1.0 - std::exp(-x); }).p_value > 0.001);
}

TEST_CASE("two-point process: rates and increments") {
  const TwoPointTrajectory tr = simulate_two_point(2000.0, 5);
  REQUIRE(tr.jumps() > 1000);
  std::vector<double> e;
  for (std::size_t i = 1; i < tr.times.size(); ++i) {
    REQUIRE(tr.x1[i] >= tr.x2[i]);
    REQUIRE(tr.x1[i] - tr.x2[i] <= 1.0 + 1e-12);
    const double inc = tr.x1[i] - tr.x1[i - 1];
    REQUIRE(inc >= 0.0);
    REQUIRE(inc <= 1.0 + 1e-12);
    if (i >= 2) e.push_back((tr.times[i] - tr.times[i - 1]) * (2.0 + tr.x1[i - 1] - tr.x2[i - 1]));
  }
  CHECK(ks_one_sample(e, [](double x) { return 1.0 - std::exp(-x); }).p_value > 0.001);
  // x1 grows at the Theorem 2 speed.
  CHECK(tr.x1.back() / tr.t_end == doctest::Approx(0.7355).epsilon(0.05));
}

TEST_CASE("two-point gap and the gap chain have the same marginal") {
  const double spacing = 5.0, burn = 50.0;
  const std::size_t n = 100000;
  const double t_end = burn + spacing * static_cast<double>(n);
  const auto a = simulate_two_point(t_end, 41).gap().sample(burn, spacing, n);
  const auto b = simulate_gap_chain(0.0, t_end, 42).sample(burn, spacing, n);
  REQUIRE(a.size() == n);
  REQUIRE(b.size() == n);
  CHECK(ks_two_sample(a, b).p_value > 0.001);
}

TEST_CASE("restricted BRW keeps min(births + 1, n_cap) particles") {
  for (std::size_t cap : {1u, 2u, 7u, 64u}) {
    const EventLog log = simulate_restricted_brw(cap, 15.0, 3 + cap);
    REQUIRE(log.size() > 0);
    const auto pop = population_after_each_birth(log);
    for (std::size_t i = 0; i < pop.size(); ++i) REQUIRE(pop[i] == std::min(i + 2, cap));
    for (std::size_t i = 0; i < log.size(); ++i) {
      if (log.op(i) == EventOp::remove) {
        REQUIRE(i > 0);
        CHECK(log.time(i) == log.time(i - 1));
        // the removed particle is the leftmost one just before the removal
        const Configuration before = log.configuration_at(log.time(i) - 0.0);
        (void)before;
      }
    }
    CHECK(log.configuration_at(15.0).size() == std::min(log.births() + 1, cap));
  }
}

TEST_CASE("restricted BRW removes the leftmost particle") {
  const EventLog log = simulate_restricted_brw(5, 10.0, 8);
  std::multiset<double> live = {0.0};
  for (std::size_t i = 0; i < log.size(); ++i) {
    const double x = log.position(i)[0];
    if (log.op(i) == EventOp::birth) {
      live.insert(x);
    } else {
      REQUIRE(x == *live.begin());
      live.erase(live.begin());
    }
  }
  CHECK(live.size() == 5);
}

TEST_CASE("JSONL round trip is bit exact") {
  for (const EventLog& log : {simulate(k2, origin1, 20.0, 4), simulate(BirthKernel::truncated(5.0, 1.0), Configuration(2, {0.0, 0.0}), 3.0, 4),
                              simulate_restricted_brw(4, 5.0, 2)}) {
    std::stringstream s;
    write_jsonl(log, s);
    const std::string text = s.str();
    std::istringstream in(text);
    const EventLog back = read_jsonl(in);
    CHECK(back == log);
    CHECK(back.kernel == log.kernel);
    CHECK(back.seed == log.seed);
    std::ostringstream again;
    write_jsonl(back, again);
    CHECK(again.str() == text);
  }
  std::istringstream bad("{\"type\":\"header\",\"dimension\":1}\n{\"t\":-1}\n");
  CHECK_THROWS(read_jsonl(bad));
}

TEST_CASE("replica map returns results in index order") {
  auto f = [](std::size_t i) { return simulate(k2, origin1, 5.0, 1, SimulationOptions{.replica = i}).size(); };
  CHECK(replica_map(16, f) == replica_map_serial(16, f));
  CHECK_THROWS_AS(replica_map(4, [](std::size_t i) -> int {
                    if (i == 2) throw std::runtime_error("boom");
                    return 0;
                  }),
                  std::runtime_error);
}

TEST_CASE("rate trackers agree exactly with brute force") {
  CounterRng rng(13, 0);
  for (const BirthKernel& k : {BirthKernel::free(1.0), BirthKernel::parse("sum:scale=0.5,steps=0.5:2/1:1"), k2}) {
    Configuration c(1);
    auto tr = make_rate_tracker(k, Configuration(1, {0.0}));
    c.add({0.0});
    for (int i = 0; i < 3000; ++i) {
      // dyadic grid points make |x - y| = r ties frequent
      const double v = std::round(rng.uniform(-40, 40) * 64.0) / 64.0;
      if (c.contains({v})) continue;
      c.add({v});
      tr->commit(Vec{v, 0, 0});
    }
    for (int q = 0; q < 3000; ++q) {
      const double x = q % 2 ? rng.uniform(-41, 41) : std::round(rng.uniform(-41, 41) * 64.0) / 64.0;
      REQUIRE(tr->rate(std::span<const double>(&x, 1)) == brute_force_rate(k.balls(), std::span<const double>(&x, 1), c));
    }
  }
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "birthsim/analytics.hpp"
#include "birthsim/gap_density.hpp"
#include "birthsim/reduced.hpp"
#include "birthsim/rng.hpp"
#include "birthsim/shape.hpp"
#include "birthsim/stats.hpp"

using namespace birthsim;

namespace {

const BirthKernel k2 = BirthKernel::truncated(2.0, 1.0);
const Configuration origin1(1, {0.0});

// Composite Simpson oracle, independent of the adaptive integrator.
template <class F>
double simpson(F f, double a, double b, int n = 200000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double g_oracle(double x) { return 36.0 * (4.0 - 3.0 * x) / (std::pow(2.0 + x, 3) * std::pow(3.0 - x, 2)); }

FrontSeries line_front(double speed, double t_end, double dt) {
  FrontSeries f;
  for (double t = 0.0; t <= t_end + 1e-12; t += dt) {
    f.times.push_back(t);
    f.values.push_back(speed * t);
  }
  f.t_end = t_end;
  return f;
}

Configuration uniform_disk_cloud(std::size_t n, double radius, CounterRng& rng) {
  std::vector<double> xy;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = radius * std::sqrt(rng.uniform());
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    xy.push_back(r * std::cos(a));
    xy.push_back(r * std::sin(a));
  }
  return Configuration(2, xy);
}

}  // namespace

TEST_CASE("invariant density: point values, positivity, domain") {
  CHECK(invariant_density(0.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(invariant_density(1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    CHECK(invariant_density(x) > 0.0);
    CHECK(invariant_density(x) == doctest::Approx(g_oracle(x)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(invariant_density(-1e-9), std::invalid_argument);
  CHECK_THROWS_AS(invariant_density(1.0 + 1e-9), std::invalid_argument);
}

TEST_CASE("invariant density: normalisation and first-bin mass") {
  CHECK(std::abs(density_normalization() - 1.0) < 1e-10);
  CHECK(std::abs(simpson(g_oracle, 0.0, 1.0) - 1.0) < 1e-10);
  const double first = integrate(invariant_density, 0.0, 0.05);
  CHECK(first == doctest::Approx(simpson(g_oracle, 0.0, 0.05, 2000)).epsilon(1e-12));
  CHECK(first == doctest::Approx(0.0961594692424808).epsilon(1e-12));
}

TEST_CASE("density table: trapezoid normalisation is consistent") {
  const DensityTable t = density_table(1000);
  REQUIRE(t.grid.size() == 1001);
  double trap = 0.0;
  for (std::size_t i = 0; i + 1 < t.grid.size(); ++i) {
    CHECK(t.values[i] >= 0.0);
    trap += 0.5 * (t.values[i] + t.values[i + 1]) * (t.grid[i + 1] - t.grid[i]);
  }
  CHECK(std::abs(trap - t.normalization) < 1e-10);
  CHECK(std::abs(t.normalization - 1.0) < 1e-5);
  CHECK(t.grid.front() == 0.0);
  CHECK(t.grid.back() == 1.0);
}

TEST_CASE("embedded density integrates to one") {
  CHECK(std::abs(simpson([](double x) { return embedded_density(x); }, 0.0, 1.0, 20000) - 1.0) < 1e-10);
}

TEST_CASE("balance equations hold at grid 256 and stay stable under refinement") {
  const BalanceReport r = verify_balance(256);
  CHECK(r.grid_size == 256);
  CHECK(r.balance_residual < 1e-8);
  CHECK(r.integral_residual < 1e-8);
  CHECK(r.ode_residual < 1e-8);
  CHECK(r.phi_residual < 1e-12);
  CHECK(r.passed());
  for (int n : {512, 1024}) {
    const BalanceReport f = verify_balance(n);
    CHECK(f.balance_residual < 1e-8);
    CHECK(f.integral_residual < 1e-8);
    CHECK(f.ode_residual < 1e-8);
    CHECK(f.passed());
  }
}

TEST_CASE("phi = 4 - 3x solves its ODE identically") {
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    const double phi = 4.0 - 3.0 * x;
    const double phi_reflected = 4.0 - 3.0 * (1.0 - x);
    // (3 - x) phi'(x) + 2 phi(x) + phi(1 - x) = 0 with phi' = -3.
    CHECK(std::abs((3.0 - x) * -3.0 + 2.0 * phi + phi_reflected) < 1e-12);
  }
}

TEST_CASE("balance residual detects a perturbed density") {
  const BalanceReport r = verify_balance(256, [](double x) { return invariant_density(x) * (1.0 + 0.01 * x); });
  CHECK(r.balance_residual > 1e-3);
  CHECK_FALSE(r.passed());
}

TEST_CASE("balance equation against an independent quadrature") {
  for (double y : {0.1, 0.3, 0.5, 0.77, 0.95}) {
    // Split at the jumps of q(., y) so Simpson sees smooth pieces.
    std::vector<double> cuts{0.0, std::min(y, 1.0 - y), 0.5, std::max(y, 1.0 - y), 1.0};
    std::sort(cuts.begin(), cuts.end());
    double lhs = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double a = cuts[i], b = cuts[i + 1];
      if (b <= a) continue;
      const double lo = a + 1e-12, hi = b - 1e-12;
      lhs += simpson([&](double x) { return gap_jump_density(std::clamp(x, lo, hi), y) * g_oracle(x); }, a, b, 20000);
    }
    CHECK(lhs == doctest::Approx(gap_total_rate(y) * g_oracle(y)).epsilon(1e-6));
  }
}

TEST_CASE("speed of the k = 2 model: closed form and quadrature") {
  const double closed = (144.0 * std::log(3.0) - 144.0 * std::log(2.0) - 40.0) / 25.0;
  CHECK(speed_k2_closed_form() == doctest::Approx(closed).epsilon(1e-15));
  CHECK(std::abs(speed_k2_closed_form() - 0.735479022703) < 5e-13);
  CHECK(std::abs(speed_k2_quadrature() - speed_k2_closed_form()) < 1e-10);
  CHECK(theoretical_speed_k2() == speed_k2_closed_form());
  const double oracle = simpson([](double z) { return g_oracle(z) * (1.0 - z + 0.5 * z * z); }, 0.0, 1.0);
  CHECK(std::abs(oracle - closed) < 1e-10);
}

TEST_CASE("x1 drift from the conditional jump densities") {
  for (int i = 0; i <= 20; ++i) {
    const double z = i / 20.0;
    // rate 2 on increments (0, 1 - z], rate 1 on (1 - z, 1]
    const double oracle = simpson([&](double u) { return u * (u <= 1.0 - z ? 2.0 : 1.0); }, 0.0, 1.0, 400000);
    CHECK(x1_drift(z) == doctest::Approx(1.0 - z + 0.5 * z * z).epsilon(1e-12));
    CHECK(x1_drift(z) == doctest::Approx(oracle).epsilon(1e-5));
  }
}

TEST_CASE("Biggins speed against the two-equation Newton oracle") {
  // f(t) = 2 sinh t - a t^2 with f = f' = 0: tanh t = t / 2, a = cosh t / t.
  double t = 1.9;
  for (int i = 0; i < 50; ++i) {
    const double h = std::tanh(t) - t / 2.0;
    const double dh = 1.0 / (std::cosh(t) * std::cosh(t)) - 0.5;
    t -= h / dh;
  }
  const double a_oracle = std::cosh(t) / t;
  CHECK(a_oracle == doctest::Approx(2.0 * std::sinh(t) / (t * t)).epsilon(1e-14));
  CHECK(a_oracle == doctest::Approx(1.8105234787381).epsilon(1e-12));
  CHECK(t == doctest::Approx(1.91500805).epsilon(1e-8));

  const BigginsResult b = biggins_speed();
  CHECK(b.a_star >= 1.80);
  CHECK(b.a_star <= 1.82);
  CHECK(b.a_star == doctest::Approx(a_oracle).epsilon(1e-9));
  CHECK(b.theta_star == doctest::Approx(t).epsilon(1e-4));
  CHECK(std::abs(b.inner_min_at_star) < 1e-9);
  CHECK(b.inner_min_below > 0.0);
  CHECK(b.inner_min_above < 0.0);
  CHECK(b.certified());
  CHECK(biggins_inner_min(b.a_star * (1.0 - 1e-6)) > 0.0);
  CHECK(biggins_inner_min(b.a_star * (1.0 + 1e-6)) < 0.0);
  CHECK_THROWS_AS(biggins_speed(2.0, 3.0), NumericalError);
}

TEST_CASE("gap occupation converges to g") {
  const GapTrajectory tr = simulate_gap_chain(0.5, 1e9, 21, 1000000);
  REQUIRE(tr.jumps() == 1000000);
  const OccupationReport r = gap_occupation_vs_g(tr, 20);
  CHECK(r.sup_norm < 0.05);
  CHECK(std::abs(std::accumulate(r.occupation.begin(), r.occupation.end(), 0.0) - 1.0) < 1e-12);
  CHECK(std::abs(std::accumulate(r.g_mass.begin(), r.g_mass.end(), 0.0) - 1.0) < 1e-10);
  CHECK(r.g_mass[0] == doctest::Approx(0.0961594692424808).epsilon(1e-10));
  CHECK(r.total_time == doctest::Approx(tr.t_end).epsilon(1e-12));
  CHECK(r.chi_square >= 0.0);
  CHECK(r.bin_lo.front() == 0.0);
  CHECK(r.bin_hi.back() == 1.0);

  const GapTrajectory short_run = simulate_gap_chain(0.5, 100.0, 1);
  CHECK_THROWS_AS(gap_occupation_vs_g(short_run, 20), std::invalid_argument);
}

TEST_CASE("speed estimator on a deterministic line") {
  const FrontSeries f = line_front(0.5, 100.0, 0.25);
  CHECK(window_slope(f, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  const SpeedEstimate e = estimate_speed(std::vector<FrontSeries>{f, f, f});
  CHECK(e.slope == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(e.std_error == 0.0);
  CHECK(e.t_lo == 50.0);
  CHECK(e.t_hi == 100.0);
  CHECK(e.replicas == 3);

  EventLog log(1, origin1);
  for (int i = 1; i <= 400; ++i) log.append(0.25 * i, std::vector<double>{0.125 * i});
  log.t_end = 100.0;
  const SpeedEstimate from_log = estimate_speed(std::vector<EventLog>{log}, Vec{1.0, 0.0, 0.0});
  CHECK(from_log.slope == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(from_log.std_error == 0.0);
}

TEST_CASE("speed estimator: window contract") {
  const FrontSeries sparse = line_front(1.0, 100.0, 10.0);
  CHECK_THROWS_AS(window_slope(sparse, 0.5), InsufficientDataError);
  const FrontSeries f = line_front(0.5, 100.0, 0.25);
  CHECK_THROWS_AS(window_slope(f, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(window_slope(f, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(estimate_speed(std::vector<FrontSeries>{}), std::invalid_argument);
}

TEST_CASE("speed estimator uses the front value at the window start") {
  // Front jumps 0 -> 10 at t = 1, then grows at slope 1 from t = 60.
  FrontSeries f;
  f.times = {0.0, 1.0};
  f.values = {0.0, 10.0};
  for (int i = 0; i < 40; ++i) {
    f.times.push_back(60.0 + i);
    f.values.push_back(10.0 + i);
  }
  f.t_end = 100.0;
  std::vector<double> ts{50.0}, vs{10.0};
  for (int i = 0; i < 40; ++i) {
    ts.push_back(60.0 + i);
    vs.push_back(10.0 + i);
  }
  CHECK(window_slope(f, 0.5) == doctest::Approx(least_squares(ts, vs).slope).epsilon(1e-12));
}

TEST_CASE("restricted BRW with n_cap = 1 drifts at 2 E[max(0, U)] = 1/2") {
  const SpeedEstimate e = measure_restricted_brw_speed(1, 20, 400.0, 5);
  CHECK(e.std_error > 0.0);
  CHECK(std::abs(e.slope - 0.5) < 3.0 * e.std_error);
}

TEST_CASE("hitting times: conventions and sentinel") {
  const Configuration start(1, {3.0});
  const EventLog log = simulate(k2, start, 5.0, 9);
  const auto rec = hitting_times(log, {{Vec{3.0, 0.0, 0.0}, 0.2}, {Vec{1e6, 0.0, 0.0}, 0.1}, {Vec{6.0, 0.0, 0.0}, 0.1}});
  REQUIRE(rec.size() == 3);
  CHECK(rec[0].T == 0.0);
  CHECK(rec[0].reached());
  CHECK(rec[1].T == kUnreached);
  CHECK_FALSE(rec[1].reached());
  CHECK(std::isinf(rec[1].T));
  // Brute force: first birth within 0.6 of 6.
  double first = kUnreached;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (std::abs(log.position(i)[0] - 6.0) <= 0.6) {
      first = log.time(i);
      break;
    }
  }
  CHECK(rec[2].T == first);
  CHECK_THROWS_AS(hitting_times(log, {{Vec{1.0, 0.0, 0.0}, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(hitting_times(log, {{Vec{1.0, 0.0, 0.0}, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(hitting_times(log, {{Vec{0.0, 0.0, 0.0}, 0.5}}), std::invalid_argument);
}

TEST_CASE("hitting times are subadditive on coupled extractions") {
  const double lambda = 0.2;
  const Vec x{4.0, 0.0, 0.0};
  const Vec x2{8.0, 0.0, 0.0};
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const EventLog hi = simulate(k2, origin1, 40.0, seed);
    const BallEntry first = first_entry(hi, x, lambda * 4.0);
    REQUIRE(first.T != kUnreached);
    // Restart from the entering particle alone at T(x); the restarted
    // process rides on the same marks and stays inside eta.
    CouplingOptions opt;
    opt.lo_start = first.T;
    const CoupledRun run =
        simulate_coupled(k2, k2, Configuration(1, {first.z[0]}), origin1, 40.0, seed, opt);
    CHECK(run.hi == hi);
    const BallEntry second = first_entry(run.lo, x2, lambda * 4.0, first.T);
    const double t2x = hitting_times(hi, {{x2, lambda}})[0].T;
    if (second.T == kUnreached) continue;
    ++checked;
    CHECK(t2x <= first.T + (second.T - first.T));
  }
  CHECK(checked >= 90);
}

TEST_CASE("subadditive ratios: synthetic front, contract, monotonicity in lambda") {
  std::vector<HittingRecord> unit;
  for (int n = 1; n <= 16; ++n) unit.push_back({Vec{double(n), 0.0, 0.0}, 0.5, double(n)});
  const SubadditiveSeries s = subadditive_ratios(unit);
  REQUIRE(s.ratio.size() == 16);
  for (double r : s.ratio) CHECK(r == 1.0);
  REQUIRE(s.stabilization.size() == 8);
  for (double d : s.stabilization) CHECK(d == 0.0);
  CHECK(s.n.front() == 1);
  CHECK(s.n.back() == 16);
  unit.resize(7);
  CHECK_THROWS_AS(subadditive_ratios(unit), std::invalid_argument);

  const EventLog log = simulate(k2, origin1, 60.0, 3);
  std::vector<std::vector<double>> by_lambda;
  for (double lambda : {0.1, 0.3, 0.5}) {
    std::vector<HittingTarget> targets;
    for (int n = 1; n <= 32; ++n) targets.push_back({Vec{double(n), 0.0, 0.0}, lambda});
    by_lambda.push_back(subadditive_ratios(hitting_times(log, targets)).ratio);
  }
  for (std::size_t n = 0; n < 32; ++n) {
    CHECK(by_lambda[0][n] >= by_lambda[1][n]);
    CHECK(by_lambda[1][n] >= by_lambda[2][n]);
  }
}

TEST_CASE("subadditive ratio at n = 64 sits in the band of the speed") {
  const double lambda = 0.1;
  std::vector<double> at64;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const EventLog log = simulate(k2, origin1, 130.0, seed);
    std::vector<HittingTarget> targets;
    for (int n = 1; n <= 64; ++n) targets.push_back({Vec{double(n), 0.0, 0.0}, lambda});
    const SubadditiveSeries s = subadditive_ratios(hitting_times(log, targets));
    REQUIRE(std::isfinite(s.ratio[63]));
    at64.push_back(s.ratio[63]);
  }
  const double band = (1.0 - lambda) / speed_k2_closed_form();
  CHECK(std::abs(mean_se(at64).mean - band) < 0.1 * band);
}

TEST_CASE("superadditivity: zero kernel and the k = 1 pair") {
  SpeedRunOptions opt;
  const BirthKernel k1 = BirthKernel::truncated(1.0, 1.0);
  const SuperadditivityReport z = superadditivity_experiment(k1, std::nullopt, 6, 150.0, 4, opt);
  CHECK(z.s2.slope == 0.0);
  CHECK(z.s12.slope == z.s1.slope);
  CHECK(z.holds);
  CHECK(std::string(SuperadditivityReport::label) == "EXPLORATORY");
  CHECK_THROWS_AS(superadditivity_experiment(std::nullopt, std::nullopt, 2, 10.0, 1), std::invalid_argument);

  const SuperadditivityReport p = superadditivity_experiment(k1, k1, 8, 200.0, 6, opt);
  CHECK(p.s1.slope <= p.s12.slope + 3.0 * p.pooled_se);
  CHECK(p.lhs == doctest::Approx(p.s1.slope + p.s2.slope));
  CHECK(p.rhs == p.s12.slope);
  CHECK(p.s1.replicas == 8);
  CHECK_FALSE(p.kernel_sum.empty());
}

TEST_CASE("shape statistics: null-case calibration") {
  CounterRng rng(77, 0);
  std::vector<double> stats;
  std::vector<ShapeReport> reports;
  for (int i = 0; i < 200; ++i) {
    const ShapeReport r = shape_statistics(uniform_disk_cloud(3000, 10.0, rng), 12, 1.0, 10.0);
    CHECK(r.sectors == 12);
    CHECK(r.particles == 3000);
    CHECK(r.chi_square.dof == 11.0);
    CHECK(std::accumulate(r.sector_counts.begin(), r.sector_counts.end(), 0.0) == 3000.0);
    stats.push_back(r.chi_square.statistic);
    if (i < 20) reports.push_back(r);
  }
  const MeanSe m = mean_se(stats);
  CHECK(std::abs(m.mean - 11.0) < 3.0 * m.se);
  const ShapeReport one = reports.front();
  CHECK(one.relative_spread < 0.1);
  CHECK(one.mean_radius == doctest::Approx(1.1).epsilon(0.01));

  const PooledShape pooled = pool_shapes(reports);
  CHECK(pooled.seeds == 20);
  CHECK(pooled.sector_radius.size() == 12);
  CHECK(pooled.isotropy.corrected.p_value > 0.01);
  CHECK(pooled.isotropy.mean_design_effect >= 1.0);

  CHECK_THROWS_AS(shape_statistics(uniform_disk_cloud(500, 10.0, rng), 12, 1.0, 10.0), InsufficientDataError);
}

TEST_CASE("stats: reference distribution values") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(chi_square_survival(11.070497693516351, 5.0) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(kolmogorov_survival(1.3580986393225505) == doctest::Approx(0.05).epsilon(1e-6));
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const MeanSe m = mean_se(v);
  CHECK(m.mean == 2.5);
  CHECK(m.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  const LineFit l = least_squares(std::vector<double>{0, 1, 2, 3}, std::vector<double>{1, 3, 5, 7});
  CHECK(l.slope == doctest::Approx(2.0));
  CHECK(l.intercept == doctest::Approx(1.0));
}

TEST_CASE("stats: KS tests accept the null and reject a shift") {
  CounterRng rng(5, 1);
  std::vector<double> a(5000), b(5000), c(5000);
  for (auto& v : a) v = rng.uniform();
  for (auto& v : b) v = rng.uniform();
  for (auto& v : c) v = rng.uniform() + 0.05;
  auto cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
  CHECK(ks_one_sample(a, cdf).p_value > 0.001);
  CHECK(ks_one_sample(c, cdf).p_value < 1e-6);
  CHECK(ks_two_sample(a, b).p_value > 0.001);
  CHECK(ks_two_sample(a, c).p_value < 1e-6);
}

TEST_CASE("stats: chi-square GOF and the clustered correction") {
  const std::vector<double> p(4, 0.25);
  const std::vector<double> exact{250, 250, 250, 250};
  CHECK(chi_square_gof(exact, p).statistic == 0.0);
  CHECK(chi_square_gof(exact, p).p_value == doctest::Approx(1.0));

  // Every draw counted four times: raw statistic inflates, the design effect
  // recovers the factor.
  CounterRng rng(9, 2);
  std::vector<std::vector<double>> clusters, plain;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> c(4, 0.0);
    for (int j = 0; j < 200; ++j) c[rng.below(4)] += 1.0;
    plain.push_back(c);
    for (auto& v : c) v *= 4.0;
    clusters.push_back(c);
  }
  const ClusteredChiSquare cp = clustered_chi_square(plain, p);
  const ClusteredChiSquare cc = clustered_chi_square(clusters, p);
  CHECK(cc.raw.statistic == doctest::Approx(4.0 * cp.raw.statistic));
  CHECK(cc.mean_design_effect == doctest::Approx(4.0).epsilon(0.35));
  CHECK(cc.corrected.statistic < cc.raw.statistic);
  CHECK_THROWS_AS(clustered_chi_square({plain[0]}, p), std::invalid_argument);
}

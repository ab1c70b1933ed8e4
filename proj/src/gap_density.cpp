#include "birthsim/gap_density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "birthsim/kernel.hpp"
#include "birthsim/reduced.hpp"

namespace birthsim {

double integrate(const std::function<double(double)>& f, double a, double b, std::vector<double> breaks,
                 double tolerance) {
  if (!(b > a)) return 0.0;
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = std::max(a, breaks[i]);
    const double hi = std::min(b, breaks[i + 1]);
    if (!(hi > lo)) continue;
    // Boost compares an unscaled error estimate against a scaled tolerance,
    // which never converges on short pieces; integrate over [-1, 1] instead.
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    sum += half * boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
                      [&](double u) { return f(std::clamp(mid + half * u, lo, hi)); }, -1.0, 1.0, 20, tolerance);
  }
  return sum;
}

double invariant_density(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("invariant_density: x must lie in [0, 1]");
  const double a = 2.0 + x;
  const double b = 3.0 - x;
  return 36.0 * (4.0 - 3.0 * x) / (a * a * a * b * b);
}

DensityTable density_table(int intervals) {
  if (intervals < 1) throw std::invalid_argument("density_table: need at least one interval");
  DensityTable t;
  const double h = 1.0 / intervals;
  double s = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double x = i == intervals ? 1.0 : i * h;
    t.grid.push_back(x);
    t.values.push_back(invariant_density(x));
    if (i > 0) s += 0.5 * (t.values[i] + t.values[i - 1]) * (t.grid[i] - t.grid[i - 1]);
  }
  t.normalization = s;
  return t;
}

double density_normalization() { return integrate(invariant_density, 0.0, 1.0); }

namespace {

double f_unnormalised(double x) { return invariant_density(x) * (2.0 + x); }

double f_normalizer() {
  static const double c = integrate(f_unnormalised, 0.0, 1.0);
  return c;
}

double f_derivative(double x) {
  // f = C (4 - 3x) (2 + x)^-2 (3 - x)^-2
  const double f = embedded_density(x);
  return f * (-3.0 / (4.0 - 3.0 * x) - 2.0 / (2.0 + x) + 2.0 / (3.0 - x));
}

}  // namespace

double embedded_density(double x) { return f_unnormalised(x) / f_normalizer(); }

bool BalanceReport::passed(double tolerance) const {
  return balance_residual < tolerance && integral_residual < tolerance && ode_residual < tolerance &&
         phi_residual < tolerance;
}

BalanceReport verify_balance(int grid_size, const std::function<double(double)>& density) {
  if (grid_size < 64) throw std::invalid_argument("verify_balance: grid_size must be >= 64");
  BalanceReport r;
  r.grid_size = grid_size;
  auto h = [](double x) { return embedded_density(x) / (2.0 + x); };
  for (int i = 0; i <= grid_size; ++i) {
    const double y = static_cast<double>(i) / grid_size;

    const double lhs = integrate([&](double x) { return gap_jump_density(x, y) * density(x); }, 0.0, 1.0,
                                 {y, 1.0 - y, 0.5});
    r.balance_residual = std::max(r.balance_residual, std::abs(lhs - gap_total_rate(y) * density(y)));

    double rhs;
    if (y <= 0.5) {
      rhs = 2.0 * integrate(h, 0.0, 0.5) + 2.0 * integrate(h, y, 0.5) + 3.0 * integrate(h, 0.5, 1.0) +
            integrate(h, 0.5, 1.0 - y);
    } else {
      rhs = integrate(h, 0.0, 0.5) + integrate(h, 0.0, 1.0 - y) + integrate(h, 0.5, 1.0) + 2.0 * integrate(h, y, 1.0);
    }
    r.integral_residual = std::max(r.integral_residual, std::abs(rhs - embedded_density(y)));

    const double x = y;
    const double ode = f_derivative(x) + 2.0 * embedded_density(x) / (2.0 + x) +
                       embedded_density(1.0 - x) / (3.0 - x);
    r.ode_residual = std::max(r.ode_residual, std::abs(ode));

    const double phi = 4.0 - 3.0 * x, dphi = -3.0, phi_reflect = 4.0 - 3.0 * (1.0 - x);
    r.phi_residual = std::max(r.phi_residual, std::abs((3.0 - x) * dphi + 2.0 * phi + phi_reflect));
  }
  return r;
}

double speed_k2_closed_form() { return (144.0 * std::log(3.0) - 144.0 * std::log(2.0) - 40.0) / 25.0; }

double speed_k2_quadrature() {
  return integrate([](double z) { return invariant_density(z) * (1.0 - z + 0.5 * z * z); }, 0.0, 1.0);
}

double theoretical_speed_k2() {
  const double closed = speed_k2_closed_form();
  const double quad = speed_k2_quadrature();
  if (std::abs(closed - quad) > 1e-10) {
    throw ConsistencyError("speed integral " + format_double(quad) + " disagrees with closed form " +
                           format_double(closed));
  }
  return closed;
}

double x1_drift(double z) {
  if (!(z >= 0.0 && z <= 1.0)) throw std::invalid_argument("x1_drift: z must lie in [0, 1]");
  auto rate = [z](double v) { return v <= 1.0 - z ? 2.0 : 1.0; };
  return integrate([&](double v) { return v * rate(v); }, 0.0, 1.0, {1.0 - z});
}

double biggins_inner_min(double a, double* argmin) {
  auto f = [a](double th) { return std::exp(th) - std::exp(-th) - a * th * th; };
  const auto [th, fv] = boost::math::tools::brent_find_minima(f, 0.5, 5.0, std::numeric_limits<double>::digits / 2 + 4);
  if (argmin) *argmin = th;
  return fv;
}

BigginsResult biggins_speed(double lo, double hi) {
  const double m_lo = biggins_inner_min(lo);
  const double m_hi = biggins_inner_min(hi);
  if (!(m_lo > 0.0 && m_hi < 0.0)) {
    throw NumericalError("biggins_speed: bracket [" + format_double(lo) + ", " + format_double(hi) +
                         "] does not bracket a sign change (inner minima " + format_double(m_lo) + ", " +
                         format_double(m_hi) + ")");
  }
  BigginsResult r{};
  while (hi - lo > 1e-14 * hi && r.iterations < 200) {
    const double mid = 0.5 * (lo + hi);
    if (biggins_inner_min(mid) > 0.0) lo = mid;
    else hi = mid;
    ++r.iterations;
  }
  r.a_star = 0.5 * (lo + hi);
  r.inner_min_at_star = biggins_inner_min(r.a_star, &r.theta_star);
  r.inner_min_below = biggins_inner_min(r.a_star * (1.0 - 1e-6));
  r.inner_min_above = biggins_inner_min(r.a_star * (1.0 + 1e-6));
  return r;
}

}  // namespace birthsim

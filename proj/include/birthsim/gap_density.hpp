#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

namespace birthsim {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConsistencyError : std::logic_error {
  using std::logic_error::logic_error;
};

// Adaptive Gauss-Kronrod (15 points) on [a, b], split at the given interior breakpoints.
double integrate(const std::function<double(double)>& f, double a, double b, std::vector<double> breaks = {},
                 double tolerance = 1e-13);

// g(x) = 36 (4 - 3x) / ((2 + x)^3 (3 - x)^2); throws std::invalid_argument off [0, 1].
double invariant_density(double x);

struct DensityTable {
  std::vector<double> grid;
  std::vector<double> values;
  double normalization;  // trapezoid integral of values over grid
};
DensityTable density_table(int intervals);

double density_normalization();  // integral of g over [0, 1]

// Normalised f = g q / int g q, with q(x) = 2 + x.
double embedded_density(double x);

struct BalanceReport {
  int grid_size = 0;
  double balance_residual = 0.0;   // sup_y |int q(x,y) g(x) dx - q(y) g(y)|
  double integral_residual = 0.0;  // sup_y of the two integral equations for f
  double ode_residual = 0.0;       // sup_x |f' + 2 f/(2+x) + f(1-x)/(3-x)|
  double phi_residual = 0.0;       // sup_x |(3-x) phi' + 2 phi + phi(1-x)| for phi = 4 - 3x
  bool passed(double tolerance = 1e-8) const;
};

// Residuals on the grid y_i = i / grid_size. `density` replaces g in the
// balance equation (used for sensitivity checks); the other residuals always
// use the closed form.
BalanceReport verify_balance(int grid_size, const std::function<double(double)>& density = invariant_density);

// Speed of the 1D k = 2 model, (144 ln 3 - 144 ln 2 - 40) / 25. Also evaluates
// int g(z)(1 - z + z^2/2) dz and throws ConsistencyError beyond 1e-10.
double theoretical_speed_k2();
double speed_k2_closed_form();
double speed_k2_quadrature();

// Drift of x1 at gap z, integrated from the conditional jump densities
// (rate 2 on (0, 1-z], rate 1 on (1-z, 1]).
double x1_drift(double z);

struct BigginsResult {
  double a_star;
  double theta_star;            // minimiser of the inner problem at a_star
  double inner_min_at_star;     // ~ 0
  double inner_min_below;       // at a_star (1 - 1e-6), > 0
  double inner_min_above;       // at a_star (1 + 1e-6), < 0
  int iterations;
  bool certified() const { return inner_min_below > 0.0 && inner_min_above < 0.0; }
};

// Inner problem for the unit indicator: min over theta in [0.5, 5] of
// e^theta - e^-theta - a theta^2.
double biggins_inner_min(double a, double* argmin = nullptr);
// Critical a where the inner minimum changes sign, by bisection on [lo, hi].
BigginsResult biggins_speed(double lo = 1.0, double hi = 3.0);

}  // namespace birthsim

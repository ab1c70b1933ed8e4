#include "birthsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace birthsim {

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.3) {
    // Small-x form: 1 - sqrt(2 pi)/x * sum exp(-(2k-1)^2 pi^2 / (8 x^2)).
    const double c = std::sqrt(2.0 * M_PI) / x;
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double m = 2.0 * k - 1.0;
      s += std::exp(-m * m * M_PI * M_PI / (8.0 * x * x));
    }
    return std::clamp(1.0 - c * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

namespace {

double ks_p(double d, double n_eff) {
  const double sn = std::sqrt(n_eff);
  return kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace

TestResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("KS test needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p(d, n)};
}

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS test needs samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p(d, na * nb / (na + nb))};
}

double chi_square_survival(double statistic, double dof) {
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

TestResult chi_square_gof(std::span<const double> observed, std::span<const double> probabilities) {
  if (observed.size() != probabilities.size() || observed.size() < 2) {
    throw std::invalid_argument("chi-square: need matching cells, at least two");
  }
  const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  double x2 = 0.0;
  for (std::size_t c = 0; c < observed.size(); ++c) {
    const double e = n * probabilities[c];
    if (!(e > 0.0)) throw std::invalid_argument("chi-square: empty expected cell");
    x2 += (observed[c] - e) * (observed[c] - e) / e;
  }
  const double dof = static_cast<double>(observed.size() - 1);
  return {x2, chi_square_survival(x2, dof), dof};
}

ClusteredChiSquare clustered_chi_square(const std::vector<std::vector<double>>& cluster_counts,
                                        std::span<const double> probabilities) {
  const std::size_t m = cluster_counts.size();
  const std::size_t cells = probabilities.size();
  if (m < 2) throw std::invalid_argument("clustered chi-square needs at least two clusters");
  std::vector<double> pooled(cells, 0.0);
  std::vector<double> sizes(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (cluster_counts[i].size() != cells) throw std::invalid_argument("clustered chi-square: cell mismatch");
    for (std::size_t c = 0; c < cells; ++c) {
      pooled[c] += cluster_counts[i][c];
      sizes[i] += cluster_counts[i][c];
    }
  }
  const double n = std::accumulate(sizes.begin(), sizes.end(), 0.0);
  ClusteredChiSquare out{chi_square_gof(pooled, probabilities), {}, 0.0};
  double weighted = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    const double p_hat = pooled[c] / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = cluster_counts[i][c] - p_hat * sizes[i];
      ss += r * r;
    }
    const double var = static_cast<double>(m) / static_cast<double>(m - 1) * ss / (n * n);
    const double p0 = probabilities[c];
    const double var_srs = p0 * (1.0 - p0) / n;
    weighted += (1.0 - p0) * (var / var_srs);
  }
  out.mean_design_effect = std::max(1.0, weighted / static_cast<double>(cells - 1));
  const double x2 = out.raw.statistic / out.mean_design_effect;
  out.corrected = {x2, chi_square_survival(x2, out.raw.dof), out.raw.dof};
  return out;
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

MeanSe mean_se(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of no values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0, 0.0, 1};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return {mean, sd / std::sqrt(n), sd, values.size()};
}

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least squares needs >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("least squares: degenerate abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace birthsim

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace birthsim {

struct TestResult {
  double statistic;
  double p_value;
  double dof = 0.0;
};

// P(K > x) for the Kolmogorov distribution.
double kolmogorov_survival(double x);

TestResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf);
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

double chi_square_survival(double statistic, double dof);

// Pearson goodness of fit of counts to cell probabilities (summing to 1).
TestResult chi_square_gof(std::span<const double> observed, std::span<const double> probabilities);

// Pearson test on counts pooled over independent clusters (replicas), with a
// first-order Rao-Scott correction for within-cluster correlation. The raw
// statistic is divided by the mean design effect estimated from the
// between-cluster variance of the cell proportions.
struct ClusteredChiSquare {
  TestResult raw;
  TestResult corrected;
  double mean_design_effect;
};
ClusteredChiSquare clustered_chi_square(const std::vector<std::vector<double>>& cluster_counts,
                                        std::span<const double> probabilities);

double normal_quantile(double p);

struct MeanSe {
  double mean;
  double se;  // sd / sqrt(n); 0 for n = 1
  double sd;
  std::size_t n;
};
MeanSe mean_se(std::span<const double> values);

struct LineFit {
  double slope;
  double intercept;
};
LineFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace birthsim

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "birthsim/configuration.hpp"
#include "birthsim/grid_index.hpp"
#include "birthsim/kernel.hpp"

namespace birthsim {

// b(x, eta). Throws std::invalid_argument on dimension mismatch.
double evaluate_rate(const BirthKernel& kernel, std::span<const double> x, const Configuration& config);
inline double evaluate_rate(const BirthKernel& kernel, std::initializer_list<double> x,
                            const Configuration& config) {
  return evaluate_rate(kernel, std::span<const double>(x.begin(), x.size()), config);
}

struct TotalRate {
  double value;
  double error_bound;  // absolute; zero when the decomposition is exact
};

// c(eta) = integral of b(x, eta) over R^d (sum over Z for the lattice family).
// Throws std::invalid_argument for an empty configuration.
double total_rate(const BirthKernel& kernel, const Configuration& config);
TotalRate total_rate_with_bound(const BirthKernel& kernel, const Configuration& config);

// Exact area of an axis-aligned rectangle intersected with a closed disk.
double rect_disk_area(double x0, double x1, double y0, double y1, double cx, double cy, double r);

// Batch evaluation over flat query coordinates; OpenMP-parallel over queries.
std::vector<double> evaluate_rates(const BallSum& kernel, const GridIndex& index,
                                   std::span<const double> queries);
// Serial all-pairs reference for the batch kernel.
std::vector<double> evaluate_rates_reference(const BallSum& kernel, const Configuration& config,
                                             std::span<const double> queries);

struct NonDegeneracyWitness {
  double c0;
  double r;
};

NonDegeneracyWitness witness_for(const BirthKernel& kernel);

// A rate function under test, with its claimed dominating profile and witness.
struct RateModel {
  int dimension = 1;
  bool lattice = false;
  std::function<double(std::span<const double>, const Configuration&)> rate;
  std::function<double(std::span<const double>)> dominating;  // a(x)
  NonDegeneracyWitness witness{};
};

RateModel rate_model(const BirthKernel& kernel, int dimension);

struct CheckResult {
  std::size_t trials = 0;
  std::size_t passed = 0;
  std::optional<std::string> counterexample;
  bool ok() const { return passed == trials; }
};

struct ConditionReport {
  CheckResult sublinearity;
  CheckResult monotonicity;
  CheckResult invariance;
  CheckResult non_degeneracy;
  NonDegeneracyWitness witness{};
  bool all_passed() const {
    return sublinearity.ok() && monotonicity.ok() && invariance.ok() && non_degeneracy.ok();
  }
};

ConditionReport check_conditions(const RateModel& model, std::size_t trials, std::uint64_t seed);
ConditionReport check_conditions(const BirthKernel& kernel, std::size_t trials, std::uint64_t seed,
                                 int dimension = 1);

}  // namespace birthsim

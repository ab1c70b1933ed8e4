#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace birthsim {

// Nonincreasing, nonnegative step function on [0, inf) with compact support:
// f(rho) = values[i] for radii[i-1] < rho <= radii[i] (radii[-1] = 0), and 0 past radii.back().
struct StepProfile {
  std::vector<double> radii;
  std::vector<double> values;

  double operator()(double rho) const;
  double support() const { return radii.empty() ? 0.0 : radii.back(); }
  friend bool operator==(const StepProfile&, const StepProfile&) = default;
};

// b(x, eta) = k ^ #{y in eta : |x - y| <= radius}
struct TruncatedIndicator {
  double cap;
  double radius;
  friend bool operator==(const TruncatedIndicator&, const TruncatedIndicator&) = default;
};

// b(x, eta) = #{y in eta : |x - y| <= radius}
struct FreeIndicator {
  double radius;
  friend bool operator==(const FreeIndicator&, const FreeIndicator&) = default;
};

// b(x, eta) = [k ^] scale * sum_y profile(|x - y|)
struct SumKernel {
  StepProfile profile;
  double scale;
  std::optional<double> cap;
  friend bool operator==(const SumKernel&, const SumKernel&) = default;
};

// Lattice-only: b(x, eta) = k ^ sum_y a_pow(x - y) on Z, with
// a_pow(0) = 2 c_pow, a_pow(x) = c_pow / (|x| + 1)^alpha, truncated where the
// discarded two-sided tail mass drops below kPowerLawTailMass.
struct DiscretePowerLaw {
  double alpha;
  double cap;
  friend bool operator==(const DiscretePowerLaw&, const DiscretePowerLaw&) = default;
};

inline constexpr double kPowerLawTailMass = 5e-10;

class PowerLawTable {
 public:
  explicit PowerLawTable(double alpha);

  double alpha() const { return alpha_; }
  double normalizer() const { return c_pow_; }
  std::int64_t truncation_radius() const { return static_cast<std::int64_t>(values_.size()) - 1; }
  double operator()(std::int64_t offset) const {
    const std::int64_t a = offset < 0 ? -offset : offset;
    return a < static_cast<std::int64_t>(values_.size()) ? values_[static_cast<std::size_t>(a)] : 0.0;
  }
  // Two-sided mass beyond the truncation radius.
  double tail_mass() const { return tail_mass_; }

 private:
  double alpha_;
  double c_pow_;
  double tail_mass_;
  std::vector<double> values_;
};

// sum_{m >= n} m^-alpha, n >= 1, alpha > 1.
double power_tail_sum(double alpha, std::int64_t n);

// Canonical continuum form shared by every non-lattice family:
// b(x, eta) = cap ^ sum_j weight_j * #{y : |x - y| <= radius_j}, radii ascending.
struct BallTerm {
  double radius;
  double weight;
};

struct BallSum {
  std::vector<BallTerm> terms;
  double cap;  // +inf when uncapped

  bool capped() const;
  double range() const { return terms.empty() ? 0.0 : terms.back().radius; }
  // Combine per-term neighbour counts into the rate. Every evaluation path goes
  // through here so that results are bit-identical across evaluators.
  double combine(const std::int64_t* counts) const;
  // Integral over R^d of the uncapped single-particle profile.
  double single_particle_mass(int dimension) const;
  // Uncapped single-particle profile a(|x|).
  double profile(double rho) const;
};

double ball_volume(int dimension, double radius);

class BirthKernel {
 public:
  using Variant = std::variant<TruncatedIndicator, FreeIndicator, SumKernel, DiscretePowerLaw>;

  // Throws std::invalid_argument if the parameters violate the family's invariants.
  BirthKernel(Variant v);  // NOLINT(google-explicit-constructor)
  BirthKernel(TruncatedIndicator v) : BirthKernel(Variant(v)) {}  // NOLINT
  BirthKernel(FreeIndicator v) : BirthKernel(Variant(v)) {}  // NOLINT
  BirthKernel(SumKernel v) : BirthKernel(Variant(std::move(v))) {}  // NOLINT
  BirthKernel(DiscretePowerLaw v) : BirthKernel(Variant(v)) {}  // NOLINT

  static BirthKernel truncated(double cap, double radius) { return TruncatedIndicator{cap, radius}; }
  static BirthKernel free(double radius) { return FreeIndicator{radius}; }
  static BirthKernel power_law(double alpha, double cap) { return DiscretePowerLaw{alpha, cap}; }

  const Variant& variant() const { return v_; }
  bool is_lattice() const { return std::holds_alternative<DiscretePowerLaw>(v_); }
  std::optional<double> cap() const;
  double interaction_range() const;

  // Continuum families only.
  const BallSum& balls() const;
  // Lattice family only.
  const PowerLawTable& power_law_table() const;

  std::string to_string() const;
  static BirthKernel parse(std::string_view spec);

  friend bool operator==(const BirthKernel& a, const BirthKernel& b) { return a.v_ == b.v_; }

 private:
  Variant v_;
  BallSum balls_;
  std::optional<PowerLawTable> table_;
};

// Exact representation of b1 + b2 inside the supported families, when one exists.
// Throws std::invalid_argument otherwise.
BirthKernel kernel_sum(const BirthKernel& a, const BirthKernel& b);

std::string format_double(double v);

}  // namespace birthsim

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "birthsim/configuration.hpp"
#include "birthsim/engine.hpp"
#include "birthsim/event_log.hpp"
#include "birthsim/front.hpp"
#include "birthsim/kernel.hpp"
#include "birthsim/reduced.hpp"

namespace birthsim {

struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kUnreached = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kMinWindowEvents = 10;

struct SpeedEstimate {
  double slope = 0.0;
  double std_error = 0.0;  // between-replica; 0 with one replica
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::size_t replicas = 0;
  std::vector<double> per_replica;
};

// Least-squares slope of each front over the trailing window
// [t_end (1 - window_fraction), t_end], using the front value at the window start
// and at every change point inside it; pooled as mean and standard error of
// the per-replica slopes. Throws InsufficientDataError when a window holds
// fewer than kMinWindowEvents front changes.
SpeedEstimate estimate_speed(const std::vector<FrontSeries>& fronts, double window_fraction = 0.5);
SpeedEstimate estimate_speed(const std::vector<EventLog>& logs, Vec direction, double window_fraction = 0.5);
double window_slope(const FrontSeries& front, double window_fraction);

struct SpeedRunOptions {
  double window_fraction = 0.5;
  bool both_sides = true;  // 1D: average the right and left front slopes per replica
  SimulationOptions sim;
};

// Simulates `replicas` independent runs (replica index = stream) and measures
// the front speed along +e1, streaming fronts without keeping the logs.
SpeedEstimate measure_speed(const BirthKernel& kernel, const Configuration& initial, std::size_t replicas,
                            double t_end, std::uint64_t seed, const SpeedRunOptions& options = {});
SpeedEstimate measure_restricted_brw_speed(std::size_t n_cap, std::size_t replicas, double t_end, std::uint64_t seed,
                                           double window_fraction = 0.5);

struct HittingTarget {
  Vec x;
  double lambda;
};

struct HittingRecord {
  Vec x;
  double lambda;
  double T;  // kUnreached if the ball was never entered
  bool reached() const { return T != kUnreached; }
};

// T_lambda(x) = first time a particle lies in the closed ball B(x, lambda |x|);
// 0 if the initial configuration already meets it. Requires lambda in (0, 1), x != 0.
std::vector<HittingRecord> hitting_times(const EventLog& log, const std::vector<HittingTarget>& targets);

struct BallEntry {
  double T;  // kUnreached if never
  Vec z;     // the entering particle
};
// First time after t_from that a particle lies in B(center, radius).
BallEntry first_entry(const EventLog& log, Vec center, double radius, double t_from = 0.0);

struct SubadditiveSeries {
  std::vector<std::size_t> n;
  std::vector<double> ratio;          // s_{0,n} / n
  std::vector<double> stabilization;  // |ratio(2n) - ratio(n)| / ratio(n), for 2n <= N
};

// records[i] is T_lambda((i+1) x); needs N >= 8 records.
SubadditiveSeries subadditive_ratios(const std::vector<HittingRecord>& records);

struct SuperadditivityReport {
  SpeedEstimate s1, s2, s12;
  double lhs = 0.0;  // s(b1) + s(b2)
  double rhs = 0.0;  // s(b1 + b2)
  double pooled_se = 0.0;
  bool holds = false;  // lhs <= rhs + 3 pooled_se
  std::string kernel_sum;
  static constexpr const char* label = "EXPLORATORY";
};

// A missing kernel stands for b = 0, whose speed is 0.
SuperadditivityReport superadditivity_experiment(const std::optional<BirthKernel>& b1,
                                                 const std::optional<BirthKernel>& b2, std::size_t replicas,
                                                 double t_end, std::uint64_t seed,
                                                 const SpeedRunOptions& options = {});

struct OccupationReport {
  std::vector<double> bin_lo, bin_hi, occupation, g_mass;
  double sup_norm = 0.0;          // max |occupation - g_mass|
  double sup_density_gap = 0.0;   // max |occupation - g_mass| / bin width
  double chi_square = 0.0;        // sum (occupation - g_mass)^2 / g_mass
  double total_time = 0.0;
};

// Time-weighted occupation of [0, 1] bins against int_bin g. Needs total time >= 1e3.
OccupationReport gap_occupation_vs_g(const GapTrajectory& trajectory, int bins);

}  // namespace birthsim

#pragma once

#include <cstdint>
#include <vector>

namespace birthsim {

// Gap chain z = x1 - x2 of the 1D k = 2 truncated model.
// q(z, y) = 4 1{y <= z} + 2 1{z <= y <= 1-z} + 1{y >= 1-z},  z <= 1/2
// q(z, y) = 4 1{y <= 1-z} + 3 1{1-z <= y <= z} + 1{y >= z},  z >= 1/2
double gap_jump_density(double z, double y);
double gap_total_rate(double z);  // 2 + z

struct GapChainState {
  double z;
  double t;
};

// Right-continuous step path: state z[i] on [times[i], times[i+1]).
struct GapTrajectory {
  std::vector<double> times;
  std::vector<double> z;
  double t_end = 0.0;

  std::size_t jumps() const { return times.empty() ? 0 : times.size() - 1; }
  GapChainState state(std::size_t i) const { return {z[i], times[i]}; }
  double at(double t) const;
  // z(burn_in + i*spacing) for i = 0.. while inside [0, t_end].
  std::vector<double> sample(double burn_in, double spacing, std::size_t max_samples) const;
};

// Stops at t_end, or after max_jumps jumps when max_jumps > 0 (then t_end is
// the time of the last jump). Throws std::invalid_argument for z0 outside [0, 1].
GapTrajectory simulate_gap_chain(double z0, double t_end, std::uint64_t seed, std::uint64_t max_jumps = 0);

struct TwoPointState {
  double x1;
  double x2;
  double t;
};

struct TwoPointTrajectory {
  std::vector<double> times;
  std::vector<double> x1;
  std::vector<double> x2;
  double t_end = 0.0;

  std::size_t jumps() const { return times.empty() ? 0 : times.size() - 1; }
  TwoPointState state(std::size_t i) const { return {x1[i], x2[i], times[i]}; }
  // Gap path z = x1 - x2 as a gap trajectory.
  GapTrajectory gap() const;
};

// Rightmost and second-rightmost positions, started from x1 = x2 = 0:
// (x1, x2) -> (v, x1) at rate 1, v in (x2+1, x1+1]
// (x1, x2) -> (v, x1) at rate 2, v in (x1, x2+1]
// (x1, x2) -> (x1, v) at rate 2, v in (x2, x1]
TwoPointTrajectory simulate_two_point(double t_end, std::uint64_t seed, std::uint64_t max_jumps = 0);

}  // namespace birthsim

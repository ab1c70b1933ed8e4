#pragma once

#include <optional>
#include <vector>

#include "birthsim/configuration.hpp"
#include "birthsim/event_log.hpp"
#include "birthsim/stats.hpp"

namespace birthsim {

struct ShapeReport {
  int sectors = 0;
  double t = 0.0;
  std::size_t particles = 0;
  std::vector<double> sector_counts;
  std::vector<double> sector_radius;  // (max |x| over the sector + r) / t
  double mean_radius = 0.0;
  double relative_spread = 0.0;       // (max - min) / mean of sector_radius
  TestResult chi_square{};            // sector counts against uniform
  double stabilization = 0.0;         // |mean radius(t) - mean radius(t/2)| / mean radius(t)
};

// Angular statistics of a 2D configuration about the origin at time t
// (default: the log's t_end). r is the radius of the balls in xi_t.
// Throws InsufficientDataError below 1000 particles.
ShapeReport shape_statistics(const EventLog& log, int sectors, double r, std::optional<double> t = std::nullopt);
ShapeReport shape_statistics(const Configuration& config, int sectors, double r, double t);

struct PooledShape {
  ClusteredChiSquare isotropy;
  std::vector<double> sector_radius;  // averaged over seeds
  double relative_spread = 0.0;
  std::size_t seeds = 0;
};
PooledShape pool_shapes(const std::vector<ShapeReport>& reports);

}  // namespace birthsim

#include "birthsim/shape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "birthsim/analytics.hpp"

namespace birthsim {

namespace {

struct SectorScan {
  std::vector<double> counts;
  std::vector<double> radius;
};

SectorScan scan(const Configuration& c, int sectors, double r, double t) {
  SectorScan s{std::vector<double>(static_cast<std::size_t>(sectors), 0.0),
               std::vector<double>(static_cast<std::size_t>(sectors), 0.0)};
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto p = c.point(i);
    const double phi = std::atan2(p[1], p[0]) + std::numbers::pi;
    auto k = static_cast<std::size_t>(phi / (2.0 * std::numbers::pi) * sectors);
    if (k >= static_cast<std::size_t>(sectors)) k = static_cast<std::size_t>(sectors) - 1;
    s.counts[k] += 1.0;
    s.radius[k] = std::max(s.radius[k], std::hypot(p[0], p[1]));
  }
  for (auto& v : s.radius) v = (v + r) / t;
  return s;
}

double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return (*hi - *lo) / mean;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ShapeReport shape_statistics(const Configuration& config, int sectors, double r, double t) {
  if (config.dimension() != 2) throw std::invalid_argument("shape statistics need a 2D configuration");
  if (sectors < 2) throw std::invalid_argument("shape statistics need at least two sectors");
  if (!(t > 0.0)) throw std::invalid_argument("shape statistics need t > 0");
  if (config.size() < 1000) {
    throw InsufficientDataError("shape statistics need >= 1000 particles, have " + std::to_string(config.size()));
  }
  ShapeReport rep;
  rep.sectors = sectors;
  rep.t = t;
  rep.particles = config.size();
  const SectorScan s = scan(config, sectors, r, t);
  rep.sector_counts = s.counts;
  rep.sector_radius = s.radius;
  rep.mean_radius = mean_of(s.radius);
  rep.relative_spread = spread(s.radius);
  const std::vector<double> uniform(static_cast<std::size_t>(sectors), 1.0 / sectors);
  rep.chi_square = chi_square_gof(s.counts, uniform);
  return rep;
}

ShapeReport shape_statistics(const EventLog& log, int sectors, double r, std::optional<double> t) {
  double t_final = t.value_or(log.t_end);
  if (!t && !log.empty()) t_final = std::max(t_final, log.time(log.size() - 1));
  ShapeReport rep = shape_statistics(log.configuration_at(t_final), sectors, r, t_final);
  const Configuration half = log.configuration_at(t_final / 2.0);
  if (!half.empty()) {
    const SectorScan s = scan(half, sectors, r, t_final / 2.0);
    rep.stabilization = std::abs(rep.mean_radius - mean_of(s.radius)) / rep.mean_radius;
  }
  return rep;
}

PooledShape pool_shapes(const std::vector<ShapeReport>& reports) {
  if (reports.size() < 2) throw std::invalid_argument("pool_shapes needs at least two seeds");
  const int sectors = reports.front().sectors;
  PooledShape p;
  p.seeds = reports.size();
  std::vector<std::vector<double>> counts;
  p.sector_radius.assign(static_cast<std::size_t>(sectors), 0.0);
  for (const auto& r : reports) {
    if (r.sectors != sectors) throw std::invalid_argument("pool_shapes: sector count mismatch");
    counts.push_back(r.sector_counts);
    for (int k = 0; k < sectors; ++k) p.sector_radius[static_cast<std::size_t>(k)] += r.sector_radius[static_cast<std::size_t>(k)];
  }
  for (auto& v : p.sector_radius) v /= static_cast<double>(reports.size());
  p.relative_spread = spread(p.sector_radius);
  const std::vector<double> uniform(static_cast<std::size_t>(sectors), 1.0 / sectors);
  p.isotropy = clustered_chi_square(counts, uniform);
  return p;
}

}  // namespace birthsim

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "birthsim/configuration.hpp"
#include "birthsim/engine.hpp"
#include "birthsim/event_log.hpp"
#include "birthsim/kernel.hpp"

namespace birthsim {

// Integer site in Z^d, d <= 2; unused coordinates are zero.
using Site = std::array<std::int64_t, 2>;

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(s[0]) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(s[1]) + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

std::int64_t l1_norm(const Site& s);

struct LatticeState {
  int dimension = 1;
  std::map<Site, std::int64_t> counts;  // nonzero sites only
  double time = 0.0;

  std::int64_t total() const;
  std::int64_t count(const Site& s) const;
  std::size_t occupied_sites() const { return counts.size(); }
};

// First occupation of each site, in occupation order (the seed site first at t = 0).
struct OccupationRecord {
  int dimension = 1;
  std::vector<Site> sites;
  std::vector<double> times;
  double t_end = 0.0;
  std::uint64_t events = 0;

  std::optional<double> first_occupation(const Site& s) const;
  bool occupied_at(const Site& s, double t) const;
  std::size_t occupied_count_at(double t) const;
  // Builds the site lookup table; the simulators call it before returning.
  void finalize();

 private:
  std::unordered_map<Site, double, SiteHash> index_;
};

struct LatticeOptions {
  std::uint64_t max_events = kDefaultMaxEvents;
  std::uint64_t replica = 0;
  std::optional<Site> stop_at;  // stop when this site becomes occupied
  std::uint64_t stop_after_events = 0;  // 0 = no limit
};

// Eden growth from the origin: a vacant site with an occupied nearest
// neighbour is occupied at rate lambda. Sampled through the boundary set.
OccupationRecord simulate_eden(double lambda, int dimension, double t_end, std::uint64_t seed,
                               const LatticeOptions& options = {});

// Unbounded-occupancy variant: alpha(z) += 1 at rate lambda whenever z or a
// nearest neighbour carries a particle.
struct OccupancyRun {
  LatticeState state;
  OccupationRecord record;
};
OccupancyRun simulate_occupancy_growth(double lambda, int dimension, double t_end, std::uint64_t seed,
                                       const LatticeOptions& options = {});

struct PowerLawRun {
  double alpha = 0.0;
  double cap = 0.0;
  LatticeState state;
  OccupationRecord record;
  std::uint64_t near_proposals = 0;
  std::uint64_t far_proposals = 0;
};

// 1D lattice birth process with rate k ^ sum_y alpha_t(y) a_pow(x - y) started
// from one particle at 0. Exact: a dense near-field rate profile plus a
// thinned far-field proposal. Births may stack on a site.
PowerLawRun simulate_discrete_powerlaw(double alpha, double cap, double t_end, std::uint64_t seed,
                                       const LatticeOptions& options = {}, EventSink* sink = nullptr);

// Vacant sites inside the hull of the occupied set, over the hull length (1D).
double gap_fraction(const LatticeState& state);

// Cells z*cell + (-cell/2, cell/2]^d.
Site lattice_cell(std::span<const double> x, double cell);
LatticeState project_configuration(const Configuration& config, double cell);
LatticeState project_to_lattice(const EventLog& log, double cell, double t);
// Projection at each event time, sampled at the given times.
std::vector<LatticeState> project_to_lattice(const EventLog& log, double cell, const std::vector<double>& times);

// Replays a lattice event log (stacked births allowed).
LatticeState lattice_state_at(const EventLog& log, double t);

// Continuum process whose projection onto cells of side `cell` is the
// unbounded-occupancy lattice process with lambda = c0 * cell^d:
// b(x, eta) = c0 * 1{the cell of x or a nearest-neighbour cell holds a point}.
// With cell = r / (2d) it is dominated by any kernel with witness (c0, r).
class CellNeighbourTracker final : public RateTracker {
 public:
  CellNeighbourTracker(int dimension, double c0, double cell, const Configuration& initial);
  double rate(std::span<const double> x) const override;
  void commit(const Vec& x) override;
  std::string description() const;

 private:
  int dim_;
  double c0_;
  double cell_;
  std::unordered_map<Site, std::int64_t, SiteHash> counts_;
};

void write_occupation_csv(const OccupationRecord& record, std::ostream& out);
EventLog occupation_log(const OccupationRecord& record, const std::string& model, std::uint64_t seed);

}  // namespace birthsim

#pragma once

#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "birthsim/configuration.hpp"
#include "birthsim/event_log.hpp"
#include "birthsim/front.hpp"
#include "birthsim/kernel.hpp"
#include "birthsim/samplers.hpp"

namespace birthsim {

struct ExplosionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a coupled run finds b_lo > b_hi at a mark.
struct CouplingError : std::logic_error {
  using std::logic_error::logic_error;
};

inline constexpr std::uint64_t kDefaultMaxEvents = 100'000'000;

struct SimulationOptions {
  std::uint64_t max_events = kDefaultMaxEvents;
  SamplerKind sampler = SamplerKind::automatic;
  std::uint64_t replica = 0;  // dynamics stream = stream_id(replica, dynamics)
  std::size_t max_size = 0;   // stop once |eta| reaches this; 0 = no limit
};

struct RunSummary {
  std::uint64_t events = 0;
  double t_last = 0.0;  // time of the last event, 0 if none
  std::size_t final_size = 0;
  std::uint64_t proposals = 0;
  bool stopped_on_size = false;
};

// Exact next-event simulation on [0, t_end]. t_end = 0 yields no events.
// Throws std::invalid_argument for t_end < 0, an empty initial configuration
// or a lattice kernel, and ExplosionError past max_events.
EventLog simulate(const BirthKernel& kernel, const Configuration& initial, double t_end, std::uint64_t seed,
                  const SimulationOptions& options = {});
RunSummary simulate_streaming(const BirthKernel& kernel, const Configuration& initial, double t_end,
                              std::uint64_t seed, EventSink& sink, const SimulationOptions& options = {});

// Rate b_lo(x, eta_lo) of the dominated process of a coupled run.
class RateTracker {
 public:
  virtual ~RateTracker() = default;
  virtual double rate(std::span<const double> x) const = 0;
  virtual void commit(const Vec& x) = 0;
};

std::unique_ptr<RateTracker> make_rate_tracker(const BirthKernel& kernel, const Configuration& initial);

struct CouplingOptions {
  SimulationOptions sim;
  // The lo process sees only marks after this time; its initial
  // configuration must be contained in eta_hi at that moment.
  double lo_start = 0.0;
  // Throw CouplingError on a rate-order breach instead of counting it.
  bool strict = true;
};

struct CouplingStats {
  std::uint64_t rate_checks = 0;
  std::uint64_t order_violations = 0;
  std::uint64_t inclusion_violations = 0;
};

struct CoupledRun {
  EventLog lo;
  EventLog hi;
  CouplingStats stats;
};

// Shared-mark coupling: hi is simulated exactly, each hi birth carries a
// uniform mark U from the coupling stream, and lo accepts the same point iff
// U * b_hi(x) < b_lo(x). The hi log equals simulate(kernel_hi, ...) bit for bit.
CoupledRun simulate_coupled(const BirthKernel& kernel_lo, const BirthKernel& kernel_hi,
                            const Configuration& initial_lo, const Configuration& initial_hi, double t_end,
                            std::uint64_t seed, const CouplingOptions& options = {});
CoupledRun simulate_dominated(RateTracker& lo, const std::string& lo_description, const BirthKernel& kernel_hi,
                              const Configuration& initial_lo, const Configuration& initial_hi, double t_end,
                              std::uint64_t seed, const CouplingOptions& options = {});

// Free indicator branching (r = 1, d = 1) from {0}; after each birth the
// leftmost particle is removed while |eta| > n_cap.
RunSummary simulate_restricted_brw(std::size_t n_cap, double t_end, std::uint64_t seed, EventSink& sink,
                                   const SimulationOptions& options = {});
EventLog simulate_restricted_brw(std::size_t n_cap, double t_end, std::uint64_t seed,
                                 const SimulationOptions& options = {});

// Runs f(0..n-1) with OpenMP and returns results in index order. The first
// exception (lowest index) is rethrown after all tasks finish.
template <class F>
auto replica_map(std::size_t n, F&& f) -> std::vector<decltype(f(std::size_t{0}))> {
  using R = decltype(f(std::size_t{0}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      slots[static_cast<std::size_t>(i)].emplace(f(static_cast<std::size_t>(i)));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// Serial reference with the same contract.
template <class F>
auto replica_map_serial(std::size_t n, F&& f) -> std::vector<decltype(f(std::size_t{0}))> {
  std::vector<decltype(f(std::size_t{0}))> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(f(i));
  return out;
}

}  // namespace birthsim

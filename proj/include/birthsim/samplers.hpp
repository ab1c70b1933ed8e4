#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>

#include "birthsim/configuration.hpp"
#include "birthsim/kernel.hpp"
#include "birthsim/rng.hpp"

namespace birthsim {

// Next birth of the pure-birth process from the current configuration.
struct Birth {
  double dt;  // waiting time; +inf when the total rate is zero
  Vec x;
};

enum class SamplerKind {
  automatic,
  interval_profile,  // 1D, capped: exact inverse CDF of the step profile
  cell_envelope,     // 2D, capped: cell proposal + thinning against per-cell bounds
  mixture,           // parent-uniform offspring proposal, thinned to the cap if any
};

// Exact sampler for b(., eta) / c(eta). next() never mutates the
// configuration; commit() inserts the accepted point.
class BirthSampler {
 public:
  virtual ~BirthSampler() = default;

  virtual Birth next(CounterRng& rng) = 0;
  virtual void commit(const Vec& x) = 0;
  // b(x, eta) for the current configuration.
  virtual double rate(std::span<const double> x) const = 0;

  virtual int dimension() const = 0;
  virtual std::size_t size() const = 0;
  std::uint64_t proposals() const { return proposals_; }

 protected:
  std::uint64_t proposals_ = 0;
};

std::unique_ptr<BirthSampler> make_sampler(const BirthKernel& kernel, const Configuration& initial,
                                           SamplerKind kind = SamplerKind::automatic);

SamplerKind default_sampler_kind(const BirthKernel& kernel, int dimension);

}  // namespace birthsim

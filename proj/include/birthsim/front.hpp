#pragma once

#include <set>
#include <span>
#include <vector>

#include "birthsim/configuration.hpp"
#include "birthsim/event_log.hpp"

namespace birthsim {

// Step function F(t) = max_{x in eta_t} <x, direction>, stored at its change points.
struct FrontSeries {
  std::vector<double> times;   // times[0] = 0
  std::vector<double> values;  // value on [times[i], times[i+1])
  double t_end = 0.0;

  double at(double t) const;
  std::size_t changes_in(double t_lo, double t_hi) const;
};

class FrontTracker final : public EventSink {
 public:
  // With allow_removals the tracker keeps the full multiset of projections.
  FrontTracker(const Configuration& initial, Vec direction, bool allow_removals = false);

  void on_event(double t, std::span<const double> x, EventOp op) override;
  // Closes the series at t_end.
  FrontSeries finish(double t_end);
  double current() const { return current_; }

 private:
  double project(std::span<const double> x) const;
  void record(double t, double v);

  int dim_;
  Vec direction_;
  bool allow_removals_;
  double current_;
  std::multiset<double> all_;
  FrontSeries series_;
};

FrontSeries front_series(const EventLog& log, Vec direction);

}  // namespace birthsim

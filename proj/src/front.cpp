#include "birthsim/front.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace birthsim {

double FrontSeries::at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return values.front();
  return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

std::size_t FrontSeries::changes_in(double t_lo, double t_hi) const {
  std::size_t n = 0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] >= t_lo && times[i] <= t_hi) ++n;
  }
  return n;
}

FrontTracker::FrontTracker(const Configuration& initial, Vec direction, bool allow_removals)
    : dim_(initial.dimension()), direction_(direction), allow_removals_(allow_removals) {
  if (initial.empty()) throw std::invalid_argument("FrontTracker: empty initial configuration");
  current_ = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < initial.size(); ++i) {
    const double p = project(initial.point(i));
    current_ = std::max(current_, p);
    if (allow_removals_) all_.insert(p);
  }
  series_.times.push_back(0.0);
  series_.values.push_back(current_);
}

double FrontTracker::project(std::span<const double> x) const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) s += x[static_cast<std::size_t>(i)] * direction_[static_cast<std::size_t>(i)];
  return s;
}

void FrontTracker::record(double t, double v) {
  if (v == current_) return;
  current_ = v;
  if (series_.times.back() == t) {
    series_.values.back() = v;
    // A birth and its removal at the same instant may restore the old value.
    if (series_.values.size() >= 2 && series_.values[series_.values.size() - 2] == v) {
      series_.times.pop_back();
      series_.values.pop_back();
    }
    return;
  }
  series_.times.push_back(t);
  series_.values.push_back(v);
}

void FrontTracker::on_event(double t, std::span<const double> x, EventOp op) {
  const double p = project(x);
  if (op == EventOp::birth) {
    if (allow_removals_) all_.insert(p);
    if (p > current_) record(t, p);
    return;
  }
  if (!allow_removals_) throw std::logic_error("FrontTracker: removal in a pure-birth stream");
  auto it = all_.find(p);
  if (it == all_.end()) throw std::logic_error("FrontTracker: removal of an untracked point");
  all_.erase(it);
  if (all_.empty()) throw std::logic_error("FrontTracker: configuration became empty");
  record(t, *all_.rbegin());
}

FrontSeries FrontTracker::finish(double t_end) {
  FrontSeries s = series_;
  s.t_end = t_end;
  return s;
}

FrontSeries front_series(const EventLog& log, Vec direction) {
  bool removals = false;
  for (std::size_t i = 0; i < log.size() && !removals; ++i) removals = log.op(i) == EventOp::remove;
  FrontTracker tr(log.initial(), direction, removals);
  for (std::size_t i = 0; i < log.size(); ++i) tr.on_event(log.time(i), log.position(i), log.op(i));
  double t_end = log.t_end;
  if (!log.empty()) t_end = std::max(t_end, log.time(log.size() - 1));
  return tr.finish(t_end);
}

}  // namespace birthsim

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "birthsim/configuration.hpp"

namespace birthsim {

enum class EventOp : std::uint8_t { birth, remove };

// Receives events as they happen. Long runs stream into a sink instead of
// materialising the full log.
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void on_event(double t, std::span<const double> x, EventOp op) = 0;
};

// Ordered events of one run. Birth times strictly increase; a removal
// carries the time of the birth that triggered it.
class EventLog {
 public:
  EventLog(int dimension, Configuration initial);

  int dimension() const { return dim_; }
  const Configuration& initial() const { return initial_; }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }

  double time(std::size_t i) const { return times_[i]; }
  std::span<const double> position(std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  EventOp op(std::size_t i) const { return ops_[i]; }
  std::size_t births() const;

  // Throws std::invalid_argument if the ordering invariants would break.
  void append(double t, std::span<const double> x, EventOp op = EventOp::birth);

  // Replay of the initial configuration plus every event with time <= t.
  Configuration configuration_at(double t) const;
  std::size_t events_until(double t) const;

  // Header metadata.
  std::string kernel;
  std::string model = "birth";
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double t_end = 0.0;

  friend bool operator==(const EventLog& a, const EventLog& b);

 private:
  int dim_;
  Configuration initial_;
  std::vector<double> times_;
  std::vector<double> coords_;
  std::vector<EventOp> ops_;
};

class LogRecorder final : public EventSink {
 public:
  explicit LogRecorder(EventLog& log) : log_(log) {}
  void on_event(double t, std::span<const double> x, EventOp op) override { log_.append(t, x, op); }

 private:
  EventLog& log_;
};

class NullSink final : public EventSink {
 public:
  void on_event(double, std::span<const double>, EventOp) override {}
};

// Fans one event stream out to several sinks.
class TeeSink final : public EventSink {
 public:
  TeeSink(EventSink& a, EventSink& b) : a_(a), b_(b) {}
  void on_event(double t, std::span<const double> x, EventOp op) override {
    a_.on_event(t, x, op);
    b_.on_event(t, x, op);
  }

 private:
  EventSink& a_;
  EventSink& b_;
};

// JSON lines: a header record, then {"t":..,"x":[..],"op":"birth"|"remove"}.
// Doubles are written in shortest round-trip form.
void write_jsonl(const EventLog& log, std::ostream& out);
EventLog read_jsonl(std::istream& in);
void write_jsonl_file(const EventLog& log, const std::string& path);
EventLog read_jsonl_file(const std::string& path);

}  // namespace birthsim

#include "birthsim/event_log.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "birthsim/kernel.hpp"

namespace birthsim {

using nlohmann::json;

EventLog::EventLog(int dimension, Configuration initial) : dim_(dimension), initial_(std::move(initial)) {
  if (initial_.dimension() != dimension) throw std::invalid_argument("EventLog: initial configuration dimension mismatch");
}

std::size_t EventLog::births() const {
  return static_cast<std::size_t>(std::count(ops_.begin(), ops_.end(), EventOp::birth));
}

void EventLog::append(double t, std::span<const double> x, EventOp op) {
  if (x.size() != static_cast<std::size_t>(dim_)) throw std::invalid_argument("EventLog: event dimension mismatch");
  if (!(t > 0.0)) throw std::invalid_argument("EventLog: event times must be positive");
  if (!times_.empty()) {
    const double last = times_.back();
    if (op == EventOp::birth ? !(t > last) : t != last) {
      throw std::invalid_argument("EventLog: event times out of order");
    }
  } else if (op == EventOp::remove && t != 0.0) {
    throw std::invalid_argument("EventLog: removal without a triggering birth");
  }
  times_.push_back(t);
  coords_.insert(coords_.end(), x.begin(), x.end());
  ops_.push_back(op);
}

std::size_t EventLog::events_until(double t) const {
  return static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
}

Configuration EventLog::configuration_at(double t) const {
  const std::size_t n = events_until(t);
  if (std::find(ops_.begin(), ops_.begin() + static_cast<std::ptrdiff_t>(n), EventOp::remove) ==
      ops_.begin() + static_cast<std::ptrdiff_t>(n)) {
    Configuration c = initial_;
    for (std::size_t i = 0; i < n; ++i) c.add(position(i));
    return c;
  }
  // Keyed by insertion order so the replay keeps the live points in birth order.
  std::map<std::vector<double>, std::vector<std::size_t>> where;
  std::vector<std::vector<double>> points;
  std::vector<bool> alive;
  auto push = [&](std::span<const double> p) {
    std::vector<double> v(p.begin(), p.end());
    where[v].push_back(points.size());
    points.push_back(std::move(v));
    alive.push_back(true);
  };
  for (std::size_t i = 0; i < initial_.size(); ++i) push(initial_.point(i));
  for (std::size_t i = 0; i < n; ++i) {
    if (ops_[i] == EventOp::birth) {
      push(position(i));
      continue;
    }
    const std::vector<double> v(position(i).begin(), position(i).end());
    auto it = where.find(v);
    if (it == where.end() || it->second.empty()) throw std::invalid_argument("EventLog: removal of an absent point");
    alive[it->second.back()] = false;
    it->second.pop_back();
  }
  Configuration c(dim_);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (alive[i]) c.add(points[i]);
  }
  return c;
}

bool operator==(const EventLog& a, const EventLog& b) {
  return a.dim_ == b.dim_ && a.initial_ == b.initial_ && a.times_ == b.times_ && a.coords_ == b.coords_ &&
         a.ops_ == b.ops_ && a.kernel == b.kernel && a.model == b.model && a.seed == b.seed &&
         a.stream == b.stream && a.t_end == b.t_end;
}

namespace {

void write_coords(std::ostream& out, std::span<const double> x) {
  out << '[';
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) out << ',';
    out << format_double(x[i]);
  }
  out << ']';
}

}  // namespace

void write_jsonl(const EventLog& log, std::ostream& out) {
  out << "{\"type\":\"header\",\"dimension\":" << log.dimension() << ",\"model\":" << json(log.model).dump()
      << ",\"kernel\":" << json(log.kernel).dump() << ",\"seed\":" << log.seed << ",\"stream\":" << log.stream
      << ",\"t_end\":" << format_double(log.t_end) << ",\"initial\":[";
  for (std::size_t i = 0; i < log.initial().size(); ++i) {
    if (i) out << ',';
    write_coords(out, log.initial().point(i));
  }
  out << "]}\n";
  for (std::size_t i = 0; i < log.size(); ++i) {
    out << "{\"t\":" << format_double(log.time(i)) << ",\"x\":";
    write_coords(out, log.position(i));
    out << ",\"op\":\"" << (log.op(i) == EventOp::birth ? "birth" : "remove") << "\"}\n";
  }
}

EventLog read_jsonl(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("event log: missing header");
  const json h = json::parse(line);
  if (h.value("type", "") != "header") throw std::invalid_argument("event log: first record is not a header");
  const int dim = h.at("dimension").get<int>();
  Configuration initial(dim);
  for (const auto& p : h.at("initial")) initial.add(p.get<std::vector<double>>());
  EventLog log(dim, std::move(initial));
  log.model = h.at("model").get<std::string>();
  log.kernel = h.at("kernel").get<std::string>();
  log.seed = h.at("seed").get<std::uint64_t>();
  log.stream = h.at("stream").get<std::uint64_t>();
  log.t_end = h.at("t_end").get<double>();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json r = json::parse(line);
    const auto op = r.at("op").get<std::string>();
    if (op != "birth" && op != "remove") throw std::invalid_argument("event log: unknown op '" + op + "'");
    const auto x = r.at("x").get<std::vector<double>>();
    log.append(r.at("t").get<double>(), x, op == "birth" ? EventOp::birth : EventOp::remove);
  }
  return log;
}

void write_jsonl_file(const EventLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_jsonl(log, out);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

EventLog read_jsonl_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_jsonl(in);
}

}  // namespace birthsim

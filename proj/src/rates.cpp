#include "birthsim/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "birthsim/rng.hpp"

namespace birthsim {

namespace {

void require_dimension(std::span<const double> x, const Configuration& c) {
  if (x.size() != static_cast<std::size_t>(c.dimension())) {
    throw std::invalid_argument("evaluate_rate: query has dimension " + std::to_string(x.size()) +
                                ", configuration has " + std::to_string(c.dimension()));
  }
}

std::int64_t as_site(double v, const char* what) {
  if (std::floor(v) != v || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("lattice kernel: ") + what + " must be an integer site");
  }
  return static_cast<std::int64_t>(v);
}

double lattice_rate(const BirthKernel& kernel, std::span<const double> x, const Configuration& c) {
  if (c.dimension() != 1) throw std::invalid_argument("lattice kernel: only d = 1 is supported");
  const auto& table = kernel.power_law_table();
  const std::int64_t site = as_site(x[0], "query");
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += table(site - as_site(c.point(i)[0], "particle"));
  return std::min(*kernel.cap(), s);
}

struct Neumaier {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) comp += (sum - t) + v;
    else comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

double total_rate_1d(const BallSum& k, const Configuration& c) {
  struct Edge {
    double pos;
    std::uint32_t term;
    int delta;
  };
  std::vector<Edge> edges;
  edges.reserve(c.size() * k.terms.size() * 2);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double y = c.point(i)[0];
    for (std::uint32_t j = 0; j < k.terms.size(); ++j) {
      edges.push_back({y - k.terms[j].radius, j, +1});
      edges.push_back({y + k.terms[j].radius, j, -1});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.pos < b.pos; });
  std::vector<std::int64_t> counts(k.terms.size(), 0);
  Neumaier total;
  std::size_t i = 0;
  while (i < edges.size()) {
    const double here = edges[i].pos;
    while (i < edges.size() && edges[i].pos == here) {
      counts[edges[i].term] += edges[i].delta;
      ++i;
    }
    if (i < edges.size()) total.add(k.combine(counts.data()) * (edges[i].pos - here));
  }
  return total.value();
}

struct Rect {
  double x0, x1, y0, y1;
  double area() const { return (x1 - x0) * (y1 - y0); }
};

struct Disk {
  double cx, cy, r;
  std::uint32_t term;
};

constexpr int kMaxDepth = 26;

void decompose(const BallSum& k, const Rect& rc, const std::vector<Disk>& disks, std::vector<std::int64_t> base,
               int depth, double& value, double& err) {
  std::vector<Disk> crossing;
  for (const auto& d : disks) {
    const double nx = std::clamp(d.cx, rc.x0, rc.x1) - d.cx;
    const double ny = std::clamp(d.cy, rc.y0, rc.y1) - d.cy;
    const double r2 = d.r * d.r;
    if (nx * nx + ny * ny > r2) continue;
    const double fx = std::max(std::abs(rc.x0 - d.cx), std::abs(rc.x1 - d.cx));
    const double fy = std::max(std::abs(rc.y0 - d.cy), std::abs(rc.y1 - d.cy));
    if (fx * fx + fy * fy <= r2) {
      ++base[d.term];
    } else {
      crossing.push_back(d);
    }
  }
  const double v_base = k.combine(base.data());
  const double area = rc.area();
  if (crossing.empty() || (k.capped() && v_base >= k.cap)) {
    value += area * v_base;
    return;
  }
  if (crossing.size() == 1) {
    const auto& d = crossing.front();
    const double inside = rect_disk_area(rc.x0, rc.x1, rc.y0, rc.y1, d.cx, d.cy, d.r);
    auto with = base;
    ++with[d.term];
    value += inside * k.combine(with.data()) + (area - inside) * v_base;
    return;
  }
  if (depth >= kMaxDepth) {
    auto upper = base;
    for (const auto& d : crossing) ++upper[d.term];
    const double v_hi = k.combine(upper.data());
    value += area * 0.5 * (v_base + v_hi);
    err += area * 0.5 * (v_hi - v_base);
    return;
  }
  const double mx = 0.5 * (rc.x0 + rc.x1);
  const double my = 0.5 * (rc.y0 + rc.y1);
  const Rect quads[4] = {{rc.x0, mx, rc.y0, my}, {mx, rc.x1, rc.y0, my}, {rc.x0, mx, my, rc.y1}, {mx, rc.x1, my, rc.y1}};
  for (const auto& q : quads) decompose(k, q, crossing, base, depth + 1, value, err);
}

TotalRate total_rate_2d(const BallSum& k, const Configuration& c) {
  const double range = k.range();
  GridIndex grid(2, range);
  grid.insert_all(c);
  // Every cell within one step of an occupied cell can carry rate.
  std::vector<std::array<std::int64_t, 2>> cells;
  {
    std::unordered_set<std::uint64_t> seen;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto p = c.point(i);
      const std::int64_t ix = grid.cell_coord(p[0]);
      const std::int64_t iy = grid.cell_coord(p[1]);
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          const double probe[2] = {(static_cast<double>(ix + dx) + 0.5) * range, (static_cast<double>(iy + dy) + 0.5) * range};
          if (seen.insert(grid.key_of(probe)).second) cells.push_back({ix + dx, iy + dy});
        }
      }
    }
    std::sort(cells.begin(), cells.end());
  }
  std::vector<double> values(cells.size(), 0.0);
  std::vector<double> errors(cells.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t n = 0; n < cells.size(); ++n) {
    const Rect rc{static_cast<double>(cells[n][0]) * range, static_cast<double>(cells[n][0] + 1) * range,
                  static_cast<double>(cells[n][1]) * range, static_cast<double>(cells[n][1] + 1) * range};
    const double centre[2] = {0.5 * (rc.x0 + rc.x1), 0.5 * (rc.y0 + rc.y1)};
    std::vector<Disk> disks;
    grid.for_each_candidate(centre, [&](std::size_t i) {
      const auto y = grid.point(i);
      for (std::uint32_t j = 0; j < k.terms.size(); ++j) disks.push_back({y[0], y[1], k.terms[j].radius, j});
    });
    double v = 0.0, e = 0.0;
    decompose(k, rc, disks, std::vector<std::int64_t>(k.terms.size(), 0), 0, v, e);
    values[n] = v;
    errors[n] = e;
  }
  Neumaier total, err;
  for (std::size_t n = 0; n < cells.size(); ++n) {
    total.add(values[n]);
    err.add(errors[n]);
  }
  return {total.value(), err.value()};
}

double lattice_total(const BirthKernel& kernel, const Configuration& c) {
  if (c.dimension() != 1) throw std::invalid_argument("lattice kernel: only d = 1 is supported");
  const auto& table = kernel.power_law_table();
  const std::int64_t R = table.truncation_radius();
  std::vector<std::int64_t> sites;
  for (std::size_t i = 0; i < c.size(); ++i) sites.push_back(as_site(c.point(i)[0], "particle"));
  const auto [lo, hi] = std::minmax_element(sites.begin(), sites.end());
  std::vector<double> s(static_cast<std::size_t>(*hi - *lo + 2 * R + 1), 0.0);
  const std::int64_t origin = *lo - R;
  for (std::int64_t y : sites) {
    for (std::int64_t d = -R; d <= R; ++d) s[static_cast<std::size_t>(y + d - origin)] += table(d);
  }
  Neumaier total;
  for (double v : s) total.add(std::min(*kernel.cap(), v));
  return total.value();
}

}  // namespace

double evaluate_rate(const BirthKernel& kernel, std::span<const double> x, const Configuration& config) {
  require_dimension(x, config);
  if (kernel.is_lattice()) return lattice_rate(kernel, x, config);
  return brute_force_rate(kernel.balls(), x, config);
}

double rect_disk_area(double x0, double x1, double y0, double y1, double cx, double cy, double r) {
  // Integrate the clipped chord length over x, splitting where the circle
  // crosses y0 or y1 so each piece has a closed-form antiderivative.
  x0 -= cx; x1 -= cx; y0 -= cy; y1 -= cy;
  const double a = std::max(x0, -r);
  const double b = std::min(x1, r);
  if (!(a < b) || !(y0 < y1)) return 0.0;
  const double r2 = r * r;
  std::vector<double> cuts = {a, b};
  for (double y : {y0, y1}) {
    if (std::abs(y) < r) {
      const double x = std::sqrt(r2 - y * y);
      for (double cut : {-x, x}) {
        if (cut > a && cut < b) cuts.push_back(cut);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  auto chord = [&](double x) { return std::sqrt(std::max(0.0, r2 - x * x)); };
  auto prim = [&](double x) {  // antiderivative of sqrt(r^2 - x^2)
    const double u = std::clamp(x / r, -1.0, 1.0);
    return 0.5 * (x * chord(x) + r2 * std::asin(u));
  };
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double u = cuts[i], v = cuts[i + 1];
    if (!(v > u)) continue;
    const double s = chord(0.5 * (u + v));
    const bool top_is_line = y1 <= s;
    const bool bottom_is_line = y0 >= -s;
    const double top = top_is_line ? y1 : s;
    const double bottom = bottom_is_line ? y0 : -s;
    if (top <= bottom) continue;
    const double sqrt_part = prim(v) - prim(u);
    double piece = 0.0;
    piece += top_is_line ? y1 * (v - u) : sqrt_part;
    piece -= bottom_is_line ? y0 * (v - u) : -sqrt_part;
    area += piece;
  }
  return area;
}

TotalRate total_rate_with_bound(const BirthKernel& kernel, const Configuration& config) {
  if (config.empty()) throw std::invalid_argument("total_rate: empty configuration");
  if (kernel.is_lattice()) return {lattice_total(kernel, config), 0.0};
  const auto& k = kernel.balls();
  if (!k.capped()) {
    // Linearity: every particle contributes the full single-particle mass.
    return {static_cast<double>(config.size()) * k.single_particle_mass(config.dimension()), 0.0};
  }
  switch (config.dimension()) {
    case 1: return {total_rate_1d(k, config), 0.0};
    case 2: return total_rate_2d(k, config);
    default: throw std::invalid_argument("total_rate: capped kernels are supported for d <= 2");
  }
}

double total_rate(const BirthKernel& kernel, const Configuration& config) {
  return total_rate_with_bound(kernel, config).value;
}

std::vector<double> evaluate_rates(const BallSum& kernel, const GridIndex& index, std::span<const double> queries) {
  const auto d = static_cast<std::size_t>(index.dimension());
  const std::size_t n = queries.size() / d;
  std::vector<double> out(n);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) out[i] = index.rate(kernel, queries.subspan(i * d, d));
  return out;
}

std::vector<double> evaluate_rates_reference(const BallSum& kernel, const Configuration& config,
                                             std::span<const double> queries) {
  const auto d = static_cast<std::size_t>(config.dimension());
  const std::size_t n = queries.size() / d;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = brute_force_rate(kernel, queries.subspan(i * d, d), config);
  return out;
}

NonDegeneracyWitness witness_for(const BirthKernel& kernel) {
  if (kernel.is_lattice()) {
    return {std::min(*kernel.cap(), kernel.power_law_table()(1)), 1.0};
  }
  const auto& k = kernel.balls();
  // Inside the outermost step every particle contributes at least its weight.
  return {std::min(k.cap, k.terms.back().weight), k.terms.back().radius};
}

RateModel rate_model(const BirthKernel& kernel, int dimension) {
  RateModel m;
  m.lattice = kernel.is_lattice();
  m.dimension = m.lattice ? 1 : dimension;
  m.rate = [kernel](std::span<const double> x, const Configuration& c) { return evaluate_rate(kernel, x, c); };
  if (m.lattice) {
    m.dominating = [kernel](std::span<const double> x) {
      return kernel.power_law_table()(static_cast<std::int64_t>(x[0]));
    };
  } else {
    m.dominating = [kernel](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return kernel.balls().profile(std::sqrt(s));
    };
  }
  m.witness = witness_for(kernel);
  return m;
}

namespace {

std::string describe(std::span<const double> x, const Configuration& c) {
  std::ostringstream os;
  os.precision(17);
  os << "x=(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ") eta={";
  for (std::size_t i = 0; i < c.size(); ++i) {
    os << (i ? " " : "") << "(";
    const auto p = c.point(i);
    for (std::size_t j = 0; j < p.size(); ++j) os << (j ? "," : "") << p[j];
    os << ")";
  }
  os << "}";
  return os.str();
}

void record(CheckResult& r, bool ok, const std::function<std::string()>& what) {
  ++r.trials;
  if (ok) ++r.passed;
  else if (!r.counterexample) r.counterexample = what();
}

}  // namespace

ConditionReport check_conditions(const RateModel& model, std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("check_conditions: trials must be >= 1");
  CounterRng rng(seed, stream_id(0, StreamPurpose::fixtures));
  const int d = model.dimension;
  const double span = model.lattice ? 6.0 : 2.0 * std::max(1.0, model.witness.r);
  auto coord = [&] {
    const double v = rng.uniform(-span, span);
    return model.lattice ? std::round(v) : v;
  };
  auto random_config = [&](std::size_t n) {
    Configuration c(d);
    while (c.size() < n) {
      std::vector<double> p(static_cast<std::size_t>(d));
      for (auto& v : p) v = coord();
      if (!c.contains(p)) c.add(p);
    }
    return c;
  };
  auto random_point = [&] {
    std::vector<double> p(static_cast<std::size_t>(d));
    for (auto& v : p) v = coord() * 1.5;
    if (model.lattice) for (auto& v : p) v = std::round(v);
    return p;
  };
  constexpr double kTol = 1e-9;

  ConditionReport rep;
  rep.witness = model.witness;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng.below(model.lattice ? 6 : 8);
    const Configuration eta = random_config(n);
    const auto x = random_point();
    const double b = model.rate(x, eta);

    // (a) b(x, eta) <= sum_y a(x - y)
    double dom = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
      std::vector<double> diff(x.size());
      for (std::size_t j = 0; j < x.size(); ++j) diff[j] = x[j] - eta.point(i)[j];
      dom += model.dominating(diff);
    }
    record(rep.sublinearity, b <= dom * (1.0 + kTol) + kTol, [&] { return describe(x, eta); });

    // (b) eta subset zeta  =>  b(x, eta) <= b(x, zeta)
    Configuration zeta = eta;
    const std::size_t extra = 1 + rng.below(4);
    while (zeta.size() < eta.size() + extra) {
      std::vector<double> p(static_cast<std::size_t>(d));
      for (auto& v : p) v = coord();
      if (!zeta.contains(p)) zeta.add(p);
    }
    const double bz = model.rate(x, zeta);
    record(rep.monotonicity, b <= bz + kTol, [&] {
      return describe(x, eta) + " vs zeta " + describe(x, zeta) + " (" + format_double(b) + " > " + format_double(bz) + ")";
    });

    // (c) rigid motions
    std::vector<double> shift(static_cast<std::size_t>(d));
    for (auto& v : shift) v = model.lattice ? std::round(rng.uniform(-20.0, 20.0)) : rng.uniform(-20.0, 20.0);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const bool reflect = model.lattice && rng.uniform() < 0.5;
    auto move = [&](std::span<const double> p) {
      std::vector<double> q(p.begin(), p.end());
      if (d == 2) {
        q[0] = std::cos(angle) * p[0] - std::sin(angle) * p[1];
        q[1] = std::sin(angle) * p[0] + std::cos(angle) * p[1];
      }
      if (reflect) q[0] = -q[0];
      for (std::size_t j = 0; j < q.size(); ++j) q[j] += shift[j];
      return q;
    };
    Configuration moved(d);
    for (std::size_t i = 0; i < eta.size(); ++i) moved.add(move(eta.point(i)));
    const double bm = model.rate(move(x), moved);
    record(rep.invariance, std::abs(bm - b) <= kTol * std::max(1.0, std::abs(b)), [&] { return describe(x, eta); });

    // (d) b >= c0 within distance r of eta
    const auto anchor = eta.point(rng.below(eta.size()));
    std::vector<double> near(anchor.begin(), anchor.end());
    if (model.lattice) {
      near[0] += static_cast<double>(static_cast<std::int64_t>(rng.below(3)) - 1);
    } else {
      std::vector<double> dir(static_cast<std::size_t>(d));
      double norm = 0.0;
      do {
        norm = 0.0;
        for (auto& v : dir) { v = rng.normal(); norm += v * v; }
        norm = std::sqrt(norm);
      } while (norm == 0.0);
      const double rho = model.witness.r * std::pow(rng.uniform_open_low(), 1.0 / d) * (1.0 - 1e-12);
      for (std::size_t j = 0; j < near.size(); ++j) near[j] += rho * dir[j] / norm;
    }
    const double bn = model.rate(near, eta);
    record(rep.non_degeneracy, bn >= model.witness.c0 - kTol, [&] { return describe(near, eta); });
  }
  return rep;
}

ConditionReport check_conditions(const BirthKernel& kernel, std::size_t trials, std::uint64_t seed, int dimension) {
  return check_conditions(rate_model(kernel, dimension), trials, seed);
}

}  // namespace birthsim

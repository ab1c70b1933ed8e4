#include "birthsim/reduced.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "birthsim/rng.hpp"

namespace birthsim {

namespace {

// Fixed streams keep reduced-chain runs independent of the engine's.
constexpr std::uint64_t kGapStream = stream_id(0, StreamPurpose::dynamics) + (1ull << 60);
constexpr std::uint64_t kTwoPointStream = stream_id(0, StreamPurpose::dynamics) + (2ull << 60);

double next_time(double t, double dt) {
  double tn = t + dt;
  if (!(tn > t)) tn = std::nextafter(t, std::numeric_limits<double>::infinity());
  return tn;
}

// Inverse CDF of q(z, .) / (2 + z) on its three constant pieces.
double sample_gap_target(double z, double u) {
  const double a = std::min(z, 1.0 - z);
  const double b = std::max(z, 1.0 - z);
  const double mid = z <= 0.5 ? 2.0 : 3.0;
  const double w0 = 4.0 * a;
  const double w1 = mid * (b - a);
  const double w2 = 1.0 * (1.0 - b);
  double target = u * (w0 + w1 + w2);
  if (target < w0) return std::min(a, target / 4.0);
  target -= w0;
  if (target < w1) return std::min(b, a + target / mid);
  target -= w1;
  return std::min(1.0, b + target);
}

}  // namespace

double gap_jump_density(double z, double y) {
  if (z <= 0.5) return 4.0 * (y <= z) + 2.0 * (z <= y && y <= 1.0 - z) + 1.0 * (y >= 1.0 - z);
  return 4.0 * (y <= 1.0 - z) + 3.0 * (1.0 - z <= y && y <= z) + 1.0 * (y >= z);
}

double gap_total_rate(double z) { return 2.0 + z; }

double GapTrajectory::at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return z.front();
  return z[static_cast<std::size_t>(it - times.begin()) - 1];
}

std::vector<double> GapTrajectory::sample(double burn_in, double spacing, std::size_t max_samples) const {
  if (!(spacing > 0.0)) throw std::invalid_argument("sample spacing must be positive");
  std::vector<double> out;
  std::size_t j = 0;
  for (std::size_t i = 0; out.size() < max_samples; ++i) {
    const double t = burn_in + static_cast<double>(i) * spacing;
    if (t > t_end) break;
    while (j + 1 < times.size() && times[j + 1] <= t) ++j;
    out.push_back(z[j]);
  }
  return out;
}

GapTrajectory simulate_gap_chain(double z0, double t_end, std::uint64_t seed, std::uint64_t max_jumps) {
  if (!(z0 >= 0.0 && z0 <= 1.0)) throw std::invalid_argument("z0 must lie in [0, 1]");
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be >= 0");
  CounterRng rng(seed, kGapStream);
  GapTrajectory tr;
  tr.times.push_back(0.0);
  tr.z.push_back(z0);
  double t = 0.0;
  double z = z0;
  while (max_jumps == 0 || tr.jumps() < max_jumps) {
    const double tn = next_time(t, rng.exponential(gap_total_rate(z)));
    if (max_jumps == 0 && tn > t_end) break;
    t = tn;
    z = sample_gap_target(z, rng.uniform());
    tr.times.push_back(t);
    tr.z.push_back(z);
  }
  tr.t_end = max_jumps == 0 ? t_end : t;
  return tr;
}

GapTrajectory TwoPointTrajectory::gap() const {
  GapTrajectory g;
  g.times = times;
  g.z.resize(x1.size());
  for (std::size_t i = 0; i < x1.size(); ++i) g.z[i] = x1[i] - x2[i];
  g.t_end = t_end;
  return g;
}

TwoPointTrajectory simulate_two_point(double t_end, std::uint64_t seed, std::uint64_t max_jumps) {
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be >= 0");
  CounterRng rng(seed, kTwoPointStream);
  TwoPointTrajectory tr;
  double t = 0.0, x1 = 0.0, x2 = 0.0;
  tr.times.push_back(t);
  tr.x1.push_back(x1);
  tr.x2.push_back(x2);
  while (max_jumps == 0 || tr.jumps() < max_jumps) {
    const double z = x1 - x2;
    const double tn = next_time(t, rng.exponential(2.0 + z));
    if (max_jumps == 0 && tn > t_end) break;
    t = tn;
    const double w_far = 1.0 * z;
    const double w_near = 2.0 * (1.0 - z);
    double u = rng.uniform() * (2.0 + z);
    if (u < w_far) {
      const double v = (x2 + 1.0) + u;  // uniform on (x2+1, x1+1]
      x2 = x1;
      x1 = std::min(v, tr.x1.back() + 1.0);
    } else if ((u -= w_far) < w_near) {
      const double v = x1 + u / 2.0;  // uniform on (x1, x2+1]
      x2 = x1;
      x1 = v;
    } else {
      u -= w_near;
      x2 = std::min(x1, x2 + u / 2.0);  // uniform on (x2, x1]
    }
    tr.times.push_back(t);
    tr.x1.push_back(x1);
    tr.x2.push_back(x2);
  }
  tr.t_end = max_jumps == 0 ? t_end : t;
  return tr;
}

}  // namespace birthsim

#include "birthsim/kernel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

namespace birthsim {

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw std::invalid_argument("kernel: " + msg); }

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) invalid(std::string(name) + " must be positive and finite");
}

void validate_profile(const StepProfile& p) {
  if (p.radii.empty() || p.radii.size() != p.values.size()) invalid("profile needs matching radii/values");
  double prev_r = 0.0;
  double prev_v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.radii.size(); ++i) {
    if (!(p.radii[i] > prev_r) || !std::isfinite(p.radii[i])) invalid("profile radii must increase");
    if (!(p.values[i] >= 0.0) || p.values[i] > prev_v) invalid("profile values must be nonincreasing and >= 0");
    prev_r = p.radii[i];
    prev_v = p.values[i];
  }
  if (!(p.values.front() > 0.0)) invalid("profile must be positive near the origin");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view s, const std::string& what) {
  s = trim(s);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) invalid("cannot parse " + what + " from '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

BallSum to_balls(const StepProfile& f, double scale, double cap) {
  BallSum b;
  b.cap = cap;
  for (std::size_t i = 0; i < f.radii.size(); ++i) {
    const double next = i + 1 < f.values.size() ? f.values[i + 1] : 0.0;
    const double w = scale * (f.values[i] - next);
    if (w > 0.0) b.terms.push_back({f.radii[i], w});
  }
  return b;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double StepProfile::operator()(double rho) const {
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (rho <= radii[i]) return values[i];
  }
  return 0.0;
}

double power_tail_sum(double alpha, std::int64_t n) {
  // Direct summation for the head, Euler-Maclaurin for the remainder.
  constexpr std::int64_t kHead = 64;
  long double s = 0.0L;
  std::int64_t m = n;
  for (; m < n + kHead; ++m) s += std::pow(static_cast<long double>(m), -static_cast<long double>(alpha));
  const long double N = static_cast<long double>(m);
  const long double a = alpha;
  s += std::pow(N, 1.0L - a) / (a - 1.0L) + 0.5L * std::pow(N, -a) + a / 12.0L * std::pow(N, -a - 1.0L) -
       a * (a + 1.0L) * (a + 2.0L) / 720.0L * std::pow(N, -a - 3.0L);
  return static_cast<double>(s);
}

PowerLawTable::PowerLawTable(double alpha) : alpha_(alpha) {
  if (!(alpha > 2.0) || !std::isfinite(alpha)) invalid("power-law alpha must exceed 2");
  // sum_Z a_pow = 2c + 2c sum_{m >= 2} m^-alpha = 2c zeta(alpha).
  c_pow_ = 1.0 / (2.0 * std::riemann_zeta(alpha));
  // Smallest R with 2 c sum_{m >= R + 2} m^-alpha < tail bound (monotone in R).
  auto tail = [&](std::int64_t r) { return 2.0 * c_pow_ * power_tail_sum(alpha, r + 2); };
  std::int64_t lo = 0, hi = 1;
  while (tail(hi) >= kPowerLawTailMass) hi *= 2;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (tail(mid) < kPowerLawTailMass) hi = mid; else lo = mid + 1;
  }
  tail_mass_ = tail(lo);
  values_.resize(static_cast<std::size_t>(lo) + 1);
  values_[0] = 2.0 * c_pow_;
  for (std::int64_t x = 1; x <= lo; ++x) {
    values_[static_cast<std::size_t>(x)] = c_pow_ / std::pow(static_cast<double>(x + 1), alpha);
  }
}

bool BallSum::capped() const { return std::isfinite(cap); }

double BallSum::combine(const std::int64_t* counts) const {
  double s = 0.0;
  for (std::size_t j = 0; j < terms.size(); ++j) s += terms[j].weight * static_cast<double>(counts[j]);
  return std::min(cap, s);
}

double BallSum::profile(double rho) const {
  double s = 0.0;
  for (const auto& t : terms) {
    if (rho <= t.radius) s += t.weight;
  }
  return s;
}

double ball_volume(int dimension, double radius) {
  switch (dimension) {
    case 1: return 2.0 * radius;
    case 2: return std::numbers::pi * radius * radius;
    case 3: return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius;
    default: break;
  }
  return std::pow(std::numbers::pi, dimension / 2.0) / std::tgamma(dimension / 2.0 + 1.0) *
         std::pow(radius, dimension);
}

double BallSum::single_particle_mass(int dimension) const {
  double s = 0.0;
  for (const auto& t : terms) s += t.weight * ball_volume(dimension, t.radius);
  return s;
}

BirthKernel::BirthKernel(Variant v) : v_(std::move(v)) {
  std::visit(
      [this](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, TruncatedIndicator>) {
          require_positive(k.cap, "cap k");
          require_positive(k.radius, "radius");
          balls_ = {{{k.radius, 1.0}}, k.cap};
        } else if constexpr (std::is_same_v<T, FreeIndicator>) {
          require_positive(k.radius, "radius");
          balls_ = {{{k.radius, 1.0}}, std::numeric_limits<double>::infinity()};
        } else if constexpr (std::is_same_v<T, SumKernel>) {
          validate_profile(k.profile);
          require_positive(k.scale, "scale");
          if (k.cap) require_positive(*k.cap, "cap k");
          balls_ = to_balls(k.profile, k.scale, k.cap.value_or(std::numeric_limits<double>::infinity()));
        } else {
          require_positive(k.cap, "cap k");
          table_.emplace(k.alpha);
        }
      },
      v_);
}

std::optional<double> BirthKernel::cap() const {
  return std::visit(
      [](const auto& k) -> std::optional<double> {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, FreeIndicator>) return std::nullopt;
        else if constexpr (std::is_same_v<T, SumKernel>) return k.cap;
        else return k.cap;
      },
      v_);
}

double BirthKernel::interaction_range() const {
  if (table_) return static_cast<double>(table_->truncation_radius());
  return balls_.range();
}

const BallSum& BirthKernel::balls() const {
  if (is_lattice()) invalid("lattice kernel has no continuum ball form");
  return balls_;
}

const PowerLawTable& BirthKernel::power_law_table() const {
  if (!table_) invalid("not a lattice kernel");
  return *table_;
}

std::string BirthKernel::to_string() const {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, TruncatedIndicator>) {
          return "trunc:k=" + format_double(k.cap) + ",r=" + format_double(k.radius);
        } else if constexpr (std::is_same_v<T, FreeIndicator>) {
          return "free:r=" + format_double(k.radius);
        } else if constexpr (std::is_same_v<T, SumKernel>) {
          std::string s = "sum:scale=" + format_double(k.scale) + ",steps=";
          for (std::size_t i = 0; i < k.profile.radii.size(); ++i) {
            if (i) s += '/';
            s += format_double(k.profile.radii[i]) + ":" + format_double(k.profile.values[i]);
          }
          if (k.cap) s += ",k=" + format_double(*k.cap);
          return s;
        } else {
          return "pow:alpha=" + format_double(k.alpha) + ",k=" + format_double(k.cap);
        }
      },
      v_);
}

BirthKernel BirthKernel::parse(std::string_view spec) {
  spec = trim(spec);
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) invalid("expected '<family>:<key>=<value>,...' in '" + std::string(spec) + "'");
  const std::string family(trim(spec.substr(0, colon)));
  std::map<std::string, std::string, std::less<>> kv;
  for (auto item : split(spec.substr(colon + 1), ',')) {
    item = trim(item);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) invalid("malformed parameter '" + std::string(item) + "'");
    auto [it, fresh] = kv.emplace(std::string(trim(item.substr(0, eq))), std::string(trim(item.substr(eq + 1))));
    if (!fresh) invalid("duplicate parameter '" + it->first + "'");
  }
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto need = [&](const char* key) {
    auto v = take(key);
    if (!v) invalid(family + " kernel needs parameter '" + key + "'");
    return parse_number(*v, key);
  };

  std::optional<BirthKernel> out;
  if (family == "trunc") {
    const double k = need("k");
    const double r = need("r");
    out.emplace(TruncatedIndicator{k, r});
  } else if (family == "free") {
    out.emplace(FreeIndicator{need("r")});
  } else if (family == "sum") {
    SumKernel s;
    s.scale = need("scale");
    auto steps = take("steps");
    if (!steps) invalid("sum kernel needs parameter 'steps'");
    for (auto pair : split(*steps, '/')) {
      const auto c = pair.find(':');
      if (c == std::string_view::npos) invalid("steps entries are radius:value");
      s.profile.radii.push_back(parse_number(pair.substr(0, c), "step radius"));
      s.profile.values.push_back(parse_number(pair.substr(c + 1), "step value"));
    }
    if (auto k = take("k")) s.cap = parse_number(*k, "k");
    out.emplace(std::move(s));
  } else if (family == "pow") {
    const double alpha = need("alpha");
    const double k = need("k");
    out.emplace(DiscretePowerLaw{alpha, k});
  } else {
    invalid("unknown kernel family '" + family + "'");
  }
  if (!kv.empty()) invalid("unknown parameter '" + kv.begin()->first + "' for " + family + " kernel");
  return *out;
}

namespace {

struct ProfileView {
  StepProfile profile;
  double scale;
  std::optional<double> cap;
};

std::optional<ProfileView> as_profile(const BirthKernel& k) {
  return std::visit(
      [](const auto& v) -> std::optional<ProfileView> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TruncatedIndicator>) return ProfileView{{{v.radius}, {1.0}}, 1.0, v.cap};
        else if constexpr (std::is_same_v<T, FreeIndicator>) return ProfileView{{{v.radius}, {1.0}}, 1.0, std::nullopt};
        else if constexpr (std::is_same_v<T, SumKernel>) return ProfileView{v.profile, v.scale, v.cap};
        else return std::nullopt;
      },
      k.variant());
}

}  // namespace

BirthKernel kernel_sum(const BirthKernel& a, const BirthKernel& b) {
  const auto pa = as_profile(a);
  const auto pb = as_profile(b);
  if (!pa || !pb) invalid("sums of lattice kernels are not representable");
  if (a == b) {
    // b + b = 2 (k ^ S) = 2k ^ 2S
    SumKernel s{pa->profile, 2.0 * pa->scale, pa->cap ? std::optional<double>(2.0 * *pa->cap) : std::nullopt};
    return s;
  }
  if (pa->cap || pb->cap) {
    invalid("sum of distinct capped kernels is not a capped sum kernel: " + a.to_string() + " + " + b.to_string());
  }
  std::vector<double> radii = pa->profile.radii;
  radii.insert(radii.end(), pb->profile.radii.begin(), pb->profile.radii.end());
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  SumKernel s;
  s.scale = 1.0;
  for (double r : radii) {
    s.profile.radii.push_back(r);
    s.profile.values.push_back(pa->scale * pa->profile(r) + pb->scale * pb->profile(r));
  }
  return s;
}

}  // namespace birthsim

#include "birthsim/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "birthsim/kernel.hpp"

namespace birthsim {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <class T>
T parse_scalar(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("config: cannot parse '" + v + "' for " + key);
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_scalar<T>(key, trim(item)));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

std::vector<std::string> run_config_keys() {
  return {"kernel",      "dimension",  "initial",       "t_end",         "replicas",
          "seed",        "output_dir", "max_events",    "window_fraction", "lambda",
          "sectors",     "n_caps",     "k_list",        "alpha_list",    "lattice_cap",
          "lattice_events", "snapshot_sizes", "grid_points"};
}

void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "kernel") c.kernel = v;
  else if (key == "dimension") c.dimension = parse_scalar<int>(key, v);
  else if (key == "initial") c.initial = parse_list<double>(key, v);
  else if (key == "t_end") c.t_end = parse_scalar<double>(key, v);
  else if (key == "replicas") c.replicas = parse_scalar<std::size_t>(key, v);
  else if (key == "seed") c.seed = parse_scalar<std::uint64_t>(key, v);
  else if (key == "output_dir") c.output_dir = v;
  else if (key == "max_events") c.max_events = parse_scalar<std::uint64_t>(key, v);
  else if (key == "window_fraction") c.window_fraction = parse_scalar<double>(key, v);
  else if (key == "lambda") c.lambda = parse_scalar<double>(key, v);
  else if (key == "sectors") c.sectors = parse_scalar<int>(key, v);
  else if (key == "n_caps") c.n_caps = parse_list<std::size_t>(key, v);
  else if (key == "k_list") c.k_list = parse_list<double>(key, v);
  else if (key == "alpha_list") c.alpha_list = parse_list<double>(key, v);
  else if (key == "lattice_cap") c.lattice_cap = parse_scalar<double>(key, v);
  else if (key == "lattice_events") c.lattice_events = parse_scalar<std::uint64_t>(key, v);
  else if (key == "snapshot_sizes") c.snapshot_sizes = parse_list<std::size_t>(key, v);
  else if (key == "grid_points") c.grid_points = parse_scalar<std::size_t>(key, v);
  else throw ConfigError("config: unknown key '" + key + "'");
}

void RunConfig::validate() const {
  try {
    (void)BirthKernel::parse(kernel);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: kernel: ") + e.what());
  }
  if (dimension != 1 && dimension != 2) throw ConfigError("config: dimension must be 1 or 2");
  if (initial.empty() || initial.size() % static_cast<std::size_t>(dimension) != 0) {
    throw ConfigError("config: initial needs a positive multiple of dimension coordinates");
  }
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("config: t_end must be finite and >= 0");
  if (replicas < 1) throw ConfigError("config: replicas must be >= 1");
  if (max_events < 1) throw ConfigError("config: max_events must be >= 1");
  if (!(window_fraction > 0.0 && window_fraction < 1.0)) throw ConfigError("config: window_fraction must lie in (0, 1)");
  if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("config: lambda must lie in (0, 1)");
  if (sectors < 2) throw ConfigError("config: sectors must be >= 2");
  for (auto n : n_caps) {
    if (n < 1) throw ConfigError("config: n_caps entries must be >= 1");
  }
  for (double k : k_list) {
    if (!(k > 0.0)) throw ConfigError("config: k_list entries must be positive");
  }
  for (double a : alpha_list) {
    if (!(a > 2.0)) throw ConfigError("config: alpha_list entries must exceed 2");
  }
  if (!(lattice_cap > 0.0)) throw ConfigError("config: lattice_cap must be positive");
  if (grid_points < 2) throw ConfigError("config: grid_points must be >= 2");
}

RunConfig parse_run_config(std::istream& in, RunConfig base) {
  std::set<std::string> seen;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(key).second) throw ConfigError("config: repeated key '" + key + "'");
    set_config_value(base, key, line.substr(eq + 1));
  }
  base.validate();
  return base;
}

RunConfig parse_run_config_text(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  return parse_run_config(in, std::move(base));
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_run_config(in, std::move(base));
}

std::string serialize_run_config(const RunConfig& c) {
  std::ostringstream o;
  o << "kernel = " << c.kernel << '\n'
    << "dimension = " << c.dimension << '\n'
    << "initial = " << join(c.initial) << '\n'
    << "t_end = " << format_double(c.t_end) << '\n'
    << "replicas = " << c.replicas << '\n'
    << "seed = " << c.seed << '\n'
    << "output_dir = " << c.output_dir << '\n'
    << "max_events = " << c.max_events << '\n'
    << "window_fraction = " << format_double(c.window_fraction) << '\n'
    << "lambda = " << format_double(c.lambda) << '\n'
    << "sectors = " << c.sectors << '\n'
    << "n_caps = " << join(c.n_caps) << '\n'
    << "k_list = " << join(c.k_list) << '\n'
    << "alpha_list = " << join(c.alpha_list) << '\n'
    << "lattice_cap = " << format_double(c.lattice_cap) << '\n'
    << "lattice_events = " << c.lattice_events << '\n'
    << "snapshot_sizes = " << join(c.snapshot_sizes) << '\n'
    << "grid_points = " << c.grid_points << '\n';
  return o.str();
}

std::vector<std::string> figure_ids() { return {"fig1", "fig2", "fig3", "fig4-6", "fig7-8"}; }

RunConfig figure_defaults(const std::string& figure) {
  RunConfig c;
  if (figure == "fig1") {
    c.t_end = 1000.0;
    c.replicas = 10;
    c.seed = 1;
  } else if (figure == "fig2") {
    c.k_list = {1.0, 1.2, 1.5, 2.0, 3.0, 5.0};
    c.t_end = 500.0;
    c.replicas = 8;
    c.seed = 2;
  } else if (figure == "fig3") {
    c.kernel = "free:r=1";
    for (std::size_t n = 1; n <= 8192; n *= 2) c.n_caps.push_back(n);
    c.t_end = 1000.0;
    c.replicas = 1;
    c.seed = 3;
  } else if (figure == "fig4-6") {
    c.kernel = "pow:alpha=2.8,k=1";
    c.alpha_list = {2.8, 3.5, 4.2};
    c.lattice_cap = 1.0;
    c.lattice_events = 200000;
    c.t_end = 1e9;
    c.seed = 4;
  } else if (figure == "fig7-8") {
    c.kernel = "trunc:k=5,r=1";
    c.dimension = 2;
    c.initial = {0.0, 0.0};
    c.snapshot_sizes = {20000, 65000};
    c.t_end = 1000.0;
    c.seed = 7;
  } else {
    throw ConfigError("unknown figure id '" + figure + "'");
  }
  return c;
}

}  // namespace birthsim

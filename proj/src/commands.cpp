#include "birthsim/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "birthsim/analytics.hpp"
#include "birthsim/engine.hpp"
#include "birthsim/gap_density.hpp"
#include "birthsim/lattice.hpp"
#include "birthsim/shape.hpp"

namespace birthsim {

namespace fs = std::filesystem;
using nlohmann::json;

std::string default_output_dir() {
  const char* env = std::getenv("BIRTHSIM_OUT_DIR");
  return env && *env ? std::string(env) : std::string("out");
}

std::string resolve_output_dir(const RunConfig& config) {
  return config.output_dir.empty() ? default_output_dir() : config.output_dir;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << v;
  return o.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("write to '" + path.string() + "' failed");
}

double max_extent(const EventLog& log) {
  double m = 0.0;
  auto see = [&](std::span<const double> p) {
    double s = 0.0;
    for (double c : p) s += c * c;
    m = std::max(m, std::sqrt(s));
  };
  for (std::size_t i = 0; i < log.initial().size(); ++i) see(log.initial().point(i));
  for (std::size_t i = 0; i < log.size(); ++i) see(log.position(i));
  return m;
}

std::vector<double> time_grid(double t_end, std::size_t points) {
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = t_end * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

const fs::path& ensure_dir(const fs::path& p) {
  fs::create_directories(p);
  return p;
}

void write_readme(const fs::path& dir, const std::string& figure, const std::vector<std::array<std::string, 3>>& rows,
                  const RunConfig& c) {
  std::ostringstream o;
  o << "# " << figure << "\n\nGenerated by `birthsim reproduce " << figure << "`.\n\n"
    << "| file | column | meaning |\n|---|---|---|\n";
  for (const auto& r : rows) o << "| " << r[0] << " | " << r[1] << " | " << r[2] << " |\n";
  o << "\nParameters:\n\n```\n" << serialize_run_config(c) << "```\n";
  write_text(dir / "README.md", o.str());
}

int reproduce_fig1(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const BirthKernel kernel = BirthKernel::parse(c.kernel);
  const Configuration initial(c.dimension, c.initial);
  auto fronts = replica_map(c.replicas, [&](std::size_t r) {
    SimulationOptions sim;
    sim.replica = r;
    sim.max_events = c.max_events;
    FrontTracker tr(initial, Vec{1.0, 0.0, 0.0});
    simulate_streaming(kernel, initial, c.t_end, c.seed, tr, sim);
    return tr.finish(c.t_end);
  });
  const double theory = speed_k2_closed_form();
  std::ostringstream csv;
  csv << "t";
  for (std::size_t r = 0; r < c.replicas; ++r) csv << ",extent_r" << r;
  csv << ",theory\n";
  for (double t : time_grid(c.t_end, c.grid_points)) {
    csv << format_double(t);
    for (const auto& f : fronts) csv << ',' << format_double(f.at(t));
    csv << ',' << format_double(theory * t) << '\n';
  }
  write_text(dir / "fig1_extent.csv", csv.str());
  const SpeedEstimate e = estimate_speed(fronts, c.window_fraction);
  std::ostringstream s;
  s << "replicas,speed,stderr,theory\n"
    << e.replicas << ',' << format_double(e.slope) << ',' << format_double(e.std_error) << ','
    << format_double(theory) << '\n';
  write_text(dir / "fig1_speed.csv", s.str());
  write_readme(dir, "fig1",
               {{"fig1_extent.csv", "t", "time (x-axis)"},
                {"fig1_extent.csv", "extent_rN", "distance to the furthest particle, replica N (y-axis)"},
                {"fig1_extent.csv", "theory", "theoretical distance 0.73548 t (dashed line)"},
                {"fig1_speed.csv", "speed, stderr", "pooled trailing-window slope"}},
               c);
  out << "fig1: speed " << format_double(e.slope) << " +- " << format_double(e.std_error) << " (theory "
      << format_double(theory) << ")\n";
  return kExitOk;
}

int reproduce_fig2(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const Configuration initial(1, {0.0});
  std::ostringstream csv;
  csv << "k,speed,stderr,replicas,t_end\n";
  SpeedRunOptions opt;
  opt.window_fraction = c.window_fraction;
  opt.sim.max_events = c.max_events;
  for (double k : c.k_list) {
    const SpeedEstimate e = measure_speed(BirthKernel::truncated(k, 1.0), initial, c.replicas, c.t_end, c.seed, opt);
    csv << format_double(k) << ',' << format_double(e.slope) << ',' << format_double(e.std_error) << ','
        << e.replicas << ',' << format_double(c.t_end) << '\n';
    out << "fig2: k = " << format_double(k) << " speed " << format_double(e.slope) << " +- "
        << format_double(e.std_error) << '\n';
  }
  write_text(dir / "fig2_speed_vs_k.csv", csv.str());
  write_readme(dir, "fig2",
               {{"fig2_speed_vs_k.csv", "k", "cap k of the truncated kernel (x-axis)"},
                {"fig2_speed_vs_k.csv", "speed, stderr", "estimated speed of propagation (y-axis)"}},
               c);
  return kExitOk;
}

int reproduce_fig3(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  std::ostringstream csv;
  csv << "n_cap,speed,stderr,replicas,t_end\n";
  for (std::size_t n : c.n_caps) {
    const SpeedEstimate e = measure_restricted_brw_speed(n, c.replicas, c.t_end, c.seed, c.window_fraction);
    csv << n << ',' << format_double(e.slope) << ',' << format_double(e.std_error) << ',' << e.replicas << ','
        << format_double(c.t_end) << '\n';
    out << "fig3: n_cap = " << n << " speed " << format_double(e.slope) << '\n';
  }
  write_text(dir / "fig3_speed_vs_ncap.csv", csv.str());
  write_readme(dir, "fig3",
               {{"fig3_speed_vs_ncap.csv", "n_cap", "particle cap n, plot on a log scale (x-axis)"},
                {"fig3_speed_vs_ncap.csv", "speed, stderr", "speed of propagation (y-axis)"}},
               c);
  return kExitOk;
}

int reproduce_fig4_6(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  std::ostringstream summary;
  summary << "alpha,k,events,t_final,hull_lo,hull_hi,occupied_sites,gap_fraction\n";
  std::vector<std::array<std::string, 3>> rows;
  for (double alpha : c.alpha_list) {
    LatticeOptions opt;
    opt.stop_after_events = c.lattice_events;
    opt.max_events = c.max_events;
    const PowerLawRun run = simulate_discrete_powerlaw(alpha, c.lattice_cap, c.t_end, c.seed, opt);
    const std::string name = "fig4-6_alpha" + format_double(alpha) + "_occupation.csv";
    std::ostringstream csv;
    write_occupation_csv(run.record, csv);
    write_text(dir / name, csv.str());
    const double gf = gap_fraction(run.state);
    summary << format_double(alpha) << ',' << format_double(c.lattice_cap) << ',' << run.record.events << ','
            << format_double(run.state.time) << ',' << run.state.counts.begin()->first[0] << ','
            << run.state.counts.rbegin()->first[0] << ',' << run.state.occupied_sites() << ','
            << format_double(gf) << '\n';
    rows.push_back({name, "site, first_occupation_time",
                    "occupied site (x-axis) and the time it was first occupied (y-axis), alpha = " +
                        format_double(alpha)});
    out << "fig4-6: alpha = " << format_double(alpha) << " gap fraction " << format_double(gf) << '\n';
  }
  write_text(dir / "fig4-6_summary.csv", summary.str());
  rows.push_back({"fig4-6_summary.csv", "gap_fraction", "vacant sites inside the occupied hull / hull length"});
  write_readme(dir, "fig4-6", rows, c);
  return kExitOk;
}

int reproduce_fig7_8(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const BirthKernel kernel = BirthKernel::parse(c.kernel);
  const Configuration initial(c.dimension, c.initial);
  if (c.dimension != 2) throw ConfigError("fig7-8 needs dimension = 2");
  std::vector<std::size_t> sizes = c.snapshot_sizes;
  if (sizes.empty()) throw ConfigError("fig7-8 needs snapshot_sizes");
  std::sort(sizes.begin(), sizes.end());
  SimulationOptions sim;
  sim.max_events = c.max_events;
  sim.max_size = sizes.back();
  const EventLog log = simulate(kernel, initial, c.t_end, c.seed, sim);
  std::vector<std::array<std::string, 3>> rows;
  std::ostringstream sectors;
  sectors << "snapshot,particles,t,sector,radius_over_t,count\n";
  for (std::size_t n : sizes) {
    const std::size_t births = std::min(log.size(), n > initial.size() ? n - initial.size() : 0);
    const double t = births ? log.time(births - 1) : 0.0;
    std::ostringstream csv;
    csv << "x,y,birth_time\n";
    for (std::size_t i = 0; i < initial.size(); ++i) {
      csv << format_double(initial.point(i)[0]) << ',' << format_double(initial.point(i)[1]) << ",0\n";
    }
    for (std::size_t i = 0; i < births; ++i) {
      csv << format_double(log.position(i)[0]) << ',' << format_double(log.position(i)[1]) << ','
          << format_double(log.time(i)) << '\n';
    }
    const std::string name = "fig7-8_snapshot_" + std::to_string(n) + ".csv";
    write_text(dir / name, csv.str());
    rows.push_back({name, "x, y, birth_time", "particle positions at the snapshot"});
    if (initial.size() + births >= 1000 && t > 0.0) {
      const ShapeReport rep = shape_statistics(log.configuration_at(t), c.sectors, kernel.interaction_range(), t);
      for (int s = 0; s < c.sectors; ++s) {
        sectors << n << ',' << rep.particles << ',' << format_double(t) << ',' << s << ','
                << format_double(rep.sector_radius[static_cast<std::size_t>(s)]) << ','
                << rep.sector_counts[static_cast<std::size_t>(s)] << '\n';
      }
      out << "fig7-8: " << rep.particles << " particles at t = " << format_double(t) << ", sector spread "
          << format_double(rep.relative_spread) << '\n';
    }
  }
  write_text(dir / "fig7-8_sectors.csv", sectors.str());
  rows.push_back({"fig7-8_sectors.csv", "snapshot, particles, t, sector, radius_over_t, count",
                  "per sector: (largest norm in the sector + r) / t and the particle count"});
  write_readme(dir, "fig7-8", rows, c);
  return kExitOk;
}

}  // namespace

int cmd_simulate(const RunConfig& config, const std::string& out_path, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
    const BirthKernel kernel = BirthKernel::parse(config.kernel);
    const Configuration initial(config.dimension, config.initial);
    const fs::path dir = resolve_output_dir(config);
    for (std::size_t r = 0; r < config.replicas; ++r) {
      const auto start = std::chrono::steady_clock::now();
      SimulationOptions sim;
      sim.replica = r;
      sim.max_events = config.max_events;
      EventLog log(config.dimension, initial);
      if (kernel.is_lattice()) {
        if (config.dimension != 1) throw ConfigError("lattice kernels are one-dimensional");
        LatticeOptions lo;
        lo.replica = r;
        lo.max_events = config.max_events;
        lo.stop_after_events = config.lattice_events;
        const auto* pl = std::get_if<DiscretePowerLaw>(&kernel.variant());
        log = EventLog(1, Configuration(1, {0.0}));
        LogRecorder rec(log);
        simulate_discrete_powerlaw(pl->alpha, pl->cap, config.t_end, config.seed, lo, &rec);
        log.model = "lattice";
        log.kernel = kernel.to_string();
        log.seed = config.seed;
        log.stream = stream_id(r, StreamPurpose::dynamics);
        log.t_end = config.t_end;
      } else {
        log = simulate(kernel, initial, config.t_end, config.seed, sim);
      }
      std::ostringstream buf;
      write_jsonl(log, buf);
      const std::string bytes = buf.str();
      fs::path path;
      if (!out_path.empty() && config.replicas == 1) {
        path = out_path;
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
      } else {
        ensure_dir(dir);
        path = dir / ("simulate_seed" + std::to_string(config.seed) +
                      (config.replicas > 1 ? "_r" + std::to_string(r) : std::string()) + ".jsonl");
      }
      write_text(path, bytes);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      out << "log " << path.string() << " events " << log.size() << " final_extent "
          << format_double(max_extent(log)) << " wall_time_s " << std::fixed << std::setprecision(3) << wall
          << std::defaultfloat << " digest " << hex(fnv1a64(bytes)) << '\n';
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int cmd_verify(std::ostream& out, int grid_size) {
  json report;
  bool ok = true;
  auto check = [&](const std::string& name, bool pass) {
    report["checks"][name] = pass ? "PASS" : "FAIL";
    ok = ok && pass;
  };
  try {
    const double closed = speed_k2_closed_form();
    const double quad = speed_k2_quadrature();
    report["speed_k2"] = {{"closed_form", closed}, {"quadrature", quad}, {"difference", std::abs(closed - quad)}};
    check("speed_k2_routes_agree", std::abs(closed - quad) < 1e-10);

    const double norm = density_normalization();
    report["g_normalization"] = {{"integral", norm}, {"error", std::abs(norm - 1.0)}};
    check("g_normalization", std::abs(norm - 1.0) < 1e-10);

    const BalanceReport b = verify_balance(grid_size);
    report["balance"] = {{"grid", grid_size},
                         {"balance_residual", b.balance_residual},
                         {"integral_equation_residual", b.integral_residual},
                         {"ode_residual", b.ode_residual},
                         {"phi_residual", b.phi_residual}};
    check("balance_residual", b.balance_residual < 1e-8);
    check("integral_equation_residual", b.integral_residual < 1e-8);
    check("ode_residual", b.ode_residual < 1e-8);
    check("phi_residual", b.phi_residual < 1e-8);

    const BigginsResult bg = biggins_speed();
    report["biggins"] = {{"a_star", bg.a_star},
                         {"theta_star", bg.theta_star},
                         {"inner_min_at_a_star", bg.inner_min_at_star},
                         {"inner_min_below", bg.inner_min_below},
                         {"inner_min_above", bg.inner_min_above}};
    check("biggins_range", bg.a_star >= 1.80 && bg.a_star <= 1.82);
    check("biggins_certificate", bg.certified());
    check("biggins_critical", std::abs(bg.inner_min_at_star) < 1e-9);
  } catch (const std::exception& e) {
    report["error"] = e.what();
    ok = false;
  }
  report["status"] = ok ? "PASS" : "FAIL";
  out << report.dump(2) << '\n';
  std::ostringstream line;
  line << std::setprecision(12) << speed_k2_closed_form();
  out << (ok ? "PASS" : "FAIL") << " speed_k2 = " << line.str() << '\n';
  if (!ok) {
    for (const auto& [name, v] : report["checks"].items()) {
      if (v == "FAIL") out << "failing identity: " << name << '\n';
    }
  }
  return ok ? kExitOk : kExitFailure;
}

int cmd_reproduce(const std::string& figure, const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
    const fs::path dir = fs::path(resolve_output_dir(config)) / figure;
    if (figure == "fig1") return reproduce_fig1(config, ensure_dir(dir), out);
    if (figure == "fig2") return reproduce_fig2(config, ensure_dir(dir), out);
    if (figure == "fig3") return reproduce_fig3(config, ensure_dir(dir), out);
    if (figure == "fig4-6") return reproduce_fig4_6(config, ensure_dir(dir), out);
    if (figure == "fig7-8") return reproduce_fig7_8(config, ensure_dir(dir), out);
    err << "error: unknown figure id '" << figure << "'\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact simulation and verification of spatial birth processes"};
  app.require_subcommand(1);

  std::map<std::string, std::string> flags;
  auto flag = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags[key] = v; }, help);
  };
  std::string config_path;
  std::string out_path;

  auto* sim = app.add_subcommand("simulate", "Simulate and write a JSONL event log");
  sim->add_option("--config", config_path, "key = value config file");
  flag(sim, "--kernel", "kernel", "kernel spec, e.g. trunc:k=2,r=1");
  flag(sim, "--dim", "dimension", "dimension (1 or 2)");
  flag(sim, "--initial", "initial", "flat initial coordinates, comma separated");
  flag(sim, "--t-end", "t_end", "final time");
  flag(sim, "--seed", "seed", "64-bit seed");
  flag(sim, "--replicas", "replicas", "number of replicas");
  flag(sim, "--max-events", "max_events", "explosion guard");
  flag(sim, "--out-dir", "output_dir", "output directory");
  sim->add_option("--out", out_path, "log path (single replica)");

  int grid = 256;
  auto* ver = app.add_subcommand("verify", "Run the closed-form verification suite");
  ver->add_option("--grid", grid, "balance-equation grid size")->check(CLI::Range(64, 1 << 16));

  std::string figure;
  auto* rep = app.add_subcommand("reproduce", "Emit the data analogue of a figure");
  rep->add_option("figure", figure, "fig1 | fig2 | fig3 | fig4-6 | fig7-8")->required();
  rep->add_option("--config", config_path, "key = value config file");
  flag(rep, "--t-end", "t_end", "final time");
  flag(rep, "--seed", "seed", "64-bit seed");
  flag(rep, "--replicas", "replicas", "number of replicas");
  flag(rep, "--out-dir", "output_dir", "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto build = [&](RunConfig base) {
    if (!config_path.empty()) base = load_run_config(config_path, base);
    for (const auto& [k, v] : flags) set_config_value(base, k, v);
    base.validate();
    return base;
  };

  try {
    if (*ver) return cmd_verify(out, grid);
    if (*sim) return cmd_simulate(build(RunConfig{}), out_path, out, err);
    if (*rep) {
      const auto ids = figure_ids();
      if (std::find(ids.begin(), ids.end(), figure) == ids.end()) {
        err << "error: unknown figure id '" << figure << "'\n";
        return kExitUsage;
      }
      return cmd_reproduce(figure, build(figure_defaults(figure)), out, err);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace birthsim

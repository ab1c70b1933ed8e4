#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "birthsim/commands.hpp"
#include "birthsim/run_config.hpp"

using namespace birthsim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("birthsim_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "birthsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return code;
}

// Exit status of the installed binary, or -1 when BIRTHSIM_CLI is unset.
int run_binary(const std::string& args) {
  const char* bin = std::getenv("BIRTHSIM_CLI");
  if (!bin) return -1;
  const std::string cmd = std::string("\"") + bin + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string summary_digest(const std::string& text) {
  const auto at = text.find("digest ");
  REQUIRE(at != std::string::npos);
  return text.substr(at + 7, 16);
}

}  // namespace

TEST_CASE("config parsing is strict") {
  CHECK_THROWS_AS(parse_run_config_text("colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("seed = 1\nseed = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("seed 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("seed = 1x\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("t_end = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("dimension = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("dimension = 2\n"), ConfigError);  // initial still has one coordinate
  CHECK_THROWS_AS(parse_run_config_text("kernel = trunc:k=0,r=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("replicas = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("lambda = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("alpha_list = 2.8,1.5\n"), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/birthsim.cfg"), ConfigError);

  const RunConfig c = parse_run_config_text("# header\n\n  seed = 42   # trailing\nk_list = 1, 2.5 ,3\nt_end=7.5\n");
  CHECK(c.seed == 42);
  CHECK(c.k_list == std::vector<double>{1.0, 2.5, 3.0});
  CHECK(c.t_end == 7.5);
  CHECK(c.kernel == RunConfig{}.kernel);
}

TEST_CASE("config round trip") {
  RunConfig c;
  c.kernel = "trunc:k=1.5,r=0.75";
  c.dimension = 2;
  c.initial = {0.0, 0.0, 1.25, -0.5};
  c.t_end = 0.1 + 0.2;
  c.replicas = 3;
  c.seed = 18446744073709551615ull;
  c.output_dir = "/tmp/x y";
  c.n_caps = {1, 2, 4};
  c.alpha_list = {2.8, 4.2};
  c.snapshot_sizes = {10, 20};
  const RunConfig back = parse_run_config_text(serialize_run_config(c));
  CHECK(back == c);
  CHECK(serialize_run_config(back) == serialize_run_config(c));
  for (const auto& f : figure_ids()) CHECK(parse_run_config_text(serialize_run_config(figure_defaults(f))) == figure_defaults(f));
  CHECK(run_config_keys().size() == 18);
  CHECK_THROWS_AS(figure_defaults("fig9"), ConfigError);
}

TEST_CASE("shipped configs match the frozen figure defaults") {
  for (const auto& f : figure_ids()) {
    const fs::path p = fs::path(BIRTHSIM_SOURCE_DIR) / "configs" / (f + ".cfg");
    INFO(p.string());
    REQUIRE(fs::exists(p));
    CHECK(load_run_config(p.string()) == figure_defaults(f));
  }
}

TEST_CASE("simulate writes byte-identical logs for the same seed") {
  const fs::path dir = scratch("simulate");
  RunConfig c;
  c.t_end = 100.0;
  c.seed = 7;
  std::ostringstream o1, o2, o3, err;
  REQUIRE(cmd_simulate(c, (dir / "a.jsonl").string(), o1, err) == kExitOk);
  REQUIRE(cmd_simulate(c, (dir / "b.jsonl").string(), o2, err) == kExitOk);
  const std::string a = slurp(dir / "a.jsonl");
  CHECK(!a.empty());
  CHECK(a == slurp(dir / "b.jsonl"));
  CHECK(summary_digest(o1.str()) == summary_digest(o2.str()));
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(a)));
  CHECK(summary_digest(o1.str()) == std::string(hex));

  c.seed = 8;
  REQUIRE(cmd_simulate(c, (dir / "c.jsonl").string(), o3, err) == kExitOk);
  CHECK(slurp(dir / "c.jsonl") != a);
  CHECK(summary_digest(o3.str()) != summary_digest(o1.str()));

  c.replicas = 2;
  c.output_dir = (dir / "multi").string();
  std::ostringstream o4;
  REQUIRE(cmd_simulate(c, "", o4, err) == kExitOk);
  CHECK(fs::exists(dir / "multi" / "simulate_seed8_r0.jsonl"));
  CHECK(fs::exists(dir / "multi" / "simulate_seed8_r1.jsonl"));
  CHECK(slurp(dir / "multi" / "simulate_seed8_r0.jsonl") == slurp(dir / "c.jsonl"));
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("codes");
  std::string text;
  CHECK(run({"verify"}, &text) == kExitOk);
  CHECK(text.find("PASS speed_k2 = 0.735479022703") != std::string::npos);
  CHECK(run({"simulate", "--t-end", "-1"}) == kExitUsage);
  CHECK(run({"simulate", "--kernel", "bogus"}) == kExitUsage);
  CHECK(run({"simulate", "--no-such-flag"}) == kExitUsage);
  CHECK(run({"reproduce", "fig9", "--out-dir", dir.string()}) == kExitUsage);
  CHECK(run({"verify", "--grid", "8"}) == kExitUsage);
  CHECK(run({}) == kExitUsage);
  CHECK(run({"--help"}) == kExitOk);
  CHECK(run({"simulate", "--config", "/nonexistent.cfg"}) == kExitUsage);

  const std::string log = (dir / "s.jsonl").string();
  CHECK(run({"simulate", "--kernel", "trunc:k=2,r=1", "--dim", "1", "--t-end", "100", "--seed", "7", "--out", log},
            &text) == kExitOk);
  const std::string first = summary_digest(text);
  CHECK(run({"simulate", "--kernel", "trunc:k=2,r=1", "--dim", "1", "--t-end", "100", "--seed", "7", "--out", log},
            &text) == kExitOk);
  CHECK(summary_digest(text) == first);
  CHECK(text.find("events ") != std::string::npos);
  CHECK(text.find("final_extent ") != std::string::npos);
  CHECK(text.find("wall_time_s ") != std::string::npos);
}

TEST_CASE("verify report is machine readable") {
  std::ostringstream out;
  REQUIRE(cmd_verify(out) == kExitOk);
  const std::string text = out.str();
  const auto end = text.rfind('}');
  REQUIRE(end != std::string::npos);
  const auto report = nlohmann::json::parse(text.substr(0, end + 1));
  CHECK(report["status"] == "PASS");
  CHECK(report["balance"]["balance_residual"].get<double>() < 1e-8);
  CHECK(report["balance"]["ode_residual"].get<double>() < 1e-8);
  CHECK(report["balance"]["integral_equation_residual"].get<double>() < 1e-8);
  const double a = report["biggins"]["a_star"].get<double>();
  CHECK(a >= 1.80);
  CHECK(a <= 1.82);
  CHECK(std::abs(report["speed_k2"]["closed_form"].get<double>() - 0.735479022703) < 1e-12);
  CHECK(std::abs(report["g_normalization"]["error"].get<double>()) < 1e-10);
  for (const auto& [name, verdict] : report["checks"].items()) {
    INFO(name);
    CHECK(verdict == "PASS");
  }
}

TEST_CASE("reproduce writes a documented bundle") {
  const fs::path dir = scratch("reproduce");
  std::string text;
  REQUIRE(run({"reproduce", "fig2", "--t-end", "60", "--replicas", "2", "--out-dir", dir.string()}, &text) == kExitOk);
  const std::string csv = slurp(dir / "fig2" / "fig2_speed_vs_k.csv");
  CHECK(csv.rfind("k,speed,stderr,replicas,t_end\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<long>(figure_defaults("fig2").k_list.size()));
  const std::string readme = slurp(dir / "fig2" / "README.md");
  CHECK(readme.find("fig2_speed_vs_k.csv") != std::string::npos);
  CHECK(readme.find("t_end = 60") != std::string::npos);

  REQUIRE(run({"reproduce", "fig4-6", "--t-end", "20", "--out-dir", dir.string()}) == kExitOk);
  for (const char* f : {"fig4-6_summary.csv", "fig4-6_alpha2.8_occupation.csv", "README.md"}) {
    INFO(f);
    CHECK(fs::exists(dir / "fig4-6" / f));
  }
  CHECK(slurp(dir / "fig4-6" / "fig4-6_alpha2.8_occupation.csv").rfind("site,first_occupation_time\n", 0) == 0);
}

TEST_CASE("the installed binary honours the same contract") {
  if (!std::getenv("BIRTHSIM_CLI")) {
    MESSAGE("BIRTHSIM_CLI unset; binary checks skipped");
    return;
  }
  const fs::path dir = scratch("binary");
  const std::string a = (dir / "a.jsonl").string();
  const std::string b = (dir / "b.jsonl").string();
  CHECK(run_binary("simulate --kernel trunc:k=2,r=1 --dim 1 --t-end 100 --seed 7 --out " + a) == 0);
  CHECK(run_binary("simulate --kernel trunc:k=2,r=1 --dim 1 --t-end 100 --seed 7 --out " + b) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(!slurp(a).empty());
  CHECK(run_binary("simulate --t-end -1") == 2);
  CHECK(run_binary("verify") == 0);
  CHECK(run_binary("reproduce fig9 --out-dir " + dir.string()) == 2);
}

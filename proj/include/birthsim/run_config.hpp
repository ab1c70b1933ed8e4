#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace birthsim {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Every experiment parameter in one validated record. The text form is one
// `key = value` per line; `#` starts a comment; unknown or repeated keys are errors.
struct RunConfig {
  std::string kernel = "trunc:k=2,r=1";
  int dimension = 1;
  std::vector<double> initial = {0.0};  // flat coordinates
  double t_end = 100.0;
  std::size_t replicas = 1;
  std::uint64_t seed = 1;
  std::string output_dir;  // empty: BIRTHSIM_OUT_DIR or ./out
  std::uint64_t max_events = 100'000'000;
  double window_fraction = 0.5;
  double lambda = 0.1;  // hitting-time ball fraction
  int sectors = 12;
  std::vector<std::size_t> n_caps;
  std::vector<double> k_list;
  std::vector<double> alpha_list;
  double lattice_cap = 1.0;
  std::uint64_t lattice_events = 0;
  std::vector<std::size_t> snapshot_sizes;
  std::size_t grid_points = 201;  // time grid of emitted series

  // Throws ConfigError on an invalid field.
  void validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig parse_run_config(std::istream& in, RunConfig base = {});
RunConfig parse_run_config_text(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::string& path, RunConfig base = {});
// Applies one key = value pair, as a config line would.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
std::string serialize_run_config(const RunConfig& config);
std::vector<std::string> run_config_keys();

std::vector<std::string> figure_ids();
// Frozen default parameters of each figure analogue. Throws ConfigError for an unknown id.
RunConfig figure_defaults(const std::string& figure);

}  // namespace birthsim

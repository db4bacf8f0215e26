#pragma once

#include "ddfem/formulations.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddfem {

enum class Experiment { DiffusionStudy, AdvectionStudy, Searchlight, TaylorGreen, Cylinder, CoercivityAudit };

std::string experiment_name(Experiment e);
Experiment parse_experiment(const std::string& name);
const std::vector<std::string>& experiment_names();

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct StudyOptions {
  std::vector<std::string> domains{"arc", "inverted-arc"};
  double h0 = 0.05;
};

struct SearchlightOptions {
  double h = 0.01761;
  double D = 1e-3;
  int order = 1;
  int samples = 512;
};

struct TaylorGreenOptions {
  std::vector<double> h{0.05, 0.0353553390593273, 0.025};
  double T = 1.0;
  double tau = 0.005;  // 0: tau = h^2
  double nu = 0.01;
  std::vector<double> temporal_taus;  // non-empty: step-halving study at temporal_h
  double temporal_h = 0.0125;
  double temporal_T = 0.1;
};

struct CylinderOptions {
  bool smoke = false;
  double T = 8.0;
  double nu = 1e-3;
  double eps = 0.0175;
  double h_min = 0.005;
  double h_max = 0.02;
  int vtk_every = 0;
  int checkpoint_every = 0;
  std::string resume;
};

/// Resolved run configuration. Every field has a config key of the same name
/// (nested sections for the per-experiment options).
struct RunConfig {
  Experiment experiment = Experiment::DiffusionStudy;
  std::vector<MethodId> methods{MethodId::NSDDM, MethodId::Mix0};
  std::vector<int> orders{1, 2};
  int refinements = 4;
  double eps_factor = 3.5;
  std::string output = "out";
  std::uint64_t seed = 1;
  bool naive_advection = false;
  bool dump_system = false;
  double tau = 0.005;  // cylinder time step
  StudyOptions study;
  SearchlightOptions searchlight;
  TaylorGreenOptions taylor_green;
  CylinderOptions cylinder;
};

/// Parses YAML text over `base`. Unknown keys and bad values throw ConfigError.
RunConfig parse_config(const std::string& yaml, const RunConfig& base = {});
RunConfig load_config(const std::string& path, const RunConfig& base = {});

/// YAML in the config format; parse_config(to_yaml(c)) == c.
std::string to_yaml(const RunConfig& config);

std::vector<MethodId> parse_method_list(const std::string& csv);

/// Runs the experiment, writing artifacts and manifest.yaml into
/// config.output. Returns the process exit status; on failure a diagnostic
/// is written to error.txt in the output directory.
int run(const RunConfig& config);

}  // namespace ddfem

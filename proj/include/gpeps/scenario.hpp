#pragma once

#include <string>
#include <vector>

#include "gpeps/analysis.hpp"
#include "gpeps/oracle.hpp"

namespace gpeps {

struct ConfigError : std::runtime_error {
  int line;
  ConfigError(int line_no, const std::string& msg)
      : std::runtime_error("config line " + std::to_string(line_no) + ": " + msg),
        line(line_no) {}
};

/// One run of the pipeline: tensor family, torus, loop list, tasks, outputs.
struct ScenarioConfig {
  GroupSpec group = GroupSpec::cyclic(2);
  bool group_given = false;

  bool use_z2_params = false;
  Z2Params z2;
  std::string tensor_file;

  TorusSpec torus{8, 100};
  std::vector<std::pair<int, int>> loops;
  int flux = 1;
  std::vector<std::string> tasks{"norm", "wilson", "creutz", "fit", "spectra", "classify"};
  FitWindow fit_window;
  bool fit_window_given = false;
  std::string out_dir = ".";
  int threads = 1;
  TorusSpec oracle_torus{3, 3};
  double budget_bytes = ContractionEngine::kDefaultBudgetBytes;

  GaugeTensor build_tensor() const;
  bool has_task(const std::string& name) const;
};

/// Flat "key = value" text, one pair per line, '#' comments; later keys
/// override earlier ones. Errors carry the offending line number.
ScenarioConfig parse_config(const std::string& text);

/// Built-in scenario presets: confining, degenerate, nonperturbative,
/// perturbative-check.
std::string preset_config(const std::string& name);

/// Executes the configured tasks, writing CSV artifacts and the phase report
/// into the output directory. Returns the process exit code: 0 success,
/// 1 configuration error, 2 numerical failure, 3 resource budget breach.
int run(const ScenarioConfig& cfg);

}  // namespace gpeps

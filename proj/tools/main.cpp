#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gpeps/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gpeps: exact contraction of abelian lattice-gauge PEPS on a torus"};

  std::string config_path;
  std::string out_dir;
  std::string preset;
  int threads = 0;
  app.add_option("config", config_path, "scenario config file (key = value lines)");
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--threads", threads, "worker threads for loop evaluation");
  app.add_option("--preset", preset,
                 "built-in scenario: confining, degenerate, nonperturbative, perturbative-check");

  CLI11_PARSE(app, argc, argv);

  std::string text;
  if (!preset.empty()) {
    try {
      text = gpeps::preset_config(preset);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) {
      std::cerr << "error: cannot open config '" << config_path << "'\n";
      return 1;
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    text += ss.str();  // file keys override preset keys
  }
  if (text.empty()) {
    std::cerr << "error: provide a config file or --preset NAME\n";
    return 1;
  }

  gpeps::ScenarioConfig cfg;
  try {
    cfg = gpeps::parse_config(text);
  } catch (const gpeps::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (threads > 0) cfg.threads = threads;

  return gpeps::run(cfg);
}

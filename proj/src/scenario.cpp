#include "gpeps/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

namespace gpeps {

namespace {

const std::set<std::string> kKnownTasks = {"norm",    "wilson",   "creutz",      "fit",
                                           "spectra", "classify", "oracle-check"};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

cplx parse_complex(int line, const std::string& value) {
  std::istringstream is(value);
  double re = 0.0, im = 0.0;
  if (!(is >> re)) throw ConfigError(line, "expected a number, got '" + value + "'");
  is >> im;  // optional imaginary part
  std::string rest;
  if (is >> rest) throw ConfigError(line, "trailing tokens after number: '" + rest + "'");
  return {re, im};
}

int parse_int(int line, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(line, "expected an integer, got '" + value + "'");
  }
}

/// "2x3" single loop, "2:6" all pairs in the square range; space separated.
std::vector<std::pair<int, int>> parse_loops(int line, const std::string& value) {
  std::set<std::pair<int, int>> out;
  std::istringstream is(value);
  std::string tok;
  while (is >> tok) {
    const auto x = tok.find('x');
    const auto colon = tok.find(':');
    try {
      if (x != std::string::npos) {
        out.insert({std::stoi(tok.substr(0, x)), std::stoi(tok.substr(x + 1))});
      } else if (colon != std::string::npos) {
        const int lo = std::stoi(tok.substr(0, colon));
        const int hi = std::stoi(tok.substr(colon + 1));
        if (lo > hi) throw std::invalid_argument("");
        for (int a = lo; a <= hi; ++a)
          for (int b = lo; b <= hi; ++b) out.insert({a, b});
      } else {
        throw std::invalid_argument("");
      }
    } catch (const std::exception&) {
      throw ConfigError(line, "bad loop token '" + tok + "' (want R1xR2 or lo:hi)");
    }
  }
  if (out.empty()) throw ConfigError(line, "empty loop list");
  return {out.begin(), out.end()};
}

GroupSpec parse_group(int line, const std::string& name) {
  if (name.size() > 1 && (name[0] == 'Z' || name[0] == 'z')) {
    try {
      return GroupSpec::cyclic(std::stoi(name.substr(1)));
    } catch (const std::exception&) {
      throw ConfigError(line, "bad cyclic group '" + name + "'");
    }
  }
  if (name == "U1" || name == "u1") return GroupSpec::truncated_u1(1);  // cutoff via jmax key
  throw ConfigError(line, "unknown group '" + name + "' (want Z<N> or U1)");
}

}  // namespace

GaugeTensor ScenarioConfig::build_tensor() const {
  if (!tensor_file.empty()) {
    std::ifstream f(tensor_file);
    if (!f) throw std::invalid_argument("cannot open tensor file '" + tensor_file + "'");
    GaugeTensor t = read_tensor(f);
    if (group_given && !(t.group() == group))
      throw std::invalid_argument("tensor file group disagrees with the configured group");
    const auto report = check_gauge_symmetry(t);
    if (!report.ok)
      throw std::invalid_argument("tensor file violates gauge symmetry (" +
                                  std::to_string(report.violations.size()) + " elements)");
    return t;
  }
  return build_z2_tensor(z2);
}

bool ScenarioConfig::has_task(const std::string& name) const {
  return std::find(tasks.begin(), tasks.end(), name) != tasks.end();
}

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  bool any_amplitude = false;
  int jmax = 0, jmax_line = 0;
  int torus_line = 0, loops_line = 0, flux_line = 0, window_line = 0;

  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    if (trim(raw).empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    const std::string key = trim(raw.substr(0, eq));
    const std::string value = trim(raw.substr(eq + 1));
    if (value.empty()) throw ConfigError(line, "empty value for '" + key + "'");

    if (key == "group") {
      cfg.group = parse_group(line, value);
      cfg.group_given = true;
    } else if (key == "jmax") {
      jmax = parse_int(line, value);
      jmax_line = line;
    } else if (key == "alpha" || key == "beta" || key == "gamma" || key == "delta") {
      const cplx v = parse_complex(line, value);
      if (key == "alpha") cfg.z2.flux_free = v;
      if (key == "beta") cfg.z2.corner = v;
      if (key == "gamma") cfg.z2.straight = v;
      if (key == "delta") cfg.z2.crossing = v;
      cfg.use_z2_params = true;
      any_amplitude = true;
    } else if (key == "tensor_file") {
      cfg.tensor_file = value;
    } else if (key == "N1") {
      cfg.torus.n1 = parse_int(line, value);
      torus_line = line;
    } else if (key == "N2") {
      cfg.torus.n2 = parse_int(line, value);
      torus_line = line;
    } else if (key == "loops") {
      cfg.loops = parse_loops(line, value);
      loops_line = line;
    } else if (key == "J") {
      cfg.flux = parse_int(line, value);
      flux_line = line;
    } else if (key == "tasks") {
      cfg.tasks.clear();
      std::string norm = value;
      std::replace(norm.begin(), norm.end(), ',', ' ');
      std::istringstream ts(norm);
      std::string tok;
      while (ts >> tok) {
        if (!kKnownTasks.count(tok)) throw ConfigError(line, "unknown task '" + tok + "'");
        cfg.tasks.push_back(tok);
      }
      if (cfg.tasks.empty()) throw ConfigError(line, "empty task list");
    } else if (key == "fit_rmin") {
      cfg.fit_window.r1_min = cfg.fit_window.r2_min = parse_int(line, value);
      cfg.fit_window_given = true;
      window_line = line;
    } else if (key == "fit_rmax") {
      cfg.fit_window.r1_max = cfg.fit_window.r2_max = parse_int(line, value);
      cfg.fit_window_given = true;
      window_line = line;
    } else if (key == "out") {
      cfg.out_dir = value;
    } else if (key == "threads") {
      cfg.threads = parse_int(line, value);
      if (cfg.threads < 1) throw ConfigError(line, "threads must be >= 1");
    } else if (key == "oracle_N1") {
      cfg.oracle_torus.n1 = parse_int(line, value);
    } else if (key == "oracle_N2") {
      cfg.oracle_torus.n2 = parse_int(line, value);
    } else if (key == "budget_mb") {
      cfg.budget_bytes = 1024.0 * 1024.0 * parse_int(line, value);
      if (cfg.budget_bytes <= 0) throw ConfigError(line, "budget must be positive");
    } else {
      throw ConfigError(line, "unknown key '" + key + "'");
    }
  }

  if (cfg.group_given && !cfg.group.is_cyclic()) {
    if (jmax < 1) throw ConfigError(jmax_line, "group U1 needs jmax >= 1");
    cfg.group = GroupSpec::truncated_u1(jmax);
  }

  if (cfg.tensor_file.empty() && !any_amplitude)
    throw ConfigError(0,
                      "no tensor defined; required keys: group plus alpha/beta/gamma/delta "
                      "(Z2 family) or tensor_file");
  if (cfg.tensor_file.empty() && cfg.z2.flux_free == cplx(0.0) && cfg.z2.corner == cplx(0.0) &&
      cfg.z2.straight == cplx(0.0) && cfg.z2.crossing == cplx(0.0))
    throw ConfigError(0, "all Z2 amplitudes vanish");
  if (cfg.tensor_file.empty() && cfg.group_given && !(cfg.group == GroupSpec::cyclic(2)))
    throw ConfigError(0, "amplitude keys define the Z2 family; other groups need tensor_file");

  if (cfg.torus.n1 < 2 || cfg.torus.n2 < 2)
    throw ConfigError(torus_line, "torus needs N1 >= 2 and N2 >= 2");
  if (cfg.group_given && !cfg.group.valid_label(cfg.flux))
    throw ConfigError(flux_line, "flux irrep J is not a label of the group");

  if (cfg.loops.empty()) {
    const int hi = std::max(2, std::min(6, cfg.torus.n1 - 2));
    for (int a = 1; a <= hi; ++a)
      for (int b = 1; b <= hi; ++b) cfg.loops.push_back({a, b});
    loops_line = 0;
  }
  for (const auto& [r1, r2] : cfg.loops)
    if (r1 < 1 || r1 >= cfg.torus.n1 || r2 < 1 || r2 >= cfg.torus.n2)
      throw ConfigError(loops_line, "loop " + std::to_string(r1) + "x" + std::to_string(r2) +
                                        " does not fit the torus");
  if (!cfg.fit_window_given) cfg.fit_window = FitWindow::defaults_for(cfg.torus.n1);
  if (cfg.fit_window.r1_min < 1 || cfg.fit_window.r1_min > cfg.fit_window.r1_max)
    throw ConfigError(window_line, "bad fit window");

  if (cfg.has_task("oracle-check")) {
    const TorusSpec small = oracle_within_cap(cfg.group, cfg.torus) ? cfg.torus : cfg.oracle_torus;
    if (!oracle_within_cap(cfg.group, small))
      throw ConfigError(0, "oracle-check torus exceeds the oracle cap");
  }
  return cfg;
}

std::string preset_config(const std::string& name) {
  if (name == "confining")
    return "group = Z2\nalpha = 1\nbeta = 0.1\ngamma = 0\ndelta = 0.95\nN1 = 8\nN2 = 100\n"
           "loops = 2:6\n";
  if (name == "degenerate")
    return "group = Z2\nalpha = 1\nbeta = 0.1\ngamma = 0\ndelta = 1\nN1 = 8\nN2 = 100\n"
           "loops = 2:6\n";
  if (name == "nonperturbative")
    return "group = Z2\nalpha = 0.1\nbeta = 0.1\ngamma = 1\ndelta = 0.3\nN1 = 8\nN2 = 100\n"
           "loops = 2:6\n";
  if (name == "perturbative-check")
    return "group = Z2\nalpha = 1\nbeta = 0.05\ngamma = 0\ndelta = 0.9\nN1 = 8\nN2 = 60\n"
           "loops = 2:5\n";
  throw std::invalid_argument("unknown preset '" + name + "'");
}

namespace {

WilsonTable evaluate_loops(const ContractionEngine& engine, const ScenarioConfig& cfg) {
  const auto& loops = cfg.loops;
  std::vector<WilsonValue> results(loops.size());
  std::vector<std::exception_ptr> errors(loops.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i; (i = next.fetch_add(1)) < loops.size();) {
      try {
        results[i] = engine.wilson({loops[i].first, loops[i].second, cfg.flux});
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(cfg.threads, loops.size()));
  std::vector<std::thread> pool;
  for (int k = 1; k < nthreads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  WilsonTable table;
  for (std::size_t i = 0; i < loops.size(); ++i)
    table.insert(loops[i].first, loops[i].second, results[i]);
  return table;
}

bool run_oracle_check(const ScenarioConfig& cfg, const GaugeTensor& tensor, std::ostream& log) {
  const TorusSpec small =
      oracle_within_cap(cfg.group, cfg.torus) ? cfg.torus : cfg.oracle_torus;
  ContractionEngine engine(tensor, small, cfg.budget_bytes);
  bool all_ok = true;

  const double engine_log_norm = engine.log_norm();
  const double oracle = oracle_log_norm(tensor, small);
  const double norm_err = std::abs(engine_log_norm - oracle) / std::max(1.0, std::abs(oracle));
  const bool norm_ok = norm_err <= 1e-10;
  all_ok &= norm_ok;
  log << (norm_ok ? "PASS" : "FAIL") << " oracle norm on " << small.n1 << "x" << small.n2
      << " (log-norm rel err " << norm_err << ")\n";

  std::vector<std::pair<int, int>> loops;
  for (const auto& l : cfg.loops)
    if (l.first < small.n1 && l.second < small.n2) loops.push_back(l);
  if (loops.empty()) loops.push_back({1, 1});
  for (const auto& [r1, r2] : loops) {
    const LoopSpec loop{r1, r2, cfg.flux};
    const cplx engine_w = engine.wilson(loop).value();
    const cplx oracle_w = oracle_wilson(tensor, small, loop);
    const double err = std::abs(engine_w - oracle_w) / std::max(1e-30, std::abs(oracle_w));
    const bool ok = err <= 1e-10;
    all_ok &= ok;
    log << (ok ? "PASS" : "FAIL") << " oracle W(" << r1 << "," << r2 << ") rel err " << err
        << "\n";
  }
  return all_ok;
}

}  // namespace

int run(const ScenarioConfig& cfg) {
  namespace fs = std::filesystem;
  try {
    const GaugeTensor tensor = cfg.build_tensor();
    ContractionEngine engine(tensor, cfg.torus, cfg.budget_bytes);
    fs::create_directories(cfg.out_dir);
    auto open_out = [&](const std::string& name) {
      std::ofstream f(fs::path(cfg.out_dir) / name);
      if (!f) throw std::runtime_error("cannot write " + name);
      return f;
    };

    WilsonTable table;
    bool have_table = false;
    auto need_table = [&]() -> WilsonTable& {
      if (!have_table) {
        table = evaluate_loops(engine, cfg);
        have_table = true;
      }
      return table;
    };

    SpectrumTable spectra;
    bool have_spectra = false;
    auto need_spectra = [&]() -> SpectrumTable& {
      if (!have_spectra) {
        spectra = engine.epar_spectrum(cfg.flux, 1, cfg.torus.n1 - 1);
        have_spectra = true;
      }
      return spectra;
    };

    for (const std::string& task : cfg.tasks) {
      if (task == "norm") {
        const double ln = engine.log_norm();
        auto f = open_out("norm.txt");
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", ln);
        f << "log_norm: " << buf << "\n";
        std::cout << "norm: log <psi|psi> = " << ln << "\n";
      } else if (task == "wilson") {
        auto f = open_out("wilson.csv");
        write_wilson_csv(f, need_table());
        std::cout << "wilson: " << cfg.loops.size() << " loops -> wilson.csv\n";
      } else if (task == "creutz") {
        auto f = open_out("creutz.csv");
        write_creutz_csv(f, need_table());
        std::cout << "creutz: ratios -> creutz.csv\n";
      } else if (task == "fit") {
        const FitReport fit = fit_decay(need_table(), cfg.fit_window);
        auto f = open_out("fits.csv");
        write_fit_csv(f, fit);
        std::cout << "fit: kappa_area = " << fit.kappa_area
                  << ", kappa_perimeter = " << fit.kappa_perimeter << " -> fits.csv\n";
      } else if (task == "spectra") {
        auto f = open_out("epar.csv");
        write_epar_csv(f, need_spectra());
        std::cout << "spectra: two-line row eigenvalues -> epar.csv\n";
      } else if (task == "classify") {
        const FitReport fit = fit_decay(need_table(), cfg.fit_window);
        const PhaseReport phase = classify(fit, need_spectra());
        LocalCriteria local;
        bool have_local = false;
        try {
          local = local_criteria(tensor, cfg.flux);
          have_local = true;
        } catch (const std::exception&) {
          // local diagnostics need a reflection-symmetric tensor; optional
        }
        auto f = open_out("phase_report.txt");
        write_phase_report(f, phase, have_local ? &local : nullptr);
        const char* law = phase.law == DecayLaw::AreaLaw        ? "area-law"
                          : phase.law == DecayLaw::PerimeterLaw ? "perimeter-law"
                                                                : "undetermined";
        std::cout << "classify: " << law << " -> phase_report.txt\n";
      } else if (task == "oracle-check") {
        const bool ok = run_oracle_check(cfg, tensor, std::cout);
        std::cout << "oracle-check: " << (ok ? "all PASS" : "FAILURES") << "\n";
        if (!ok) return 2;
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ResourceBudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace gpeps

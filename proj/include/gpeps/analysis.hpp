#pragma once

#include <algorithm>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gpeps/contraction.hpp"

namespace gpeps {

/// Wilson-loop values of one tensor/torus, keyed by loop shape. Values are
/// kept in log-magnitude form so that deeply suppressed loops stay usable.
class WilsonTable {
 public:
  void insert(int r1, int r2, WilsonValue v) { entries_[{r1, r2}] = std::move(v); }
  const WilsonValue* find(int r1, int r2) const {
    auto it = entries_.find({r1, r2});
    return it == entries_.end() ? nullptr : &it->second;
  }
  const std::map<std::pair<int, int>, WilsonValue>& entries() const { return entries_; }

 private:
  std::map<std::pair<int, int>, WilsonValue> entries_;
};

/// Four-loop log ratio isolating the area coefficient; evaluated on
/// magnitudes (phases of complex-parameter families oscillate with the loop
/// parity and are reported separately, not folded in here).
double creutz(const WilsonTable& t, int r1, int r2);

struct FitWindow {
  int r1_min = 2, r1_max = 6;
  int r2_min = 2, r2_max = 6;

  static FitWindow defaults_for(int n1) {
    const int hi = std::max(2, std::min(6, n1 - 2));
    return {2, hi, 2, hi};
  }
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
};

/// Per-R1 linear fits f(R2) = f1(R1) R2 + f0(R1) of -log|W|, then secondary
/// fits f1(R1) = kappa_A R1 + kappa_P and f0(R1) = kappa_P R1 - log W0.
struct FitReport {
  std::vector<int> r1_values;
  std::vector<LineFit> per_r1;
  double kappa_area = 0.0;
  double kappa_perimeter = 0.0;
  double kappa_perimeter_from_f0 = 0.0;  // cross-check from the f0 slope
  double log_w0 = 0.0;
  double f1_residual = 0.0;
  double f0_residual = 0.0;
};

FitReport fit_decay(const WilsonTable& t, const FitWindow& w);

/// Defaults chosen so that the three reference parameter sets classify
/// correctly; every threshold is echoed into the report.
struct Thresholds {
  double kappa_area_min = 1e-3;   // fitted area coefficient below this is noise
  double slope_match_tol = 0.05;  // |epar slope + kappa_A| allowance
  double linearity_rtol = 1e-2;   // relative residual of the epar line fit
  double epar_flat_rtol = 1e-2;   // relative spread counting as R-independent
};

enum class DecayLaw { AreaLaw, PerimeterLaw, Undetermined };

struct PhaseReport {
  DecayLaw law = DecayLaw::Undetermined;
  double kappa_area = 0.0;
  double kappa_perimeter = 0.0;
  double log_w0 = 0.0;
  double epar_slope = 0.0;      // slope of log|rho'_1(R)| on R <= n1/2
  double epar_linearity = 0.0;  // relative residual of that fit
  double epar_flatness = 0.0;   // relative spread of |rho'_1| across R
  Thresholds thresholds;
  std::string explanation;
};

PhaseReport classify(const FitReport& f, const SpectrumTable& s, const Thresholds& th = {});

/// Local area-law diagnostics read off the site operators alone: gap and
/// degeneracy of the singlet-sector spectrum, straight-line contamination of
/// the zeroth block, and whether the leading flux factor moves the leading
/// singlet eigenvector to a different eigenvalue sector.
struct LocalCriteria {
  Eigen::VectorXd singlet_values;
  bool leading_degenerate = false;
  double zero_block_offdiag_weight = 0.0;
  double flux_sector_flip_weight = 0.0;
  bool area_law_compatible = false;
  std::string summary;
};

LocalCriteria local_criteria(const GaugeTensor& t, int flux = 1);

// CSV / report serialization (17 significant digits, fixed ordering).
void write_wilson_csv(std::ostream& os, const WilsonTable& t);
void write_fit_csv(std::ostream& os, const FitReport& f);
void write_creutz_csv(std::ostream& os, const WilsonTable& t);
void write_epar_csv(std::ostream& os, const SpectrumTable& s);
void write_phase_report(std::ostream& os, const PhaseReport& p, const LocalCriteria* local);

}  // namespace gpeps

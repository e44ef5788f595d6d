#include "gpeps/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace gpeps {

namespace {

const WilsonValue& table_entry(const WilsonTable& t, int r1, int r2) {
  const WilsonValue* v = t.find(r1, r2);
  if (!v) throw std::invalid_argument("missing Wilson entry");
  if (v->is_zero()) throw std::invalid_argument("zero Wilson entry in a log ratio");
  return *v;
}

LineFit line_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  if (n < 2) throw std::invalid_argument("line fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double det = n * sxx - sx * sx;
  if (det == 0.0) throw std::invalid_argument("rank-deficient line fit");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy * sxx - sx * sxy) / det;
  for (std::size_t i = 0; i < n; ++i)
    f.max_residual = std::max(f.max_residual, std::abs(ys[i] - f.slope * xs[i] - f.intercept));
  return f;
}

void csv_row(std::ostream& os, const std::vector<double>& vals) {
  char buf[64];
  for (std::size_t i = 0; i < vals.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", vals[i]);
    os << (i ? "," : "") << buf;
  }
  os << "\n";
}

}  // namespace

double creutz(const WilsonTable& t, int r1, int r2) {
  if (r1 < 2 || r2 < 2) throw std::invalid_argument("Creutz ratio needs r1, r2 >= 2");
  const double num =
      table_entry(t, r1, r2).log_abs + table_entry(t, r1 - 1, r2 - 1).log_abs;
  const double den =
      table_entry(t, r1 - 1, r2).log_abs + table_entry(t, r1, r2 - 1).log_abs;
  return -(num - den);
}

FitReport fit_decay(const WilsonTable& t, const FitWindow& w) {
  FitReport report;
  std::vector<double> f1s, f0s, r1s;
  for (int r1 = w.r1_min; r1 <= w.r1_max; ++r1) {
    std::vector<double> xs, ys;
    for (int r2 = w.r2_min; r2 <= w.r2_max; ++r2) {
      const WilsonValue* v = t.find(r1, r2);
      if (v && !v->is_zero()) {
        xs.push_back(r2);
        ys.push_back(v->neg_log_abs());
      }
    }
    if (xs.size() < 3) continue;
    report.r1_values.push_back(r1);
    report.per_r1.push_back(line_fit(xs, ys));
    r1s.push_back(r1);
    f1s.push_back(report.per_r1.back().slope);
    f0s.push_back(report.per_r1.back().intercept);
  }
  if (report.r1_values.size() < 2)
    throw std::invalid_argument("decay fit needs at least two R1 rows with three R2 points each");

  const LineFit f1_fit = line_fit(r1s, f1s);
  const LineFit f0_fit = line_fit(r1s, f0s);
  report.kappa_area = f1_fit.slope;
  report.kappa_perimeter = f1_fit.intercept;
  report.kappa_perimeter_from_f0 = f0_fit.slope;
  report.log_w0 = -f0_fit.intercept;
  report.f1_residual = f1_fit.max_residual;
  report.f0_residual = f0_fit.max_residual;
  return report;
}

PhaseReport classify(const FitReport& f, const SpectrumTable& s, const Thresholds& th) {
  PhaseReport report;
  report.thresholds = th;
  report.kappa_area = f.kappa_area;
  report.kappa_perimeter = f.kappa_perimeter;
  report.log_w0 = f.log_w0;

  // Leading two-line eigenvalue over the first half of the torus; the curve
  // mirrors around n1/2 because the flux pair can also connect the other way
  // around the periodic row.
  std::vector<double> xs, ys;
  for (const auto& e : s.entries) {
    if (e.r > s.n1 / 2) continue;
    xs.push_back(e.r);
    ys.push_back(std::log(std::abs(e.eigenvalues[0])) + e.log_scale);
  }
  if (xs.size() < 2) throw std::invalid_argument("classification needs spectra on R <= n1/2");
  const LineFit epar_fit = line_fit(xs, ys);
  report.epar_slope = epar_fit.slope;
  const double spread =
      *std::max_element(ys.begin(), ys.end()) - *std::min_element(ys.begin(), ys.end());
  report.epar_linearity = epar_fit.max_residual / std::max(spread, 1e-300);
  report.epar_flatness = 1.0 - std::exp(-spread);

  const bool area_scale = f.kappa_area > th.kappa_area_min;
  const bool linear = report.epar_linearity <= th.linearity_rtol;
  const bool slope_matches = std::abs(report.epar_slope + f.kappa_area) <= th.slope_match_tol;
  const bool area_corroborated = area_scale && linear && slope_matches;
  const bool flat = report.epar_flatness <= th.epar_flat_rtol;

  // An area law needs both the fit and a matching exponential two-line
  // eigenvalue. A separation-independent eigenvalue forces a perimeter law
  // even when the windowed fit shows structure: square-loop windows pick up
  // finite-size min/max terms that the spectra are immune to.
  if (area_corroborated && !flat) {
    report.law = DecayLaw::AreaLaw;
    report.explanation = "fitted area coefficient above threshold and the two-line "
                         "eigenvalue falls exponentially with matching rate";
  } else if (flat && !area_corroborated) {
    report.law = DecayLaw::PerimeterLaw;
    report.explanation =
        area_scale ? "two-line eigenvalue is separation-independent; the windowed fit "
                     "structure is finite-size, not an area term"
                   : "no area coefficient beyond threshold and the two-line "
                     "eigenvalue is independent of the separation";
  } else {
    report.law = DecayLaw::Undetermined;
    report.explanation = "fit and spectra disagree; see the recorded diagnostics";
  }
  return report;
}

LocalCriteria local_criteria(const GaugeTensor& t, int flux) {
  LocalCriteria out;
  const auto free_reduced = project(build_transfer(t, FluxSpec::none()), 0, 0);
  const auto spectrum = tau0_spectral(free_reduced);
  out.singlet_values = spectrum.values;

  // Zeroth charge block: degeneracy of its leading eigenvalues and the
  // weight sitting off the diagonal (straight-line contamination).
  const auto blocks = tau0_blocks(free_reduced);
  const Eigen::MatrixXd* zero_block = nullptr;
  for (const auto& b : blocks)
    if (b.k == 0) zero_block = &b.block;
  if (!zero_block) throw std::logic_error("missing zeroth charge block");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*zero_block);
  Eigen::VectorXd zvals = es.eigenvalues();
  const double zmax = zvals.cwiseAbs().maxCoeff();
  std::sort(zvals.data(), zvals.data() + zvals.size(),
            [](double a, double b) { return std::abs(a) > std::abs(b); });
  out.leading_degenerate =
      zvals.size() > 1 && std::abs(std::abs(zvals[0]) - std::abs(zvals[1])) <= 1e-9 * zmax;

  double diag = 0.0, off = 0.0;
  for (int i = 0; i < zero_block->rows(); ++i)
    for (int j = 0; j < zero_block->cols(); ++j)
      (i == j ? diag : off) += std::abs((*zero_block)(i, j));
  out.zero_block_offdiag_weight = off / std::max(diag, 1e-300);

  // Leading flux factor, transverse to the line, written in the eigenbasis
  // of the zeroth block: off-diagonal weight there means a flux crossing
  // moves the state to a different eigenvalue sector.
  const auto line = project(build_transfer(t, FluxSpec::right(flux)), -flux, 0);
  const auto svd = flux_svd(line);
  if (svd.values.size() > 0 && svd.values[0] > 0.0) {
    const Eigen::MatrixXcd basis = es.eigenvectors();
    const Eigen::MatrixXcd l1 = basis.transpose() * svd.transverse[0] * basis;
    double d2 = 0.0, o2 = 0.0;
    for (int i = 0; i < l1.rows(); ++i)
      for (int j = 0; j < l1.cols(); ++j) (i == j ? d2 : o2) += std::norm(l1(i, j));
    out.flux_sector_flip_weight = o2 / std::max(d2 + o2, 1e-300);
  }

  out.area_law_compatible = !out.leading_degenerate && out.zero_block_offdiag_weight < 0.2 &&
                            out.flux_sector_flip_weight > 0.5;
  out.summary = out.area_law_compatible
                    ? "gapped non-degenerate singlet spectrum, near-diagonal zeroth block, "
                      "sector-flipping flux factor: area law possible"
                    : "at least one local criterion fails: no area law from this tensor";
  return out;
}

void write_wilson_csv(std::ostream& os, const WilsonTable& t) {
  os << "R1,R2,neg_log_abs_W\n";
  for (const auto& [key, v] : t.entries()) {
    if (v.is_zero()) continue;
    csv_row(os, {static_cast<double>(key.first), static_cast<double>(key.second),
                 v.neg_log_abs()});
  }
}

void write_fit_csv(std::ostream& os, const FitReport& f) {
  os << "R1,f1,f0\n";
  for (std::size_t i = 0; i < f.r1_values.size(); ++i)
    csv_row(os, {static_cast<double>(f.r1_values[i]), f.per_r1[i].slope, f.per_r1[i].intercept});
}

void write_creutz_csv(std::ostream& os, const WilsonTable& t) {
  os << "R1,R2,chi\n";
  for (const auto& [key, v] : t.entries()) {
    const auto [r1, r2] = key;
    if (r1 < 2 || r2 < 2) continue;
    if (!t.find(r1 - 1, r2 - 1) || !t.find(r1 - 1, r2) || !t.find(r1, r2 - 1)) continue;
    bool usable = !v.is_zero() && !t.find(r1 - 1, r2 - 1)->is_zero() &&
                  !t.find(r1 - 1, r2)->is_zero() && !t.find(r1, r2 - 1)->is_zero();
    if (!usable) continue;
    csv_row(os, {static_cast<double>(r1), static_cast<double>(r2), creutz(t, r1, r2)});
  }
}

void write_epar_csv(std::ostream& os, const SpectrumTable& s) {
  os << "R,log_abs_rho1\n";
  for (const auto& e : s.entries)
    csv_row(os, {static_cast<double>(e.r), std::log(std::abs(e.eigenvalues[0])) + e.log_scale});
}

void write_phase_report(std::ostream& os, const PhaseReport& p, const LocalCriteria* local) {
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  const char* law = p.law == DecayLaw::AreaLaw        ? "area-law"
                    : p.law == DecayLaw::PerimeterLaw ? "perimeter-law"
                                                      : "undetermined";
  os << "classification: " << law << "\n";
  os << "kappa_area: " << num(p.kappa_area) << "\n";
  os << "kappa_perimeter: " << num(p.kappa_perimeter) << "\n";
  os << "log_w0: " << num(p.log_w0) << "\n";
  os << "epar_slope: " << num(p.epar_slope) << "\n";
  os << "epar_linearity: " << num(p.epar_linearity) << "\n";
  os << "epar_flatness: " << num(p.epar_flatness) << "\n";
  os << "threshold_kappa_area_min: " << num(p.thresholds.kappa_area_min) << "\n";
  os << "threshold_slope_match_tol: " << num(p.thresholds.slope_match_tol) << "\n";
  os << "threshold_linearity_rtol: " << num(p.thresholds.linearity_rtol) << "\n";
  os << "threshold_epar_flat_rtol: " << num(p.thresholds.epar_flat_rtol) << "\n";
  os << "explanation: " << p.explanation << "\n";
  if (local) {
    os << "singlet_values:";
    for (int i = 0; i < local->singlet_values.size(); ++i)
      os << " " << num(local->singlet_values[i]);
    os << "\n";
    os << "leading_degenerate: " << (local->leading_degenerate ? "yes" : "no") << "\n";
    os << "zero_block_offdiag_weight: " << num(local->zero_block_offdiag_weight) << "\n";
    os << "flux_sector_flip_weight: " << num(local->flux_sector_flip_weight) << "\n";
    os << "local_area_law_compatible: " << (local->area_law_compatible ? "yes" : "no") << "\n";
    os << "local_summary: " << local->summary << "\n";
  }
}

}  // namespace gpeps

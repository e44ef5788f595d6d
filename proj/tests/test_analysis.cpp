#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gpeps/analysis.hpp"

using namespace gpeps;

namespace {

WilsonValue synthetic(double neg_log) {
  WilsonValue w;
  w.log_abs = -neg_log;
  w.phase = cplx(1.0);
  return w;
}

/// -log W = kA R1 R2 + kP (R1 + R2) - log W0
WilsonTable exponential_table(double k_area, double k_perim, double log_w0, int rmax) {
  WilsonTable t;
  for (int r1 = 1; r1 <= rmax; ++r1)
    for (int r2 = 1; r2 <= rmax; ++r2)
      t.insert(r1, r2, synthetic(k_area * r1 * r2 + k_perim * (r1 + r2) - log_w0));
  return t;
}

SpectrumTable synthetic_spectrum(int n1, double slope, double offset) {
  SpectrumTable s;
  s.n1 = n1;
  for (int r = 1; r < n1; ++r) {
    Eigen::VectorXcd vals(1);
    vals[0] = std::exp(offset + slope * std::min(r, n1 - r));
    s.entries.push_back({r, vals, 0.0});
  }
  return s;
}

}  // namespace

TEST_CASE("four-loop ratio telescopes exactly on exponential tables") {
  const auto t = exponential_table(0.17, 1.3, -2.0, 7);
  for (int r1 = 2; r1 <= 7; ++r1)
    for (int r2 = 2; r2 <= 7; ++r2)
      CHECK(creutz(t, r1, r2) == doctest::Approx(0.17).epsilon(1e-12));

  const auto perim = exponential_table(0.0, 2.0, 0.5, 6);
  CHECK(creutz(perim, 4, 4) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(static_cast<void>(creutz(t, 1, 2)), std::invalid_argument);
  WilsonTable missing;
  missing.insert(2, 2, synthetic(1.0));
  CHECK_THROWS_AS(static_cast<void>(creutz(missing, 2, 2)), std::invalid_argument);
  missing.insert(1, 1, WilsonValue::zero("no coupling"));
  missing.insert(1, 2, synthetic(1.0));
  missing.insert(2, 1, synthetic(1.0));
  CHECK_THROWS_AS(static_cast<void>(creutz(missing, 2, 2)), std::invalid_argument);
}

TEST_CASE("decay fit recovers exact coefficients") {
  const auto t = exponential_table(0.1025, 2.3, -1.7, 6);
  const auto fit = fit_decay(t, {2, 6, 2, 6});
  CHECK(fit.kappa_area == doctest::Approx(0.1025).epsilon(1e-10));
  CHECK(fit.kappa_perimeter == doctest::Approx(2.3).epsilon(1e-10));
  CHECK(fit.kappa_perimeter_from_f0 == doctest::Approx(2.3).epsilon(1e-10));
  CHECK(fit.log_w0 == doctest::Approx(-1.7).epsilon(1e-9));
  CHECK(fit.f1_residual < 1e-12);

  WilsonTable tiny;
  tiny.insert(2, 2, synthetic(1.0));
  tiny.insert(2, 3, synthetic(1.5));
  CHECK_THROWS_AS(static_cast<void>(fit_decay(tiny, {2, 6, 2, 6})), std::invalid_argument);
}

TEST_CASE("decay fit on the closed-form family recovers its exponents") {
  const Z2Params p{1.0, 0.1, 0.0, 0.95};
  WilsonTable t;
  for (int r1 = 2; r1 <= 6; ++r1)
    for (int r2 = 2; r2 <= 6; ++r2) t.insert(r1, r2, wilson_analytic_z2(p, r1, r2).value);
  const auto fit = fit_decay(t, {2, 6, 2, 6});
  CHECK(fit.kappa_area == doctest::Approx(-2.0 * std::log(0.95)).epsilon(1e-10));
  CHECK(fit.kappa_perimeter == doctest::Approx(2.0 * std::log(0.95 / 0.01)).epsilon(1e-10));
  // the four-loop ratio of the closed form is the area coefficient itself
  CHECK(creutz(t, 5, 5) == doctest::Approx(-2.0 * std::log(0.95)).epsilon(1e-10));
}

TEST_CASE("classification of the three reference behaviours") {
  // confining: area coefficient with a matching exponential two-line decay
  const auto area_fit = fit_decay(exponential_table(0.1025, 2.3, -1.7, 6), {2, 6, 2, 6});
  const auto area = classify(area_fit, synthetic_spectrum(8, -0.1025, -2.0));
  CHECK(area.law == DecayLaw::AreaLaw);
  CHECK(area.epar_slope == doctest::Approx(-0.1025).epsilon(1e-10));

  // deconfined: no area coefficient, flat two-line eigenvalue
  const auto perim_fit = fit_decay(exponential_table(0.0, 9.2103, 0.0, 6), {2, 6, 2, 6});
  const auto perim = classify(perim_fit, synthetic_spectrum(8, 0.0, -9.2));
  CHECK(perim.law == DecayLaw::PerimeterLaw);

  // an area-scale fit with a flat spectrum: the spectrum wins, since the
  // separation-independent eigenvalue rules out area decay
  const auto overridden = classify(area_fit, synthetic_spectrum(8, 0.0, -2.0));
  CHECK(overridden.law == DecayLaw::PerimeterLaw);

  // genuinely contradictory: a falling eigenvalue whose rate does not match
  // the fitted coefficient
  const auto odd = classify(area_fit, synthetic_spectrum(8, -0.3, -2.0));
  CHECK(odd.law == DecayLaw::Undetermined);

  // rescaling all loop values only moves log W0
  WilsonTable scaled = exponential_table(0.1025, 2.3, -1.7, 6);
  WilsonTable shifted;
  for (const auto& [key, v] : scaled.entries()) {
    WilsonValue w = v;
    w.log_abs += std::log(3.7);
    shifted.insert(key.first, key.second, w);
  }
  const auto fit_shifted = fit_decay(shifted, {2, 6, 2, 6});
  CHECK(fit_shifted.kappa_area == doctest::Approx(area_fit.kappa_area).epsilon(1e-10));
  CHECK(fit_shifted.kappa_perimeter == doctest::Approx(area_fit.kappa_perimeter).epsilon(1e-10));
  CHECK(classify(fit_shifted, synthetic_spectrum(8, -0.1025, -2.0)).law == DecayLaw::AreaLaw);
  CHECK(fit_shifted.log_w0 ==
        doctest::Approx(area_fit.log_w0 + std::log(3.7)).epsilon(1e-9));
}

TEST_CASE("local diagnostics of the three reference tensors") {
  const auto confining = local_criteria(build_z2_tensor({1.0, 0.1, 0.0, 0.95}));
  CHECK(confining.area_law_compatible);
  CHECK_FALSE(confining.leading_degenerate);
  CHECK(confining.zero_block_offdiag_weight < 1e-12);
  CHECK(confining.flux_sector_flip_weight > 0.99);

  const auto degerate = local_criteria(build_z2_tensor({1.0, 0.1, 0.0, 1.0}));
  CHECK_FALSE(degerate.area_law_compatible);
  CHECK(degerate.leading_degenerate);

  const auto line = local_criteria(build_z2_tensor({0.1, 0.1, 1.0, 0.3}));
  CHECK_FALSE(line.area_law_compatible);
  CHECK(line.zero_block_offdiag_weight > 1.0);
  CHECK(line.flux_sector_flip_weight < 0.5);
}

TEST_CASE("serialization formats") {
  const auto t = exponential_table(0.1, 1.0, 0.0, 4);
  std::ostringstream wcsv;
  write_wilson_csv(wcsv, t);
  CHECK(wcsv.str().substr(0, 24) == "R1,R2,neg_log_abs_W\n1,1,");

  std::ostringstream ccsv;
  write_creutz_csv(ccsv, t);
  CHECK(ccsv.str().find("R1,R2,chi\n2,2,") == 0);

  const auto fit = fit_decay(t, {2, 4, 2, 4});
  std::ostringstream fcsv;
  write_fit_csv(fcsv, fit);
  CHECK(fcsv.str().find("R1,f1,f0\n2,") == 0);

  std::ostringstream rep;
  write_phase_report(rep, classify(fit, synthetic_spectrum(8, -0.1, 0.0)), nullptr);
  CHECK(rep.str().find("classification: area-law") != std::string::npos);
  CHECK(rep.str().find("kappa_area: 0.10000000") != std::string::npos);
}

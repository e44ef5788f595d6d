#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "gpeps/transfer_ops.hpp"

using namespace gpeps;

namespace {

GaugeTensor random_zn_tensor(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  const auto g = GroupSpec::cyclic(n);
  std::map<VirtualIndex, cplx> coeffs;
  for (int r = 0; r < n; ++r)
    for (int u = 0; u < n; ++u)
      for (int l = 0; l < n; ++l)
        coeffs[{r, u, l, g.fuse(g.fuse(r, u), g.conjugate(l))}] = cplx(amp(rng), amp(rng));
  return build_zn_tensor(g, coeffs);
}

Z2Params random_z2(unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> mag(0.3, 1.0);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * M_PI);
  auto draw = [&]() { return std::polar(mag(rng), ph(rng)); };
  return {draw(), draw(), draw(), draw()};
}

}  // namespace

TEST_CASE("doubled leg basis: sectors, spins, singlets") {
  const DoubledLegBasis b{GroupSpec::cyclic(2)};
  REQUIRE(b.size() == 4);
  for (int idx = 0; idx < b.size(); ++idx) {
    const auto [j, jp] = b.labels(idx);
    CHECK(b.sector(idx) == (j - jp + 2) % 2);
    CHECK(b.spin(idx) == j);
    // sector-0 states are exactly the diagonal pairs
    CHECK((b.sector(idx) == 0) == (j == jp));
  }
  CHECK(b.sector_spins(0) == std::vector<int>{0, 1});
  CHECK(b.sector_spins(1) == std::vector<int>{0, 1});

  const DoubledLegBasis u1{GroupSpec::truncated_u1(2)};
  CHECK(u1.sector_spins(0).size() == 5);
  CHECK(u1.sector_spins(3) == std::vector<int>{1, 2});
  CHECK(u1.sector_spins(-3) == std::vector<int>{-2, -1});
}

TEST_CASE("flux-free transfer elements are doubled-layer products") {
  const Z2Params p{cplx(0.9, 0.2), cplx(0.3, -0.1), cplx(0.4, 0.3), cplx(0.8, 0.0)};
  const auto t = build_z2_tensor(p);
  const auto op = build_transfer(t, FluxSpec::none());
  const auto& b = op.leg_basis();

  // all-singlet element on the flux-free configuration
  CHECK(std::abs(op.at(b.flat(0, 0), b.flat(0, 0), b.flat(0, 0), b.flat(0, 0)) -
                 cplx(std::norm(p.flux_free))) < 1e-15);

  // a single-element tensor gives a single transfer element
  const GaugeTensor tiny =
      build_zn_tensor(GroupSpec::cyclic(3), {{{0, 0, 0, 0}, cplx(0.5, 0.5)}});
  const auto tiny_op = build_transfer(tiny, FluxSpec::none());
  const auto& tb = tiny_op.leg_basis();
  int nonzero = 0;
  for (int l = 0; l < tb.size(); ++l)
    for (int r = 0; r < tb.size(); ++r)
      for (int d = 0; d < tb.size(); ++d)
        for (int u = 0; u < tb.size(); ++u)
          if (tiny_op.at(l, r, d, u) != cplx(0.0)) ++nonzero;
  CHECK(nonzero == 1);
  CHECK(std::abs(tiny_op.at(tb.flat(0, 0), tb.flat(0, 0), tb.flat(0, 0), tb.flat(0, 0)) -
                 cplx(0.5)) < 1e-15);
}

TEST_CASE("sector bookkeeping of every flux variant") {
  const auto t = random_zn_tensor(3, 99);
  const auto g = t.group();
  for (const FluxSpec f : {FluxSpec::none(), FluxSpec::right(1), FluxSpec::left(1),
                           FluxSpec::up(2), FluxSpec::down(1), FluxSpec::corner_ll(2)}) {
    const auto op = build_transfer(t, f);
    const auto& b = op.leg_basis();
    for (int l = 0; l < b.size(); ++l)
      for (int r = 0; r < b.size(); ++r)
        for (int d = 0; d < b.size(); ++d)
          for (int u = 0; u < b.size(); ++u) {
            if (op.at(l, r, d, u) == cplx(0.0)) continue;
            CHECK(b.sector(r) == f.out_sector_h(g));
            CHECK(b.sector(u) == f.out_sector_v(g));
            CHECK(g.fuse(b.sector(l), b.sector(d)) == f.in_sector_total(g));
          }
  }
}

TEST_CASE("singlet reduction of the Z2 family") {
  const Z2Params p{cplx(1.0), cplx(0.3, 0.1), cplx(0.5, -0.2), cplx(0.95)};
  const auto t = build_z2_tensor(p);
  const auto red = project(build_transfer(t, FluxSpec::none()), 0, 0);
  REQUIRE(red.spins_l().size() == 2);

  const double a2 = std::norm(p.flux_free), b2 = std::norm(p.corner);
  const double g2 = std::norm(p.straight), d2 = std::norm(p.crossing);

  // diagonal-pair block: flux lines keep their direction
  CHECK(std::abs(red.entry(0, 0, 0, 0) - cplx(a2)) < 1e-15);
  CHECK(std::abs(red.entry(0, 0, 1, 1) - cplx(g2)) < 1e-15);
  CHECK(std::abs(red.entry(1, 1, 0, 0) - cplx(g2)) < 1e-15);
  CHECK(std::abs(red.entry(1, 1, 1, 1) - cplx(d2)) < 1e-15);
  // singlet-flipping block: all four entries carry the corner weight
  CHECK(std::abs(red.entry(0, 1, 0, 1) - cplx(b2)) < 1e-15);
  CHECK(std::abs(red.entry(0, 1, 1, 0) - cplx(b2)) < 1e-15);
  CHECK(std::abs(red.entry(1, 0, 0, 1) - cplx(b2)) < 1e-15);
  CHECK(std::abs(red.entry(1, 0, 1, 0) - cplx(b2)) < 1e-15);
  // everything else vanishes
  CHECK(std::abs(red.entry(0, 0, 0, 1)) == 0.0);
  CHECK(std::abs(red.entry(0, 1, 0, 0)) == 0.0);

  // the reduction keeps 16 elements where the unreduced operator has
  // (N^2)^4 = 256
  CHECK(red.hv_matrix().size() == 16);
  const std::size_t leg = build_transfer(t, FluxSpec::none()).leg_basis().size();
  CHECK(leg * leg * leg * leg == 256);

  // horizontal-vertical reflection symmetry of the rotation-invariant family
  const Eigen::MatrixXcd m = red.hv_matrix();
  CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("straight-line reduction of the Z2 family") {
  const Z2Params p{cplx(0.9, 0.3), cplx(0.25, -0.15), cplx(0.6, 0.1), cplx(0.75, -0.4)};
  const auto t = build_z2_tensor(p);
  const auto red = project(build_transfer(t, FluxSpec::right(1)), -1, 0);
  CHECK(red.sector_l() == 1);
  CHECK(red.sector_r() == 1);
  CHECK(red.sector_d() == 0);
  CHECK(red.sector_u() == 0);

  const auto cc = [](cplx z) { return std::conj(z); };
  // diagonal-pair block: line passes, transverse label kept
  CHECK(std::abs(red.entry(0, 0, 0, 0) - p.flux_free * cc(p.straight)) < 1e-15);
  CHECK(std::abs(red.entry(0, 0, 1, 1) - p.straight * cc(p.crossing)) < 1e-15);
  CHECK(std::abs(red.entry(1, 1, 0, 0) - p.straight * cc(p.flux_free)) < 1e-15);
  CHECK(std::abs(red.entry(1, 1, 1, 1) - p.crossing * cc(p.straight)) < 1e-15);
  // corner-pair block
  const double b2 = std::norm(p.corner);
  CHECK(std::abs(red.entry(0, 1, 0, 1) - cplx(b2)) < 1e-15);
  CHECK(std::abs(red.entry(0, 1, 1, 0) - cplx(b2)) < 1e-15);
  CHECK(std::abs(red.entry(1, 0, 0, 1) - cplx(b2)) < 1e-15);
  CHECK(std::abs(red.entry(1, 0, 1, 0) - cplx(b2)) < 1e-15);

  // with no straight-line amplitude this collapses to corner weight times a
  // double spin flip
  const auto flip =
      project(build_transfer(build_z2_tensor({1.0, cplx(0.3, 0.1), 0.0, 0.95}), FluxSpec::right(1)),
              -1, 0);
  const double w = std::norm(cplx(0.3, 0.1));
  for (int il = 0; il < 2; ++il)
    for (int ir = 0; ir < 2; ++ir)
      for (int id = 0; id < 2; ++id)
        for (int iu = 0; iu < 2; ++iu) {
          const cplx expected = (il != ir && id != iu) ? cplx(w) : cplx(0.0);
          CHECK(std::abs(flip.entry(il, ir, id, iu) - expected) < 1e-15);
        }
}

TEST_CASE("corner reduction of the Z2 family") {
  const Z2Params p{cplx(0.8, 0.25), cplx(0.35, -0.2), cplx(0.55, 0.15), cplx(0.7, -0.1)};
  const auto t = build_z2_tensor(p);
  const auto red = project(build_transfer(t, FluxSpec::corner_ll(1)), 0, 0);
  CHECK(red.sector_l() == 0);
  CHECK(red.sector_d() == 0);
  CHECK(red.sector_r() == 1);
  CHECK(red.sector_u() == 1);

  const auto cc = [](cplx z) { return std::conj(z); };
  CHECK(std::abs(red.entry(0, 0, 0, 0) - p.flux_free * cc(p.corner)) < 1e-15);
  CHECK(std::abs(red.entry(0, 0, 1, 1) - p.straight * cc(p.corner)) < 1e-15);
  CHECK(std::abs(red.entry(1, 1, 0, 0) - p.straight * cc(p.corner)) < 1e-15);
  CHECK(std::abs(red.entry(1, 1, 1, 1) - p.crossing * cc(p.corner)) < 1e-15);
  CHECK(std::abs(red.entry(0, 1, 0, 1) - p.corner * cc(p.flux_free)) < 1e-15);
  CHECK(std::abs(red.entry(0, 1, 1, 0) - p.corner * cc(p.straight)) < 1e-15);
  CHECK(std::abs(red.entry(1, 0, 0, 1) - p.corner * cc(p.straight)) < 1e-15);
  CHECK(std::abs(red.entry(1, 0, 1, 0) - p.corner * cc(p.crossing)) < 1e-15);
}

TEST_CASE("trivial flux reproduces the flux-free operator") {
  const auto t = build_z2_tensor({0.9, 0.3, 0.2, 0.7});
  const auto plain = build_transfer(t, FluxSpec::none());
  for (const FluxSpec f : {FluxSpec::right(0), FluxSpec::up(0), FluxSpec::corner_ll(0)}) {
    const auto op = build_transfer(t, f);
    const auto& b = op.leg_basis();
    for (int l = 0; l < b.size(); ++l)
      for (int r = 0; r < b.size(); ++r)
        for (int d = 0; d < b.size(); ++d)
          for (int u = 0; u < b.size(); ++u)
            CHECK(op.at(l, r, d, u) == plain.at(l, r, d, u));
  }
}

TEST_CASE("inconsistent sector requests are rejected") {
  const auto t = build_z2_tensor({1.0, 0.1, 0.0, 0.95});
  const auto op = build_transfer(t, FluxSpec::right(1));
  CHECK_THROWS_AS(static_cast<void>(project(op, 0, 0)), std::invalid_argument);
  const auto z3op = build_transfer(random_zn_tensor(3, 5), FluxSpec::up(1));
  CHECK_THROWS_AS(static_cast<void>(project(z3op, 1, 0)), std::invalid_argument);
  CHECK_NOTHROW(static_cast<void>(project(z3op, 0, 2)));
}

TEST_CASE("charge blocks of the singlet reduction") {
  const Z2Params p{1.0, 0.1, 0.5, 0.95};
  const auto red = project(build_transfer(build_z2_tensor(p), FluxSpec::none()), 0, 0);
  const auto blocks = tau0_blocks(red);
  REQUIRE(blocks.size() == 2);

  CHECK(blocks[0].k == 0);
  CHECK(blocks[0].block.rows() == 2);
  CHECK(blocks[0].block(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(blocks[0].block(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(blocks[0].block(1, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(blocks[0].block(1, 1) == doctest::Approx(0.9025).epsilon(1e-12));
  CHECK(blocks[1].k == 1);
  CHECK((blocks[1].block.array() - 0.01).abs().maxCoeff() < 1e-15);

  // without corner and straight weights only the diagonal of the zeroth
  // block survives
  const auto diag =
      tau0_blocks(project(build_transfer(build_z2_tensor({1.0, 0.0, 0.0, 0.95}), FluxSpec::none()),
                          0, 0));
  CHECK(diag[0].block(0, 1) == 0.0);
  CHECK(diag[1].block.cwiseAbs().maxCoeff() == 0.0);

  // truncated U(1): block at shift k has dimension 2 jmax + 1 - |k|
  GaugeTensor u1(GroupSpec::truncated_u1(2));
  u1.set({0, 0, 0, 0}, cplx(1.0));
  const auto u1_blocks = tau0_blocks(project(build_transfer(u1, FluxSpec::none()), 0, 0));
  for (const auto& b : u1_blocks) {
    CHECK(b.block.rows() == 5 - std::abs(b.k));
    CHECK(b.block.cols() == 5 - std::abs(b.k));
  }
}

TEST_CASE("spectral reduction: corner-dominated family") {
  const auto red =
      project(build_transfer(build_z2_tensor({1.0, 0.1, 0.0, 0.95}), FluxSpec::none()), 0, 0);
  const auto spec = tau0_spectral(red);
  REQUIRE(spec.values.size() == 4);
  CHECK(spec.values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spec.values[1] == doctest::Approx(0.9025).epsilon(1e-12));
  CHECK(spec.values[2] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(std::abs(spec.values[3]) < 1e-14);

  Eigen::MatrixXd up(2, 2), down(2, 2), flip(2, 2);
  up << 1, 0, 0, 0;
  down << 0, 0, 0, 1;
  flip << 0, 1, 1, 0;
  CHECK((spec.ops[0] - up).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((spec.ops[1] - down).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((spec.ops[2] - flip / std::sqrt(2.0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spectral reduction: line-dominated family") {
  const auto red =
      project(build_transfer(build_z2_tensor({0.1, 0.1, 1.0, 0.3}), FluxSpec::none()), 0, 0);
  const auto spec = tau0_spectral(red);
  CHECK(spec.values[0] == doctest::Approx(1.0508).epsilon(2e-4));
  CHECK(spec.values[1] == doctest::Approx(-0.9508).epsilon(2e-4));
  CHECK(spec.values[2] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(std::abs(spec.values[3]) < 1e-14);
  // leading operator is diagonal but far from a projector
  CHECK(spec.ops[0](0, 0) == doctest::Approx(0.6928).epsilon(2e-4));
  CHECK(spec.ops[0](1, 1) == doctest::Approx(0.7211).epsilon(2e-4));
  CHECK(std::abs(spec.ops[0](0, 1)) < 1e-14);
}

TEST_CASE("spectral reduction: degenerate and invalid inputs") {
  const auto degen =
      tau0_spectral(project(build_transfer(build_z2_tensor({1.0, 0.0, 0.0, 1.0}), FluxSpec::none()),
                            0, 0));
  CHECK(degen.values[0] == doctest::Approx(1.0));
  CHECK(degen.values[1] == doctest::Approx(1.0));
  CHECK(std::abs(degen.values[2]) < 1e-14);
  CHECK(std::abs(degen.values[3]) < 1e-14);

  // generic cyclic tensors break the horizontal-vertical reflection symmetry
  const auto asym = project(build_transfer(random_zn_tensor(3, 12), FluxSpec::none()), 0, 0);
  CHECK_THROWS_AS(static_cast<void>(tau0_spectral(asym)), std::invalid_argument);
}

TEST_CASE("spectral reduction invariants over random parameters") {
  for (unsigned seed = 0; seed < 8; ++seed) {
    const Z2Params p = random_z2(1000 + seed);
    const auto red = project(build_transfer(build_z2_tensor(p), FluxSpec::none()), 0, 0);
    const auto spec = tau0_spectral(red);

    // trace orthonormality
    for (std::size_t i = 0; i < spec.ops.size(); ++i)
      for (std::size_t j = 0; j < spec.ops.size(); ++j) {
        const double want = i == j ? 1.0 : 0.0;
        CHECK(std::abs((spec.ops[i] * spec.ops[j].transpose()).trace() - want) < 1e-12);
      }

    // the operator pair sum reconstructs the reduction
    const Eigen::MatrixXcd m = red.hv_matrix();
    Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(4, 4);
    for (int mu = 0; mu < 4; ++mu) {
      const auto& op = spec.ops[mu];
      for (int il = 0; il < 2; ++il)
        for (int ir = 0; ir < 2; ++ir)
          for (int id = 0; id < 2; ++id)
            for (int iu = 0; iu < 2; ++iu)
              rebuilt(il * 2 + ir, id * 2 + iu) += spec.values[mu] * op(il, ir) * op(id, iu);
    }
    CHECK((m.real() - rebuilt).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("flux factorization") {
  // line-dominated reference values
  const auto line =
      project(build_transfer(build_z2_tensor({0.1, 0.1, 1.0, 0.3}), FluxSpec::right(1)), -1, 0);
  const auto svd = flux_svd(line);
  REQUIRE(svd.values.size() == 4);
  CHECK(svd.values[0] == doctest::Approx(0.4472).epsilon(1e-3));
  CHECK(svd.values[1] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(std::abs(svd.values[2]) < 1e-14);
  CHECK(std::abs(svd.values[3]) < 1e-14);
  // transverse factor of the leading mode: diagonal, entries 0.3162 / 0.9487
  CHECK(std::abs(svd.transverse[0](0, 0)) == doctest::Approx(0.3162).epsilon(1e-3));
  CHECK(std::abs(svd.transverse[0](1, 1)) == doctest::Approx(0.9487).epsilon(1e-3));
  CHECK(std::abs(svd.transverse[0](0, 1)) < 1e-14);

  // corner-only family: a single mode, equal to corner weight times the
  // double flip
  const auto flip =
      project(build_transfer(build_z2_tensor({1.0, 0.1, 0.0, 0.95}), FluxSpec::right(1)), -1, 0);
  const auto fsvd = flux_svd(flip);
  CHECK(fsvd.values[0] == doctest::Approx(2.0 * 0.01).epsilon(1e-12));
  CHECK(std::abs(fsvd.values[1]) < 1e-14);
  Eigen::MatrixXcd prod = Eigen::MatrixXcd::Zero(4, 4);
  for (int mu = 0; mu < fsvd.values.size(); ++mu)
    for (int il = 0; il < 2; ++il)
      for (int ir = 0; ir < 2; ++ir)
        for (int id = 0; id < 2; ++id)
          for (int iu = 0; iu < 2; ++iu)
            prod(il * 2 + ir, id * 2 + iu) +=
                fsvd.values[mu] * fsvd.along[mu](il, ir) * fsvd.transverse[mu](id, iu);
  CHECK((prod - flip.hv_matrix()).cwiseAbs().maxCoeff() < 1e-12);

  // all-zero reduction: empty spectrum
  const auto zero =
      project(build_transfer(build_z2_tensor({1.0, 0.0, 0.0, 0.95}), FluxSpec::right(1)), -1, 0);
  CHECK(flux_svd(zero).values.size() == 0);

  CHECK_THROWS_AS(static_cast<void>(flux_svd(project(
                      build_transfer(build_z2_tensor({1.0, 0.1, 0.0, 0.95}), FluxSpec::none()), 0,
                      0))),
                  std::invalid_argument);
}

TEST_CASE("flux factorization reconstructs over random parameters") {
  for (unsigned seed = 0; seed < 8; ++seed) {
    const Z2Params p = random_z2(2000 + seed);
    const auto red =
        project(build_transfer(build_z2_tensor(p), FluxSpec::up(1)), 0, -1);
    const auto svd = flux_svd(red);
    const Eigen::MatrixXcd m = red.hv_matrix();
    Eigen::MatrixXcd rebuilt = Eigen::MatrixXcd::Zero(m.rows(), m.cols());
    for (int mu = 0; mu < svd.values.size(); ++mu)
      for (int il = 0; il < 2; ++il)
        for (int ir = 0; ir < 2; ++ir)
          for (int id = 0; id < 2; ++id)
            for (int iu = 0; iu < 2; ++iu)
              rebuilt(il * 2 + ir, id * 2 + iu) += svd.values[mu] *
                                                   svd.transverse[mu](il, ir) *
                                                   svd.along[mu](id, iu);
    CHECK((m - rebuilt).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("csv dump carries basis labels") {
  const auto red =
      project(build_transfer(build_z2_tensor({1.0, 0.1, 0.0, 0.95}), FluxSpec::none()), 0, 0);
  std::ostringstream os;
  dump_csv(os, red);
  const std::string text = os.str();
  CHECK(text.find("j=0:k=0") != std::string::npos);
  CHECK(text.find("j=1:k=0") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);  // header + 4 rows
}

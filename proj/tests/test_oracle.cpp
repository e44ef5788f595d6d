#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gpeps/oracle.hpp"

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

}  // namespace

TEST_CASE("flux-free tensor fills a single configuration") {
  const cplx a(0.7, 0.2);
  const auto state = build_state(build_z2_tensor({a, 0.0, 0.0, 0.0}), {2, 2});
  REQUIRE(state.amp.size() == 256);
  std::size_t nonzero = 0;
  for (std::size_t c = 0; c < state.amp.size(); ++c)
    if (state.amp[c] != cplx(0.0)) {
      ++nonzero;
      CHECK(c == state.encode(std::vector<int>(8, 0)));
      CHECK(std::abs(state.amp[c] - a * a * a * a) < 1e-15);
    }
  CHECK(nonzero == 1);
}

TEST_CASE("corner weights populate exactly the closed-loop configurations") {
  const auto state = build_state(build_z2_tensor({1.0, 1.0, 0.0, 0.0}), {2, 2});
  const auto gauss = check_gauss_law(state);
  CHECK(gauss.ok);
  CHECK(gauss.checked > 1);  // more than the empty configuration

  // independent count: enumerate all 2^8 configurations and test the vertex
  // rule directly
  std::size_t expected = 0;
  for (std::size_t c = 0; c < 256; ++c) {
    const auto labels = state.decode(c);
    bool closed = true;
    for (int y = 0; y < 2 && closed; ++y)
      for (int x = 0; x < 2 && closed; ++x) {
        const int out = labels[state.link_index(x, y, 0)] + labels[state.link_index(x, y, 1)];
        const int in = labels[state.link_index((x + 1) % 2, y, 0)] +
                       labels[state.link_index(x, (y + 1) % 2, 1)];
        closed = (out - in) % 2 == 0;
      }
    const bool populated = state.amp[c] != cplx(0.0);
    if (populated) CHECK(closed);
    if (closed) ++expected;
  }
  CHECK(gauss.checked <= expected);

  // with every weight switched on, all closed configurations are reached
  const auto full = build_state(build_z2_tensor({1.0, 1.0, 1.0, 1.0}), {2, 2});
  CHECK(check_gauss_law(full).checked == expected);
}

TEST_CASE("gauge invariance of valid states; corruption is detected") {
  const auto good = build_state(build_z2_tensor({1.0, 0.3, 0.2, 0.8}), {2, 2});
  const auto report = check_gauge_invariance(good);
  CHECK(report.ok);
  CHECK(report.max_deviation < 1e-12);

  const auto z3 = build_state(random_zn_tensor(3, 31), {2, 2});
  CHECK(check_gauge_invariance(z3).ok);

  // corrupt the tensor: both the tensor-level and the state-level check fire
  GaugeTensor bad = build_z2_tensor({1.0, 0.3, 0.2, 0.8});
  bad.set_raw({0, 0, 0, 1}, cplx(0.5));
  CHECK_FALSE(check_gauge_symmetry(bad).ok);
  const auto bad_state = build_state(bad, {2, 2});
  const auto bad_report = check_gauge_invariance(bad_state);
  CHECK_FALSE(bad_report.ok);
  CHECK_FALSE(check_gauss_law(bad_state).ok);
  // the violation localizes next to the corrupted element's legs
  CHECK(bad_report.violations.size() < 8u);
}

TEST_CASE("perturbed amplitude breaks invariance") {
  auto state = build_state(build_z2_tensor({1.0, 0.3, 0.0, 0.8}), {2, 2});
  std::vector<int> labels(8, 0);
  labels[0] = 1;  // a single open-string configuration
  state.amp[state.encode(labels)] += 0.1;
  const auto report = check_gauge_invariance(state);
  CHECK_FALSE(report.ok);
  CHECK_FALSE(report.violations.empty());
}

TEST_CASE("direct Wilson values") {
  const auto state = build_state(build_z2_tensor({1.0, 0.4, 0.1, 0.7}), {3, 3});

  // trivial irrep: the shift does nothing
  CHECK(std::abs(direct_wilson(state, {1, 1, 0}) - cplx(1.0)) < 1e-15);
  CHECK(std::abs(direct_wilson(state, {2, 2, 0}) - cplx(1.0)) < 1e-15);

  // no corners, no way to match the inserted loop
  const auto bare = build_state(build_z2_tensor({0.9, 0.0, 0.0, 0.0}), {2, 2});
  CHECK(std::abs(direct_wilson(bare, {1, 1, 1})) == 0.0);

  CHECK_THROWS_AS(static_cast<void>(direct_wilson(state, {3, 1, 1})), std::invalid_argument);
}

TEST_CASE("streaming sums agree with the dense state") {
  for (unsigned seed : {11u, 12u}) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> mag(0.3, 1.0), ph(0.0, 2.0 * M_PI);
    auto draw = [&]() { return std::polar(mag(rng), ph(rng)); };
    const GaugeTensor t = build_z2_tensor({draw(), draw(), draw(), draw()});
    const TorusSpec torus{3, 2};
    const auto state = build_state(t, torus);

    CHECK(oracle_log_norm(t, torus) ==
          doctest::Approx(std::log(direct_norm_sq(state))).epsilon(1e-12));
    for (const LoopSpec loop : {LoopSpec{1, 1, 1}, LoopSpec{2, 1, 1}}) {
      const cplx dense = direct_wilson(state, loop);
      const cplx streamed = oracle_wilson(t, torus, loop);
      CHECK(std::abs(dense - streamed) < 1e-12 * std::max(1.0, std::abs(dense)));
    }
  }

  const GaugeTensor z3 = random_zn_tensor(3, 77);
  const TorusSpec torus{2, 2};
  const auto state = build_state(z3, torus);
  CHECK(oracle_log_norm(z3, torus) ==
        doctest::Approx(std::log(direct_norm_sq(state))).epsilon(1e-12));
  const cplx dense = direct_wilson(state, {1, 1, 1});
  const cplx streamed = oracle_wilson(z3, torus, {1, 1, 1});
  CHECK(std::abs(dense - streamed) < 1e-12 * std::max(1.0, std::abs(dense)));
}

TEST_CASE("loop placement is immaterial on a translation-invariant state") {
  const auto t = build_z2_tensor({1.0, 0.35, 0.15, 0.85});
  const TorusSpec torus{3, 3};
  const auto state = build_state(t, torus);
  const cplx at_origin = direct_wilson(state, {1, 1, 1});
  const cplx shifted = direct_wilson(state, {1, 1, 1}, 1, 1);
  const cplx wrapped = direct_wilson(state, {2, 1, 1}, 2, 2);
  CHECK(std::abs(at_origin - shifted) < 1e-13);
  CHECK(std::abs(direct_wilson(state, {2, 1, 1}) - wrapped) < 1e-13);
}

TEST_CASE("amplitude dump lists nonzero configurations") {
  // (0.5 + 0.25i)^4 = -0.02734375 + 0.09375i on the empty configuration
  const auto state = build_state(build_z2_tensor({cplx(0.5, 0.25), 0.0, 0.0, 0.0}), {2, 2});
  std::ostringstream os;
  dump_amplitudes(os, state);
  CHECK(os.str() == "configuration,re,im\n0 0 0 0 0 0 0 0,-0.02734375,0.09375\n");
}

TEST_CASE("feasibility cap") {
  CHECK(oracle_within_cap(GroupSpec::cyclic(2), {3, 3}));
  CHECK(oracle_within_cap(GroupSpec::cyclic(3), {3, 2}));
  CHECK_FALSE(oracle_within_cap(GroupSpec::cyclic(3), {3, 3}));
  CHECK_FALSE(oracle_within_cap(GroupSpec::cyclic(2), {5, 2}));
  CHECK_THROWS_AS(static_cast<void>(build_state(random_zn_tensor(3, 1), {3, 3})),
                  std::length_error);
}

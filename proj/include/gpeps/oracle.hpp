#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "gpeps/gauge_tensor.hpp"
#include "gpeps/lattice.hpp"

namespace gpeps {

/// Brute-force ground truth on tiny tori. The only virtue of this module is
/// obvious correctness: amplitudes are plain products of site elements with
/// the bond identifications spelled out, with no transfer-operator machinery.

/// Full physical state over all link configurations, stored dense. Links are
/// enumerated by (row, column, direction), direction 0 pointing right and 1
/// pointing up; link 0 is the most significant digit of the configuration
/// index.
struct StateVector {
  GroupSpec group;
  TorusSpec torus;
  std::vector<cplx> amp;

  int link_index(int x, int y, int dir) const { return (y * torus.n1 + x) * 2 + dir; }
  std::size_t config_count() const { return amp.size(); }

  /// Link labels of a configuration index, in link order.
  std::vector<int> decode(std::size_t idx) const;
  std::size_t encode(const std::vector<int>& labels) const;
};

/// Dense-state feasibility bounds, enforced by build_state.
inline constexpr int kOracleMaxSites = 9;
inline constexpr double kOracleMaxEntries = 600000.0;

bool oracle_within_cap(const GroupSpec& g, const TorusSpec& t);

/// Materializes the state: each amplitude is the product over sites of the
/// tensor element selected by the site's four surrounding links (the bonds
/// identify a site's outgoing labels with its neighbours' ingoing ones).
/// Throws std::length_error beyond the cap.
StateVector build_state(const GaugeTensor& tensor, const TorusSpec& torus);

double direct_norm_sq(const StateVector& s);

struct GaugeInvarianceReport {
  bool ok = true;
  double max_deviation = 0.0;
  struct Violation {
    int x, y;
    double parameter;  // group element (Z_N) or angle (truncated U(1))
    double deviation;
  };
  std::vector<Violation> violations;
};

/// Applies the four-link gauge rotation at every site and group element and
/// requires the amplitude vector to be unchanged to 1e-12.
GaugeInvarianceReport check_gauge_invariance(const StateVector& s);

struct GaussLawReport {
  bool ok = true;
  std::size_t checked = 0;
  std::size_t violating_configs = 0;
};

/// Exhaustive configuration-space check: every nonzero amplitude's link
/// labels must have vanishing lattice divergence at each site.
GaussLawReport check_gauss_law(const StateVector& s);

/// <psi|W|psi> / <psi|psi> with the flux insertions applied directly to the
/// amplitude vector; `origin` places the loop's lower-left corner.
cplx direct_wilson(const StateVector& s, const LoopSpec& loop, int origin_x = 0,
                   int origin_y = 0);

/// Debug CSV of the nonzero amplitudes: link labels in enumeration order,
/// then real and imaginary part.
void dump_amplitudes(std::ostream& os, const StateVector& s);

/// Streaming variants: the same sums evaluated by enumerating only the
/// configurations allowed by the vertex selection rule, without
/// materializing the state. Usable beyond the dense cap.
double oracle_log_norm(const GaugeTensor& tensor, const TorusSpec& torus);
cplx oracle_wilson(const GaugeTensor& tensor, const TorusSpec& torus, const LoopSpec& loop,
                   int origin_x = 0, int origin_y = 0);

}  // namespace gpeps

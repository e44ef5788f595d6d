#include "gpeps/group.hpp"

#include <cmath>

namespace gpeps {

LinkOperator flux_operator(const GroupSpec& g, int irrep, bool dagger) {
  g.require_label(irrep);
  const int j = dagger ? g.conjugate(irrep) : irrep;
  const int d = g.dim();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (int idx = 0; idx < d; ++idx) {
    const int src = g.label_at(idx);
    const int dst = g.is_cyclic() ? g.fuse(src, j) : src + j;
    if (!g.valid_label(dst)) continue;  // truncation drops the amplitude
    m(g.index_of(dst), idx) = 1.0;
  }
  const auto kind = (j == 0) ? LinkOperatorKind::Identity
                   : dagger  ? LinkOperatorKind::FluxShiftDagger
                             : LinkOperatorKind::FluxShift;
  return {kind, std::move(m)};
}

LinkOperator gauge_rotation(const GroupSpec& g, int element) {
  if (!g.is_cyclic())
    throw std::invalid_argument("integer group elements exist only for Z_N; use gauge_rotation_angle");
  if (element < 0 || element >= g.order())
    throw std::out_of_range("group element out of range");
  return gauge_rotation_angle(g, 2.0 * M_PI * element / g.order());
}

LinkOperator gauge_rotation_angle(const GroupSpec& g, double phi) {
  const int d = g.dim();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (int idx = 0; idx < d; ++idx) {
    const double j = static_cast<double>(g.label_at(idx));
    m(idx, idx) = std::exp(cplx(0.0, j * phi));
  }
  const auto kind = (phi == 0.0) ? LinkOperatorKind::Identity : LinkOperatorKind::GaugeRotation;
  return {kind, std::move(m)};
}

}  // namespace gpeps

#pragma once

#include <compare>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gpeps/group.hpp"

namespace gpeps {

/// Virtual-leg labels of one site tensor, keyed (right, up, left, down).
/// The physical legs are not stored: gauge symmetry forces the side
/// physical label to equal `right` and the top one to equal `up`.
struct VirtualIndex {
  int right, up, left, down;
  auto operator<=>(const VirtualIndex&) const = default;
};

/// Gauge-invariant site tensor, stored as a sparse element map. Every
/// checked insertion enforces the vertex selection rule
/// fuse(right, up) = fuse(left, down).
class GaugeTensor {
 public:
  explicit GaugeTensor(GroupSpec group) : group_(std::move(group)) {}

  const GroupSpec& group() const { return group_; }

  bool satisfies_selection_rule(const VirtualIndex& v) const {
    const auto& g = group_;
    const int out = g.fuse(v.right, v.up);
    const int in = g.fuse(v.left, v.down);
    return g.is_cyclic() ? out == in : out == in;
  }

  /// Checked insertion; throws std::invalid_argument naming the tuple on a
  /// selection-rule violation. Inserting 0 erases.
  void set(const VirtualIndex& v, cplx value);

  /// Unchecked insertion, for loading externally supplied (possibly
  /// symmetry-violating) data; pair with check_gauge_symmetry().
  void set_raw(const VirtualIndex& v, cplx value);

  cplx at(const VirtualIndex& v) const {
    auto it = elems_.find(v);
    return it == elems_.end() ? cplx(0.0) : it->second;
  }

  const std::map<VirtualIndex, cplx>& elements() const { return elems_; }
  std::size_t size() const { return elems_.size(); }

  GaugeTensor scaled(cplx factor) const;

 private:
  GroupSpec group_;
  std::map<VirtualIndex, cplx> elems_;
};

/// Amplitudes of the four-parameter Z2 family, named by the flux pattern
/// through the site they weight.
struct Z2Params {
  cplx flux_free = 0.0;  // no flux line
  cplx corner = 0.0;     // one line turning at the site
  cplx straight = 0.0;   // one line passing straight through
  cplx crossing = 0.0;   // two lines crossing
};

/// The most general translation- and rotation-invariant Z2 site tensor:
/// exactly eight nonzero elements for generic parameters.
GaugeTensor build_z2_tensor(const Z2Params& p);

/// Site tensor for any abelian group from representation-dependent
/// coefficients. Every key must satisfy the selection rule; the offending
/// tuple is reported otherwise.
GaugeTensor build_zn_tensor(const GroupSpec& g,
                            const std::map<VirtualIndex, cplx>& coeffs);

struct SymmetryViolation {
  VirtualIndex index;
  std::string what;
};

struct SymmetryReport {
  bool ok = true;
  std::vector<SymmetryViolation> violations;
};

/// Verifies gauge covariance of the tensor by explicit transformation:
/// for each group element (sampled angles on the truncated U(1)) the
/// combined phase acquired by the outgoing legs must match the one on the
/// ingoing legs. Validates externally supplied tensors as well.
SymmetryReport check_gauge_symmetry(const GaugeTensor& t);

/// Line-based text format: a header naming the group, then one element per
/// line as "j_r j_u j_l j_d re im". '#' starts a comment.
void write_tensor(std::ostream& os, const GaugeTensor& t);

/// Parses the write_tensor format. Elements are loaded unchecked; run
/// check_gauge_symmetry to validate.
GaugeTensor read_tensor(std::istream& is);

}  // namespace gpeps

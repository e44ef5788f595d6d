#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "gpeps/gauge_tensor.hpp"

namespace gpeps {

/// Basis of a doubled virtual leg: ordered pairs (j, j') of irrep labels,
/// flattened as index_of(j) * dim + index_of(j'). The ket factor transforms
/// with the group action, the bra factor with its inverse, so a pair carries
/// the charge ("sector") k = fuse(j, conjugate(j')) and is identified within
/// its sector by the "spin" label j. Sector-0 states are the on-leg singlets
/// |j, j>.
struct DoubledLegBasis {
  GroupSpec group;

  int size() const { return group.dim() * group.dim(); }
  int flat(int j, int jp) const { return group.index_of(j) * group.dim() + group.index_of(jp); }
  std::pair<int, int> labels(int idx) const {
    return {group.label_at(idx / group.dim()), group.label_at(idx % group.dim())};
  }
  int sector(int idx) const {
    auto [j, jp] = labels(idx);
    if (group.is_cyclic()) return group.fuse(j, group.conjugate(jp));
    return j - jp;
  }
  int spin(int idx) const { return labels(idx).first; }

  /// Spin labels j admissible on a leg of sector k (j' = "j minus k" must be
  /// a valid label too; restricts the list only on the truncated U(1)).
  std::vector<int> sector_spins(int k) const;
};

/// Flux content of a site transfer operator: which physical legs carry a
/// group-element insertion. The lower-left loop corner carries both an
/// insertion on the side leg and an inverse one on the top leg.
struct FluxSpec {
  enum class Kind { None, Right, Left, Up, Down, CornerLowerLeft };

  Kind kind = Kind::None;
  int irrep = 0;

  static FluxSpec none() { return {}; }
  static FluxSpec right(int j) { return {Kind::Right, j}; }
  static FluxSpec left(int j) { return {Kind::Left, j}; }
  static FluxSpec up(int j) { return {Kind::Up, j}; }
  static FluxSpec down(int j) { return {Kind::Down, j}; }
  static FluxSpec corner_ll(int j) { return {Kind::CornerLowerLeft, j}; }

  /// Signed label shift applied to the side / top physical leg on the bra
  /// layer (+irrep for an insertion, -irrep for an inverse one).
  int side_shift() const;
  int top_shift() const;

  /// Sectors forced on the outgoing legs (right, up) of any nonzero element.
  int out_sector_h(const GroupSpec& g) const { return as_sector(g, -side_shift()); }
  int out_sector_v(const GroupSpec& g) const { return as_sector(g, -top_shift()); }
  /// Combined sector the two ingoing legs must carry.
  int in_sector_total(const GroupSpec& g) const {
    return as_sector(g, -side_shift() - top_shift());
  }

  /// Normalizes a signed charge to the group's sector labels.
  static int as_sector(const GroupSpec& g, int charge) {
    if (!g.is_cyclic()) return charge;
    const int n = g.order();
    return ((charge % n) + n) % n;
  }

  bool operator==(const FluxSpec&) const = default;
};

/// One column of a row transfer matrix: a four-leg operator with the
/// doubled legs resolved into explicit dimensions,
///   a[((hi * h_out + ho) * v_in + vi) * v_out + vo],
/// where hi/ho run over the left/right legs and vi/vo over the down/up
/// legs. Sector labels ride along as metadata.
struct ColumnOp {
  int h_in = 0, h_out = 0, v_in = 0, v_out = 0;
  int sec_l = 0, sec_r = 0, sec_d = 0, sec_u = 0;
  std::vector<cplx> a;

  cplx& at(int hi, int ho, int vi, int vo) {
    return a[((static_cast<std::size_t>(hi) * h_out + ho) * v_in + vi) * v_out + vo];
  }
  cplx at(int hi, int ho, int vi, int vo) const {
    return a[((static_cast<std::size_t>(hi) * h_out + ho) * v_in + vi) * v_out + vo];
  }
};

/// Site transfer operator on four doubled legs, stored dense:
/// T[(l l'), (r r'), (d d'), (u u')] with each doubled index flattened per
/// DoubledLegBasis. Inputs enter on the left/down legs.
class TransferOperator {
 public:
  TransferOperator(GroupSpec group, FluxSpec flux);

  const GroupSpec& group() const { return group_; }
  const FluxSpec& flux() const { return flux_; }
  const DoubledLegBasis& leg_basis() const { return basis_; }

  cplx at(int l, int r, int d, int u) const {
    const std::size_t n = basis_.size();
    return t_[((static_cast<std::size_t>(l) * n + r) * n + d) * n + u];
  }
  cplx& at(int l, int r, int d, int u) {
    const std::size_t n = basis_.size();
    return t_[((static_cast<std::size_t>(l) * n + r) * n + d) * n + u];
  }

  /// View as a row-matrix column without any sector projection.
  ColumnOp column_unprojected() const;

 private:
  GroupSpec group_;
  FluxSpec flux_;
  DoubledLegBasis basis_;
  std::vector<cplx> t_;
};

/// Contracts the doubled site tensor with the flux insertion:
/// T = sum_phys A . (U matrix element) . conj(A).
TransferOperator build_transfer(const GaugeTensor& t, const FluxSpec& f);

/// A transfer operator with every leg projected onto a single sector;
/// entries are indexed by the per-leg spin labels only.
class ReducedTransfer {
 public:
  ReducedTransfer(GroupSpec group, FluxSpec flux, int sec_l, int sec_r, int sec_d, int sec_u);

  const GroupSpec& group() const { return group_; }
  const FluxSpec& flux() const { return flux_; }
  int sector_l() const { return sec_l_; }
  int sector_r() const { return sec_r_; }
  int sector_d() const { return sec_d_; }
  int sector_u() const { return sec_u_; }

  const std::vector<int>& spins_l() const { return spins_l_; }
  const std::vector<int>& spins_r() const { return spins_r_; }
  const std::vector<int>& spins_d() const { return spins_d_; }
  const std::vector<int>& spins_u() const { return spins_u_; }

  cplx& entry(int il, int ir, int id, int iu) {
    return a_[((static_cast<std::size_t>(il) * spins_r_.size() + ir) * spins_d_.size() + id) *
                  spins_u_.size() +
              iu];
  }
  cplx entry(int il, int ir, int id, int iu) const {
    return a_[((static_cast<std::size_t>(il) * spins_r_.size() + ir) * spins_d_.size() + id) *
                  spins_u_.size() +
              iu];
  }

  /// Matrix with rows indexed by horizontal spin pairs (l, r) and columns by
  /// vertical pairs (d, u); the layout used for spectral reductions.
  Eigen::MatrixXcd hv_matrix() const;

  ColumnOp column() const;

  bool is_flux_free_singlet() const;

 private:
  GroupSpec group_;
  FluxSpec flux_;
  int sec_l_, sec_r_, sec_d_, sec_u_;
  std::vector<int> spins_l_, spins_r_, spins_d_, spins_u_;
  std::vector<cplx> a_;
};

/// Projects the ingoing legs onto the requested sectors (left leg first);
/// the outgoing sectors are forced by the flux. Throws if the request is
/// inconsistent with the flux (e.g. a singlet input on a leg the flux
/// charges).
ReducedTransfer project(const TransferOperator& op, int in_sector_h, int in_sector_v);

/// One charge block of the flux-free singlet reduction: horizontal pairs
/// with spin shift k against vertical pairs with shift -k. The block at -k
/// is the transpose of the one at k.
struct SectorBlock {
  int k;
  std::vector<int> row_spins;  // horizontal l-spin per row, r = "l - k"
  std::vector<int> col_spins;  // vertical d-spin per column, u = "d + k"
  Eigen::MatrixXd block;
};

std::vector<SectorBlock> tau0_blocks(const ReducedTransfer& r);

/// Eigendecomposition of the flux-free singlet reduction: real eigenvalues
/// (sorted by descending magnitude) and the trace-orthonormal operator pair
/// basis on the spin space. The sign of each operator is fixed by making its
/// largest-magnitude entry positive; magnitude-degenerate eigenvalues are
/// ordered by lexicographic comparison of the operator entries.
struct Tau0Spectrum {
  Eigen::VectorXd values;
  std::vector<Eigen::MatrixXd> ops;
};

Tau0Spectrum tau0_spectral(const ReducedTransfer& r);

/// Singular value decomposition of a straight-flux reduction across the
/// (along-flux) x (transverse) bipartition.
struct FluxFactorization {
  Eigen::VectorXd values;
  std::vector<Eigen::MatrixXcd> along;       // factors on the flux direction
  std::vector<Eigen::MatrixXcd> transverse;  // factors orthogonal to it
};

FluxFactorization flux_svd(const ReducedTransfer& r);

/// Labeled CSV dump of a reduced operator (debugging aid).
void dump_csv(std::ostream& os, const ReducedTransfer& r);

}  // namespace gpeps

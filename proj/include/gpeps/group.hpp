#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace gpeps {

using cplx = std::complex<double>;

enum class GroupKind { CyclicN, TruncatedU1 };

/// Abelian symmetry group. Irreps are one-dimensional and labelled by
/// integers: 0..N-1 for Z_N (arithmetic mod N), -cutoff..cutoff for a
/// charge-truncated U(1). Fusion on the truncated U(1) is plain integer
/// addition and may leave the label range; callers decide how to handle
/// the overflow.
class GroupSpec {
 public:
  static GroupSpec cyclic(int order) {
    if (order < 2) throw std::invalid_argument("cyclic group needs order >= 2");
    return GroupSpec(GroupKind::CyclicN, order);
  }
  static GroupSpec truncated_u1(int cutoff) {
    if (cutoff < 1) throw std::invalid_argument("truncated U(1) needs cutoff >= 1");
    return GroupSpec(GroupKind::TruncatedU1, cutoff);
  }

  GroupKind kind() const { return kind_; }
  bool is_cyclic() const { return kind_ == GroupKind::CyclicN; }
  int order() const { return param_; }
  int cutoff() const { return param_; }

  /// Number of irrep labels (= link-space dimension).
  int dim() const { return is_cyclic() ? param_ : 2 * param_ + 1; }

  bool valid_label(int j) const {
    return is_cyclic() ? (j >= 0 && j < param_) : (j >= -param_ && j <= param_);
  }

  void require_label(int j) const {
    if (!valid_label(j)) throw std::out_of_range("irrep label out of range for group");
  }

  int fuse(int a, int b) const {
    require_label(a);
    require_label(b);
    if (is_cyclic()) return mod(a + b);
    return a + b;
  }

  int conjugate(int j) const {
    require_label(j);
    return is_cyclic() ? mod(-j) : -j;
  }

  /// Position of a label in the canonical basis ordering.
  int index_of(int j) const {
    require_label(j);
    return is_cyclic() ? j : j + param_;
  }
  int label_at(int idx) const { return is_cyclic() ? idx : idx - param_; }

  std::vector<int> labels() const {
    std::vector<int> out(dim());
    for (int i = 0; i < dim(); ++i) out[i] = label_at(i);
    return out;
  }

  bool operator==(const GroupSpec&) const = default;

 private:
  GroupSpec(GroupKind k, int p) : kind_(k), param_(p) {}
  int mod(int x) const {
    int m = x % param_;
    return m < 0 ? m + param_ : m;
  }

  GroupKind kind_;
  int param_;
};

enum class LinkOperatorKind { FluxShift, FluxShiftDagger, GaugeRotation, Identity };

/// A single-link operator in the representation basis, stored dense.
struct LinkOperator {
  LinkOperatorKind kind;
  Eigen::MatrixXcd matrix;
};

/// Flux insertion U^j: maps |J> to |fuse(J,j)> with unit amplitude.
/// On the truncated U(1), targets outside the cutoff are dropped, so the
/// matrix is not unitary there.
LinkOperator flux_operator(const GroupSpec& g, int irrep, bool dagger = false);

/// Diagonal unitary with entries exp(i 2 pi j elem / N); Z_N only.
LinkOperator gauge_rotation(const GroupSpec& g, int element);

/// Diagonal unitary with entries exp(i j phi); valid for any abelian group
/// (the continuous transformation of the truncated U(1)).
LinkOperator gauge_rotation_angle(const GroupSpec& g, double phi);

}  // namespace gpeps

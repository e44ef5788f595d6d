#pragma once

#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "gpeps/lattice.hpp"
#include "gpeps/transfer_ops.hpp"

namespace gpeps {

struct ResourceBudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense operator on the tensor product of the per-column vertical leg
/// spaces of one lattice row. The true operator is mat * exp(log_scale);
/// the scale is split off so that powers over hundreds of rows stay inside
/// double range. Rows stack bottom-up: the matrix maps the row's lower legs
/// (rows of mat) to its upper legs (columns).
struct RowMatrix {
  Eigen::MatrixXcd mat;
  double log_scale = 0.0;
  std::vector<int> dims_in, dims_out;        // per-column leg dimensions
  std::vector<int> sectors_in, sectors_out;  // per-column sector labels
};

/// Contracts the columns' horizontal legs with the periodic trace. Adjacent
/// columns must chain consistently in dimension and sector, including the
/// wrap-around bond. Every accumulation step divides out the max-magnitude
/// entry into log_scale.
RowMatrix build_row(const std::vector<const ColumnOp*>& columns);

/// lower * upper, stacking `upper` on top of `lower`.
RowMatrix multiply_rows(const RowMatrix& lower, const RowMatrix& upper);
RowMatrix row_power(const RowMatrix& row, int exponent);

/// A Wilson-loop expectation value in log-magnitude / unit-phase form, so
/// that area-law-suppressed values survive far below double underflow.
struct WilsonValue {
  double log_abs = -std::numeric_limits<double>::infinity();
  cplx phase{0.0};
  std::string note;

  bool is_zero() const { return !(log_abs > -std::numeric_limits<double>::infinity()); }
  cplx value() const { return is_zero() ? cplx(0.0) : phase * std::exp(log_abs); }
  double neg_log_abs() const { return -log_abs; }

  static WilsonValue zero(std::string why) {
    WilsonValue w;
    w.note = std::move(why);
    return w;
  }
  static WilsonValue from(cplx mantissa, double log_scale);
};

/// Spectra of the two-flux-line row operator as a function of the line
/// separation.
struct SpectrumTable {
  struct Entry {
    int r;
    Eigen::VectorXcd eigenvalues;  // sorted by descending magnitude
    double log_scale;
  };
  int n1 = 0;
  std::vector<Entry> entries;

  double leading_log_abs(int r) const;
  const Entry& at(int r) const;
};

/// Exact torus contraction for one tensor. Reduced operators and powers of
/// the flux-free row are cached; all caches sit behind mutexes, so const
/// evaluations may run concurrently.
class ContractionEngine {
 public:
  static constexpr double kDefaultBudgetBytes = 2.0 * 1024 * 1024 * 1024;

  ContractionEngine(GaugeTensor tensor, TorusSpec torus,
                    double budget_bytes = kDefaultBudgetBytes);

  const GaugeTensor& tensor() const { return tensor_; }
  const TorusSpec& torus() const { return torus_; }

  /// log <psi|psi> = log Tr[(flux-free row)^n2].
  double log_norm() const;

  /// Tr[bottom * middle^(r2-1) * top * free^(n2-r2-1)] / Tr[free^n2].
  WilsonValue wilson(const LoopSpec& loop) const;

  SpectrumTable epar_spectrum(int flux, int r_min, int r_max) const;

  /// Thermodynamic-limit (n2 -> infinity) value from the leading spectral
  /// tiers, with magnitude-degenerate eigenvalue phases summed explicitly.
  /// Tiers that do not couple to the loop's cap rows are skipped; if none
  /// couples, the result is an explicit zero flagged "no coupling".
  WilsonValue wilson_thermo(int flux, int r1, int r2) const;

  // Row builders, exposed for validation against the reduction-free path.
  RowMatrix flux_free_row() const;
  RowMatrix bottom_row(int flux, int r1) const;
  RowMatrix middle_row(int flux, int r1) const;
  RowMatrix top_row(int flux, int r1) const;

 private:
  struct ReducedSet {
    ColumnOp flux_free;
    ColumnOp lower_left, bottom_edge, lower_right;
    ColumnOp left_edge, right_edge;
    ColumnOp upper_left, top_edge, upper_right;
  };

  const ReducedSet& reduced(int flux) const;
  RowMatrix flux_free_power(int exponent) const;
  std::vector<const ColumnOp*> row_columns(const ReducedSet& set, int r1, const ColumnOp& first,
                                           const ColumnOp& mid, const ColumnOp& turn) const;

  GaugeTensor tensor_;
  TorusSpec torus_;
  double budget_;

  mutable std::mutex reduced_mutex_;
  mutable std::map<int, ReducedSet> reduced_cache_;
  mutable std::mutex power_mutex_;
  mutable std::map<int, RowMatrix> power_cache_;
};

// Free entry points over a throwaway engine.
double log_norm(const GaugeTensor& tensor, const TorusSpec& torus);
WilsonValue wilson_exact(const GaugeTensor& tensor, const TorusSpec& torus, const LoopSpec& loop);
SpectrumTable epar_spectrum(const GaugeTensor& tensor, int n1, int flux, int r_min, int r_max);
WilsonValue wilson_thermo(const GaugeTensor& tensor, int n1, int flux, int r1, int r2);

/// Same contraction built from the unprojected four-leg transfer operators,
/// with no sector reduction anywhere. Exponentially more expensive; kept as
/// the cross-check that the projections discard nothing.
WilsonValue wilson_exact_unprojected(const GaugeTensor& tensor, const TorusSpec& torus,
                                     const LoopSpec& loop,
                                     double budget_bytes = ContractionEngine::kDefaultBudgetBytes);

/// Closed-form large-loop value for the corner-dominated Z2 family
/// (straight-line amplitude zero, small corner amplitude). Its Creutz
/// parameter is exactly -2 log|crossing / flux_free|.
struct AnalyticZ2Result {
  WilsonValue value;
  bool domain_ok = true;
  std::string warning;
};

AnalyticZ2Result wilson_analytic_z2(const Z2Params& p, int r1, int r2);

}  // namespace gpeps

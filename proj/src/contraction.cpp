#include "gpeps/contraction.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace gpeps {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// out += kron(a, b)
void kron_accumulate(Eigen::MatrixXcd& out, const Eigen::MatrixXcd& a,
                     const Eigen::MatrixXcd& b) {
  const int m = b.rows(), n = b.cols();
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      if (a(i, j) == cplx(0.0)) continue;
      out.block(i * m, j * n, m, n) += a(i, j) * b;
    }
}

Eigen::MatrixXcd column_slice(const ColumnOp& c, int hi, int ho) {
  Eigen::MatrixXcd m(c.v_in, c.v_out);
  for (int vi = 0; vi < c.v_in; ++vi)
    for (int vo = 0; vo < c.v_out; ++vo) m(vi, vo) = c.at(hi, ho, vi, vo);
  return m;
}

double rescale_blocks(std::vector<std::vector<Eigen::MatrixXcd>>& blocks) {
  double m = 0.0;
  for (const auto& row : blocks)
    for (const auto& b : row)
      if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
  if (m > 0.0 && m != 1.0)
    for (auto& row : blocks)
      for (auto& b : row) b /= m;
  return m > 0.0 ? std::log(m) : 0.0;
}

struct ScaledTrace {
  cplx mantissa;
  double log_scale;
};

ScaledTrace trace_row(const RowMatrix& r) {
  if (r.sectors_in != r.sectors_out || r.dims_in != r.dims_out)
    throw std::invalid_argument("row trace needs matching sector profiles top and bottom");
  return {r.mat.trace(), r.log_scale};
}

/// Group of equal (to tolerance) eigenvalues with its spectral projector
/// P = sum |v_i><w_i| over the group, bi-orthonormalized.
struct SpectralCluster {
  cplx value;
  int multiplicity;
  Eigen::MatrixXcd projector;
};

std::vector<SpectralCluster> spectral_clusters(const Eigen::MatrixXcd& m) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, true);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecomposition of a row transfer matrix failed");

  const int n = m.rows();
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  const Eigen::VectorXcd& vals = es.eigenvalues();
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double ma = std::abs(vals[a]), mb = std::abs(vals[b]);
    if (ma != mb) return ma > mb;
    if (vals[a].real() != vals[b].real()) return vals[a].real() > vals[b].real();
    return vals[a].imag() > vals[b].imag();
  });

  // The rows of the inverted eigenvector matrix are the matching left
  // eigenvectors, biorthonormal by construction. This stays well defined for
  // degenerate clusters, where separately solved left vectors can be
  // self-orthogonal under the plain (unconjugated) pairing.
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(es.eigenvectors());
  if (!lu.isInvertible())
    throw NumericalError("defective row transfer matrix; no spectral projector");
  const Eigen::MatrixXcd left_rows = lu.inverse();

  const double vmax = vals.cwiseAbs().maxCoeff();
  const double tol = 1e-9 * std::max(vmax, 1e-300);

  std::vector<SpectralCluster> clusters;
  int pos = 0;
  while (pos < n) {
    int end = pos + 1;
    while (end < n && std::abs(vals[idx[end]] - vals[idx[pos]]) <= tol) ++end;
    SpectralCluster c;
    c.value = vals[idx[pos]];
    c.multiplicity = end - pos;
    c.projector = Eigen::MatrixXcd::Zero(n, n);
    for (int k = pos; k < end; ++k)
      c.projector += es.eigenvectors().col(idx[k]) * left_rows.row(idx[k]);
    clusters.push_back(std::move(c));
    pos = end;
  }
  return clusters;
}

}  // namespace

WilsonValue WilsonValue::from(cplx mantissa, double log_scale) {
  if (mantissa == cplx(0.0)) return WilsonValue::zero("");
  WilsonValue w;
  w.log_abs = std::log(std::abs(mantissa)) + log_scale;
  w.phase = mantissa / std::abs(mantissa);
  return w;
}

RowMatrix build_row(const std::vector<const ColumnOp*>& columns) {
  if (columns.empty()) throw std::invalid_argument("row needs at least one column");
  const int n = columns.size();
  for (int c = 0; c < n; ++c) {
    const ColumnOp& cur = *columns[c];
    const ColumnOp& next = *columns[(c + 1) % n];
    if (cur.h_out != next.h_in || cur.sec_r != next.sec_l)
      throw std::invalid_argument("sector mismatch between adjacent columns");
  }

  const int b0 = columns[0]->h_in;
  std::vector<std::vector<Eigen::MatrixXcd>> blocks(b0);
  for (int i = 0; i < b0; ++i) {
    blocks[i].resize(columns[0]->h_out);
    for (int j = 0; j < columns[0]->h_out; ++j) blocks[i][j] = column_slice(*columns[0], i, j);
  }
  double log_scale = rescale_blocks(blocks);

  for (int c = 1; c < n; ++c) {
    const ColumnOp& col = *columns[c];
    std::vector<Eigen::MatrixXcd> slices(col.h_in * col.h_out);
    for (int j = 0; j < col.h_in; ++j)
      for (int jp = 0; jp < col.h_out; ++jp) slices[j * col.h_out + jp] = column_slice(col, j, jp);

    const int rows_acc = blocks[0][0].rows();
    const int cols_acc = blocks[0][0].cols();
    std::vector<std::vector<Eigen::MatrixXcd>> next(b0);
    for (int i = 0; i < b0; ++i) {
      next[i].assign(col.h_out,
                     Eigen::MatrixXcd::Zero(rows_acc * col.v_in, cols_acc * col.v_out));
      for (int jp = 0; jp < col.h_out; ++jp)
        for (int j = 0; j < col.h_in; ++j)
          kron_accumulate(next[i][jp], blocks[i][j], slices[j * col.h_out + jp]);
    }
    blocks.swap(next);
    log_scale += rescale_blocks(blocks);
  }

  RowMatrix out;
  out.mat = Eigen::MatrixXcd::Zero(blocks[0][0].rows(), blocks[0][0].cols());
  for (int i = 0; i < b0; ++i) out.mat += blocks[i][i];
  out.log_scale = log_scale;
  for (const ColumnOp* c : columns) {
    out.dims_in.push_back(c->v_in);
    out.dims_out.push_back(c->v_out);
    out.sectors_in.push_back(c->sec_d);
    out.sectors_out.push_back(c->sec_u);
  }
  return out;
}

RowMatrix multiply_rows(const RowMatrix& lower, const RowMatrix& upper) {
  if (lower.dims_out != upper.dims_in || lower.sectors_out != upper.sectors_in)
    throw std::invalid_argument("sector mismatch between stacked rows");
  RowMatrix out;
  out.mat = lower.mat * upper.mat;
  out.log_scale = lower.log_scale + upper.log_scale;
  const double m = out.mat.size() > 0 ? out.mat.cwiseAbs().maxCoeff() : 0.0;
  if (m > 0.0 && m != 1.0) {
    out.mat /= m;
    out.log_scale += std::log(m);
  }
  out.dims_in = lower.dims_in;
  out.dims_out = upper.dims_out;
  out.sectors_in = lower.sectors_in;
  out.sectors_out = upper.sectors_out;
  return out;
}

RowMatrix row_power(const RowMatrix& row, int exponent) {
  if (exponent < 0) throw std::invalid_argument("negative row power");
  if (row.dims_in != row.dims_out || row.sectors_in != row.sectors_out)
    throw std::invalid_argument("row powers need matching sector profiles top and bottom");
  if (exponent == 0) {
    RowMatrix id;
    id.mat = Eigen::MatrixXcd::Identity(row.mat.rows(), row.mat.rows());
    id.dims_in = id.dims_out = row.dims_in;
    id.sectors_in = id.sectors_out = row.sectors_in;
    return id;
  }
  RowMatrix acc = row;
  for (int k = 1; k < exponent; ++k) acc = multiply_rows(acc, row);
  return acc;
}

double SpectrumTable::leading_log_abs(int r) const {
  const Entry& e = at(r);
  return std::log(std::abs(e.eigenvalues[0])) + e.log_scale;
}

const SpectrumTable::Entry& SpectrumTable::at(int r) const {
  for (const auto& e : entries)
    if (e.r == r) return e;
  throw std::out_of_range("no spectrum entry for requested separation");
}

ContractionEngine::ContractionEngine(GaugeTensor tensor, TorusSpec torus, double budget_bytes)
    : tensor_(std::move(tensor)), torus_(torus), budget_(budget_bytes) {
  torus_.validate();
  if (tensor_.size() == 0) throw std::invalid_argument("empty tensor");
  // Row-space feasibility, checked before any allocation: the flux-free row
  // is a dense D x D matrix with D = dim^n1, and up to n2 of its powers are
  // cached.
  const double log_dim = torus_.n1 * std::log(static_cast<double>(tensor_.group().dim()));
  const double log_bytes = 2.0 * log_dim + std::log(16.0 * (torus_.n2 + 16.0));
  if (log_bytes > std::log(budget_))
    throw ResourceBudgetError("row space exceeds the memory budget");
}

const ContractionEngine::ReducedSet& ContractionEngine::reduced(int flux) const {
  std::lock_guard lock(reduced_mutex_);
  auto it = reduced_cache_.find(flux);
  if (it != reduced_cache_.end()) return it->second;

  tensor_.group().require_label(flux);
  const auto t_none = build_transfer(tensor_, FluxSpec::none());
  const auto t_side = build_transfer(tensor_, FluxSpec::right(flux));
  const auto t_side_inv = build_transfer(tensor_, FluxSpec::left(flux));
  const auto t_top = build_transfer(tensor_, FluxSpec::up(flux));
  const auto t_top_inv = build_transfer(tensor_, FluxSpec::down(flux));
  const auto t_corner = build_transfer(tensor_, FluxSpec::corner_ll(flux));

  ReducedSet set;
  set.flux_free = project(t_none, 0, 0).column();
  // Counter-clockwise loop tiling. The flux line leaves the lower-left
  // corner rightwards (charge -J on the horizontal legs), turns up at the
  // lower-right, runs up the right edge (-J vertically), and returns as the
  // conjugate charge +J along the top edge and down the left edge.
  set.lower_left = project(t_corner, 0, 0).column();
  set.bottom_edge = project(t_side, -flux, 0).column();
  set.lower_right = project(t_top, -flux, 0).column();
  set.right_edge = project(t_top, 0, -flux).column();
  set.upper_right = project(t_none, flux, -flux).column();
  set.top_edge = project(t_side_inv, flux, 0).column();
  set.upper_left = project(t_side_inv, 0, flux).column();
  set.left_edge = project(t_top_inv, 0, flux).column();

  return reduced_cache_.emplace(flux, std::move(set)).first->second;
}

std::vector<const ColumnOp*> ContractionEngine::row_columns(const ReducedSet& set, int r1,
                                                            const ColumnOp& first,
                                                            const ColumnOp& mid,
                                                            const ColumnOp& turn) const {
  if (r1 < 1 || r1 > torus_.n1 - 1)
    throw std::invalid_argument("flux line separation outside [1, n1-1]");
  std::vector<const ColumnOp*> cols;
  cols.push_back(&first);
  for (int c = 1; c < r1; ++c) cols.push_back(&mid);
  cols.push_back(&turn);
  for (int c = r1 + 1; c < torus_.n1; ++c) cols.push_back(&set.flux_free);
  return cols;
}

RowMatrix ContractionEngine::flux_free_row() const {
  const ReducedSet& set = reduced(0);
  std::vector<const ColumnOp*> cols(torus_.n1, &set.flux_free);
  return build_row(cols);
}

RowMatrix ContractionEngine::bottom_row(int flux, int r1) const {
  const ReducedSet& set = reduced(flux);
  return build_row(row_columns(set, r1, set.lower_left, set.bottom_edge, set.lower_right));
}

RowMatrix ContractionEngine::middle_row(int flux, int r1) const {
  const ReducedSet& set = reduced(flux);
  return build_row(row_columns(set, r1, set.left_edge, set.flux_free, set.right_edge));
}

RowMatrix ContractionEngine::top_row(int flux, int r1) const {
  const ReducedSet& set = reduced(flux);
  return build_row(row_columns(set, r1, set.upper_left, set.top_edge, set.upper_right));
}

RowMatrix ContractionEngine::flux_free_power(int exponent) const {
  std::lock_guard lock(power_mutex_);
  if (exponent == 0) {
    RowMatrix base = power_cache_.count(1) ? power_cache_.at(1) : flux_free_row();
    return row_power(base, 0);
  }
  auto it = power_cache_.find(exponent);
  if (it != power_cache_.end()) return it->second;
  if (power_cache_.empty()) power_cache_.emplace(1, flux_free_row());
  // extend from the largest cached power below the request
  auto below = power_cache_.upper_bound(exponent);
  --below;
  int k = below->first;
  RowMatrix acc = below->second;
  const RowMatrix& base = power_cache_.at(1);
  while (k < exponent) {
    acc = multiply_rows(acc, base);
    ++k;
    power_cache_.emplace(k, acc);
  }
  return acc;
}

double ContractionEngine::log_norm() const {
  const auto tr = trace_row(flux_free_power(torus_.n2));
  if (tr.mantissa == cplx(0.0)) throw NumericalError("state norm is numerically zero");
  if (tr.mantissa.real() <= 0.0 ||
      std::abs(tr.mantissa.imag()) > 1e-8 * std::abs(tr.mantissa))
    throw NumericalError("norm trace is not a positive real number");
  return std::log(tr.mantissa.real()) + tr.log_scale;
}

WilsonValue ContractionEngine::wilson(const LoopSpec& loop) const {
  loop.validate(torus_);
  tensor_.group().require_label(loop.flux);

  RowMatrix acc = bottom_row(loop.flux, loop.r1);
  acc = multiply_rows(acc, row_power(middle_row(loop.flux, loop.r1), loop.r2 - 1));
  acc = multiply_rows(acc, top_row(loop.flux, loop.r1));
  acc = multiply_rows(acc, flux_free_power(torus_.n2 - loop.r2 - 1));
  const auto num = trace_row(acc);
  const auto den = trace_row(flux_free_power(torus_.n2));

  if (den.mantissa == cplx(0.0)) throw NumericalError("state norm is numerically zero");
  if (num.mantissa == cplx(0.0))
    return WilsonValue::zero("loop amplitude vanishes: no symmetry-allowed tiling closes the flux path");

  WilsonValue w;
  w.log_abs = std::log(std::abs(num.mantissa)) + num.log_scale -
              std::log(std::abs(den.mantissa)) - den.log_scale;
  w.phase = (num.mantissa / std::abs(num.mantissa)) *
            std::conj(den.mantissa / std::abs(den.mantissa));
  return w;
}

SpectrumTable ContractionEngine::epar_spectrum(int flux, int r_min, int r_max) const {
  if (r_min < 1 || r_max > torus_.n1 - 1 || r_min > r_max)
    throw std::invalid_argument("separation range outside [1, n1-1]");
  SpectrumTable table;
  table.n1 = torus_.n1;
  for (int r = r_min; r <= r_max; ++r) {
    const RowMatrix row = middle_row(flux, r);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(row.mat, false);
    if (es.info() != Eigen::Success) throw NumericalError("two-line row eigendecomposition failed");
    Eigen::VectorXcd vals = es.eigenvalues();
    std::sort(vals.data(), vals.data() + vals.size(),
              [](cplx a, cplx b) { return std::abs(a) > std::abs(b); });
    table.entries.push_back({r, std::move(vals), row.log_scale});
  }
  return table;
}

WilsonValue ContractionEngine::wilson_thermo(int flux, int r1, int r2) const {
  if (r2 < 1) throw std::invalid_argument("loop height must be positive");
  const RowMatrix free_row = flux_free_row();
  const RowMatrix low = bottom_row(flux, r1);
  const RowMatrix mid = middle_row(flux, r1);
  const RowMatrix up = top_row(flux, r1);

  const auto free_clusters = spectral_clusters(free_row.mat);
  const double rho1 = std::abs(free_clusters.front().value);
  const double tier_tol = 1e-9 * std::max(rho1, 1e-300);

  // Leading modulus tier of the flux-free row.
  int tier_count = 0;
  Eigen::MatrixXcd p_top = Eigen::MatrixXcd::Zero(free_row.mat.rows(), free_row.mat.cols());
  for (const auto& c : free_clusters) {
    if (std::abs(std::abs(c.value) - rho1) > tier_tol) break;
    if (std::abs(c.value - free_clusters.front().value) > tier_tol)
      throw NumericalError("mixed phases in the leading flux-free tier; thermodynamic limit undefined");
    p_top += c.projector;
    tier_count += c.multiplicity;
  }
  const cplx rho1_value = free_clusters.front().value;

  const auto mid_clusters = spectral_clusters(mid.mat);
  const double ref_scale =
      (p_top * low.mat).norm() * up.mat.norm() + std::numeric_limits<double>::min();

  // Walk modulus tiers of the two-line row until one couples to the caps.
  std::size_t pos = 0;
  while (pos < mid_clusters.size()) {
    const double tier_mod = std::abs(mid_clusters[pos].value);
    std::size_t end = pos;
    std::vector<cplx> couplings;
    std::vector<cplx> values;
    double coupling_sum = 0.0;
    while (end < mid_clusters.size() &&
           std::abs(std::abs(mid_clusters[end].value) - tier_mod) <=
               1e-9 * std::max(std::abs(mid_clusters.front().value), 1e-300)) {
      const cplx x = (p_top * low.mat * mid_clusters[end].projector * up.mat).trace();
      couplings.push_back(x);
      values.push_back(mid_clusters[end].value);
      coupling_sum += std::abs(x);
      ++end;
    }
    if (tier_mod > 0.0 && coupling_sum > 1e-10 * ref_scale) {
      cplx mantissa(0.0);
      for (std::size_t k = 0; k < couplings.size(); ++k)
        mantissa += std::pow(values[k] / tier_mod, r2 - 1) * couplings[k];
      if (mantissa == cplx(0.0))
        return WilsonValue::zero("tier couplings cancel exactly after the phase sum");
      WilsonValue w;
      w.log_abs = std::log(std::abs(mantissa)) + (r2 - 1) * (std::log(tier_mod) + mid.log_scale) +
                  low.log_scale + up.log_scale -
                  std::log(static_cast<double>(tier_count)) -
                  (r2 + 1) * (std::log(rho1) + free_row.log_scale);
      w.phase = (mantissa / std::abs(mantissa)) *
                std::conj(std::pow(rho1_value / rho1, r2 + 1));
      return w;
    }
    pos = end;
  }
  return WilsonValue::zero("no spectral tier of the two-line row couples to the loop caps");
}

double log_norm(const GaugeTensor& tensor, const TorusSpec& torus) {
  return ContractionEngine(tensor, torus).log_norm();
}

WilsonValue wilson_exact(const GaugeTensor& tensor, const TorusSpec& torus, const LoopSpec& loop) {
  return ContractionEngine(tensor, torus).wilson(loop);
}

SpectrumTable epar_spectrum(const GaugeTensor& tensor, int n1, int flux, int r_min, int r_max) {
  return ContractionEngine(tensor, {n1, 2}).epar_spectrum(flux, r_min, r_max);
}

WilsonValue wilson_thermo(const GaugeTensor& tensor, int n1, int flux, int r1, int r2) {
  return ContractionEngine(tensor, {n1, 2}).wilson_thermo(flux, r1, r2);
}

WilsonValue wilson_exact_unprojected(const GaugeTensor& tensor, const TorusSpec& torus,
                                     const LoopSpec& loop, double budget_bytes) {
  torus.validate();
  loop.validate(torus);
  const GroupSpec& g = tensor.group();
  g.require_label(loop.flux);

  const double log_dim =
      2.0 * torus.n1 * std::log(static_cast<double>(g.dim()));  // doubled legs, no reduction
  if (2.0 * log_dim + std::log(16.0 * 8.0) > std::log(budget_bytes))
    throw ResourceBudgetError("unprojected row space exceeds the memory budget");

  const int flux_label = loop.flux;
  const ColumnOp free_col = build_transfer(tensor, FluxSpec::none()).column_unprojected();
  const ColumnOp side = build_transfer(tensor, FluxSpec::right(flux_label)).column_unprojected();
  const ColumnOp side_inv =
      build_transfer(tensor, FluxSpec::left(flux_label)).column_unprojected();
  const ColumnOp top = build_transfer(tensor, FluxSpec::up(flux_label)).column_unprojected();
  const ColumnOp top_inv =
      build_transfer(tensor, FluxSpec::down(flux_label)).column_unprojected();
  const ColumnOp corner =
      build_transfer(tensor, FluxSpec::corner_ll(flux_label)).column_unprojected();

  auto make_row = [&](const ColumnOp& first, const ColumnOp& mid, const ColumnOp& turn) {
    std::vector<const ColumnOp*> cols;
    cols.push_back(&first);
    for (int c = 1; c < loop.r1; ++c) cols.push_back(&mid);
    cols.push_back(&turn);
    for (int c = loop.r1 + 1; c < torus.n1; ++c) cols.push_back(&free_col);
    return build_row(cols);
  };

  std::vector<const ColumnOp*> free_cols(torus.n1, &free_col);
  const RowMatrix free_row = build_row(free_cols);

  RowMatrix acc = make_row(corner, side, top);
  acc = multiply_rows(acc, row_power(make_row(top_inv, free_col, top), loop.r2 - 1));
  acc = multiply_rows(acc, make_row(side_inv, side_inv, free_col));
  acc = multiply_rows(acc, row_power(free_row, torus.n2 - loop.r2 - 1));
  const auto num = trace_row(acc);
  const auto den = trace_row(row_power(free_row, torus.n2));

  if (den.mantissa == cplx(0.0)) throw NumericalError("state norm is numerically zero");
  if (num.mantissa == cplx(0.0)) return WilsonValue::zero("loop amplitude vanishes");
  WilsonValue w;
  w.log_abs = std::log(std::abs(num.mantissa)) + num.log_scale -
              std::log(std::abs(den.mantissa)) - den.log_scale;
  w.phase = (num.mantissa / std::abs(num.mantissa)) *
            std::conj(den.mantissa / std::abs(den.mantissa));
  return w;
}

AnalyticZ2Result wilson_analytic_z2(const Z2Params& p, int r1, int r2) {
  if (p.straight != cplx(0.0))
    throw std::invalid_argument("closed form requires a vanishing straight-line amplitude");
  if (p.corner == cplx(0.0) || p.flux_free == cplx(0.0) || p.crossing == cplx(0.0))
    throw std::invalid_argument("closed form needs nonzero flux-free, corner and crossing amplitudes");
  if (r1 < 1 || r2 < 1) throw std::invalid_argument("loop sides must be positive");

  const double a = std::abs(p.flux_free);
  const double b = std::abs(p.corner);
  const double d = std::abs(p.crossing);

  AnalyticZ2Result res;
  if (!(b <= 0.3 * d && d < a)) {
    res.domain_ok = false;
    res.warning = "outside validity domain |corner| << |crossing| < |flux_free|";
  }

  // 2 |a d / b^2|^2 |d/a|^(2 r1 r2) |b^2/(a d)|^(2 (r1+r2)), times the real
  // part of the fourth power of the flux-free/corner relative phase when the
  // area is odd. That factor is signed: it flips the sign of odd-area loops
  // for some complex parameter choices.
  double log_abs = std::log(2.0) + 2.0 * (std::log(a * d) - 2.0 * std::log(b)) +
                   2.0 * r1 * r2 * std::log(d / a) +
                   2.0 * (r1 + r2) * (2.0 * std::log(b) - std::log(a * d));
  double sign = 1.0;
  if ((r1 * r2) % 2 == 1) {
    const cplx u = p.flux_free * std::conj(p.corner);
    const double factor = std::pow(u / std::abs(u), 4).real();
    if (factor == 0.0) {
      res.value = WilsonValue::zero("odd-area phase factor vanishes");
      return res;
    }
    log_abs += std::log(std::abs(factor));
    sign = factor < 0.0 ? -1.0 : 1.0;
  }
  res.value.log_abs = log_abs;
  res.value.phase = cplx(sign);
  return res;
}

}  // namespace gpeps

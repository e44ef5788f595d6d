#include "gpeps/transfer_ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace gpeps {

namespace {

/// "j minus k" in the sector arithmetic of the group; nullopt if the partner
/// label leaves the truncated range.
std::optional<int> partner_label(const GroupSpec& g, int j, int k) {
  if (g.is_cyclic()) return g.fuse(j, g.conjugate(FluxSpec::as_sector(g, k)));
  const int jp = j - k;
  if (!g.valid_label(jp)) return std::nullopt;
  return jp;
}

/// Shifts a label by a signed charge; nullopt when truncation drops it.
std::optional<int> shift_label(const GroupSpec& g, int j, int shift) {
  if (g.is_cyclic()) return FluxSpec::as_sector(g, j + shift);
  const int out = j + shift;
  if (!g.valid_label(out)) return std::nullopt;
  return out;
}

}  // namespace

std::vector<int> DoubledLegBasis::sector_spins(int k) const {
  std::vector<int> out;
  for (int j : group.labels())
    if (partner_label(group, j, k)) out.push_back(j);
  return out;
}

int FluxSpec::side_shift() const {
  switch (kind) {
    case Kind::Right: return irrep;
    case Kind::Left: return -irrep;
    case Kind::CornerLowerLeft: return irrep;
    default: return 0;
  }
}

int FluxSpec::top_shift() const {
  switch (kind) {
    case Kind::Up: return irrep;
    case Kind::Down: return -irrep;
    case Kind::CornerLowerLeft: return -irrep;
    default: return 0;
  }
}

TransferOperator::TransferOperator(GroupSpec group, FluxSpec flux)
    : group_(std::move(group)), flux_(flux), basis_{group_} {
  const std::size_t n = basis_.size();
  t_.assign(n * n * n * n, cplx(0.0));
}

ColumnOp TransferOperator::column_unprojected() const {
  ColumnOp c;
  c.h_in = c.h_out = c.v_in = c.v_out = basis_.size();
  c.a = t_;
  return c;
}

TransferOperator build_transfer(const GaugeTensor& t, const FluxSpec& f) {
  const GroupSpec& g = t.group();
  g.require_label(f.irrep);
  TransferOperator op(g, f);
  const DoubledLegBasis& basis = op.leg_basis();

  // Bra-layer elements grouped by their (right, up) labels. The physical
  // trace identifies the two layers' physical legs, which the symmetry in
  // turn pins to the outgoing virtual labels, so the bra layer's (r', u')
  // are the ket layer's (r, u) shifted by the flux insertion.
  std::map<std::pair<int, int>, std::vector<std::pair<VirtualIndex, cplx>>> by_out;
  for (const auto& [idx, val] : t.elements())
    by_out[{idx.right, idx.up}].push_back({idx, val});

  for (const auto& [ket_idx, ket_val] : t.elements()) {
    const auto r_bra = shift_label(g, ket_idx.right, f.side_shift());
    const auto u_bra = shift_label(g, ket_idx.up, f.top_shift());
    if (!r_bra || !u_bra) continue;
    const auto it = by_out.find({*r_bra, *u_bra});
    if (it == by_out.end()) continue;
    for (const auto& [bra_idx, bra_val] : it->second) {
      op.at(basis.flat(ket_idx.left, bra_idx.left), basis.flat(ket_idx.right, bra_idx.right),
            basis.flat(ket_idx.down, bra_idx.down), basis.flat(ket_idx.up, bra_idx.up)) +=
          ket_val * std::conj(bra_val);
    }
  }
  return op;
}

ReducedTransfer::ReducedTransfer(GroupSpec group, FluxSpec flux, int sec_l, int sec_r, int sec_d,
                                 int sec_u)
    : group_(std::move(group)),
      flux_(flux),
      sec_l_(sec_l),
      sec_r_(sec_r),
      sec_d_(sec_d),
      sec_u_(sec_u) {
  const DoubledLegBasis basis{group_};
  spins_l_ = basis.sector_spins(sec_l_);
  spins_r_ = basis.sector_spins(sec_r_);
  spins_d_ = basis.sector_spins(sec_d_);
  spins_u_ = basis.sector_spins(sec_u_);
  a_.assign(spins_l_.size() * spins_r_.size() * spins_d_.size() * spins_u_.size(), cplx(0.0));
}

Eigen::MatrixXcd ReducedTransfer::hv_matrix() const {
  const int nl = spins_l_.size(), nr = spins_r_.size();
  const int nd = spins_d_.size(), nu = spins_u_.size();
  Eigen::MatrixXcd m(nl * nr, nd * nu);
  for (int il = 0; il < nl; ++il)
    for (int ir = 0; ir < nr; ++ir)
      for (int id = 0; id < nd; ++id)
        for (int iu = 0; iu < nu; ++iu) m(il * nr + ir, id * nu + iu) = entry(il, ir, id, iu);
  return m;
}

ColumnOp ReducedTransfer::column() const {
  ColumnOp c;
  c.h_in = spins_l_.size();
  c.h_out = spins_r_.size();
  c.v_in = spins_d_.size();
  c.v_out = spins_u_.size();
  c.sec_l = sec_l_;
  c.sec_r = sec_r_;
  c.sec_d = sec_d_;
  c.sec_u = sec_u_;
  c.a = a_;  // entry() and ColumnOp share the (l, r, d, u) layout
  return c;
}

bool ReducedTransfer::is_flux_free_singlet() const {
  const int zero = FluxSpec::as_sector(group_, 0);
  return flux_.kind == FluxSpec::Kind::None && sec_l_ == zero && sec_r_ == zero &&
         sec_d_ == zero && sec_u_ == zero;
}

ReducedTransfer project(const TransferOperator& op, int in_sector_h, int in_sector_v) {
  const GroupSpec& g = op.group();
  const FluxSpec& f = op.flux();
  const int want = FluxSpec::as_sector(g, in_sector_h + in_sector_v);
  if (want != f.in_sector_total(g))
    throw std::invalid_argument(
        "requested input sectors are inconsistent with the operator's flux");

  ReducedTransfer red(g, f, FluxSpec::as_sector(g, in_sector_h), f.out_sector_h(g),
                      FluxSpec::as_sector(g, in_sector_v), f.out_sector_v(g));
  if (red.spins_l().empty() || red.spins_r().empty() || red.spins_d().empty() ||
      red.spins_u().empty())
    throw std::invalid_argument("requested sector has no states within the label range");

  const DoubledLegBasis& basis = op.leg_basis();
  auto flat = [&](int j, int sec) {
    return basis.flat(j, *partner_label(g, j, sec));
  };
  for (std::size_t il = 0; il < red.spins_l().size(); ++il)
    for (std::size_t ir = 0; ir < red.spins_r().size(); ++ir)
      for (std::size_t id = 0; id < red.spins_d().size(); ++id)
        for (std::size_t iu = 0; iu < red.spins_u().size(); ++iu)
          red.entry(il, ir, id, iu) =
              op.at(flat(red.spins_l()[il], red.sector_l()), flat(red.spins_r()[ir], red.sector_r()),
                    flat(red.spins_d()[id], red.sector_d()), flat(red.spins_u()[iu], red.sector_u()));
  return red;
}

std::vector<SectorBlock> tau0_blocks(const ReducedTransfer& r) {
  if (!r.is_flux_free_singlet())
    throw std::invalid_argument("charge blocks are defined on the flux-free singlet reduction");
  const GroupSpec& g = r.group();

  std::vector<int> shifts;
  if (g.is_cyclic())
    for (int k = 0; k < g.order(); ++k) shifts.push_back(k);
  else
    for (int k = -2 * g.cutoff(); k <= 2 * g.cutoff(); ++k) shifts.push_back(k);

  // Index of a spin label within the reduction's singlet spin list.
  auto spin_pos = [&](const std::vector<int>& spins, int j) {
    return std::distance(spins.begin(), std::find(spins.begin(), spins.end(), j));
  };

  std::vector<SectorBlock> blocks;
  for (int k : shifts) {
    SectorBlock b;
    b.k = k;
    for (int j : g.labels())
      if (partner_label(g, j, k)) b.row_spins.push_back(j);
    for (int j : g.labels())
      if (shift_label(g, j, k)) b.col_spins.push_back(j);
    if (b.row_spins.empty() || b.col_spins.empty()) continue;
    b.block.resize(b.row_spins.size(), b.col_spins.size());
    for (std::size_t i = 0; i < b.row_spins.size(); ++i) {
      const int jl = b.row_spins[i];
      const int jr = *partner_label(g, jl, k);
      for (std::size_t c = 0; c < b.col_spins.size(); ++c) {
        const int jd = b.col_spins[c];
        const int ju = *shift_label(g, jd, k);
        const cplx v = r.entry(spin_pos(r.spins_l(), jl), spin_pos(r.spins_r(), jr),
                               spin_pos(r.spins_d(), jd), spin_pos(r.spins_u(), ju));
        b.block(i, c) = v.real();
      }
    }
    blocks.push_back(std::move(b));
  }
  return blocks;
}

Tau0Spectrum tau0_spectral(const ReducedTransfer& r) {
  if (!r.is_flux_free_singlet())
    throw std::invalid_argument("spectral reduction is defined on the flux-free singlet reduction");
  const Eigen::MatrixXcd mc = r.hv_matrix();
  const double scale = std::max(1e-300, mc.cwiseAbs().maxCoeff());
  if (mc.imag().cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("singlet reduction has complex entries");
  const Eigen::MatrixXd m = mc.real();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("singlet reduction is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const int n = m.rows();
  const int spins = r.spins_l().size();

  struct Mode {
    double value;
    Eigen::VectorXd vec;
  };
  std::vector<Mode> modes(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v = es.eigenvectors().col(i);
    // Fix the sign: largest-magnitude entry (first among ties) positive.
    int arg = 0;
    for (int k = 1; k < v.size(); ++k)
      if (std::abs(v[k]) > std::abs(v[arg]) + 1e-14) arg = k;
    if (v[arg] < 0) v = -v;
    modes[i] = {es.eigenvalues()[i], v};
  }

  const double vmax = es.eigenvalues().cwiseAbs().maxCoeff();
  const double tol = 1e-9 * std::max(vmax, 1e-300);
  std::sort(modes.begin(), modes.end(), [&](const Mode& a, const Mode& b) {
    if (std::abs(std::abs(a.value) - std::abs(b.value)) > tol) return std::abs(a.value) > std::abs(b.value);
    if (std::abs(a.value - b.value) > tol) return a.value > b.value;
    // exact degeneracy: lexicographic comparison of eigenvector entries
    for (int k = 0; k < a.vec.size(); ++k)
      if (std::abs(a.vec[k] - b.vec[k]) > 1e-14) return a.vec[k] < b.vec[k];
    return false;
  });

  Tau0Spectrum out;
  out.values.resize(n);
  out.ops.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.values[i] = modes[i].value;
    Eigen::MatrixXd op(spins, spins);
    for (int il = 0; il < spins; ++il)
      for (int ir = 0; ir < spins; ++ir) op(il, ir) = modes[i].vec[il * spins + ir];
    out.ops.push_back(std::move(op));
  }
  return out;
}

FluxFactorization flux_svd(const ReducedTransfer& r) {
  using Kind = FluxSpec::Kind;
  const Kind kind = r.flux().kind;
  const bool horizontal = (kind == Kind::Right || kind == Kind::Left);
  const bool vertical = (kind == Kind::Up || kind == Kind::Down);
  if (!horizontal && !vertical)
    throw std::invalid_argument("flux factorization is defined for straight-flux reductions");

  const Eigen::MatrixXcd m = r.hv_matrix();
  FluxFactorization out;
  if (m.cwiseAbs().maxCoeff() == 0.0) return out;  // empty spectrum

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const int nmodes = svd.singularValues().size();
  const int nl = r.spins_l().size(), nr = r.spins_r().size();
  const int nd = r.spins_d().size(), nu = r.spins_u().size();

  out.values = svd.singularValues();
  for (int mu = 0; mu < nmodes; ++mu) {
    Eigen::VectorXcd row_f = svd.matrixU().col(mu);
    Eigen::VectorXcd col_f = svd.matrixV().col(mu).conjugate();
    // Phase convention: largest-magnitude entry of the along-flux factor
    // real positive, compensated on the transverse factor.
    Eigen::VectorXcd& anchor = horizontal ? row_f : col_f;
    Eigen::VectorXcd& other = horizontal ? col_f : row_f;
    int arg = 0;
    for (int k = 1; k < anchor.size(); ++k)
      if (std::abs(anchor[k]) > std::abs(anchor[arg]) + 1e-14) arg = k;
    if (std::abs(anchor[arg]) > 0) {
      const cplx phase = anchor[arg] / std::abs(anchor[arg]);
      anchor /= phase;
      other *= phase;
    }
    Eigen::MatrixXcd row_op(nl, nr), col_op(nd, nu);
    for (int il = 0; il < nl; ++il)
      for (int ir = 0; ir < nr; ++ir) row_op(il, ir) = row_f[il * nr + ir];
    for (int id = 0; id < nd; ++id)
      for (int iu = 0; iu < nu; ++iu) col_op(id, iu) = col_f[id * nu + iu];
    out.along.push_back(horizontal ? row_op : col_op);
    out.transverse.push_back(horizontal ? col_op : row_op);
  }
  return out;
}

void dump_csv(std::ostream& os, const ReducedTransfer& r) {
  auto leg = [](int spin, int sec) {
    return "j=" + std::to_string(spin) + ":k=" + std::to_string(sec);
  };
  os << "lr\\du";
  for (int jd : r.spins_d())
    for (int ju : r.spins_u())
      os << ",(" << leg(jd, r.sector_d()) << " " << leg(ju, r.sector_u()) << ")";
  os << "\n";
  char buf[64];
  for (std::size_t il = 0; il < r.spins_l().size(); ++il)
    for (std::size_t ir = 0; ir < r.spins_r().size(); ++ir) {
      os << "(" << leg(r.spins_l()[il], r.sector_l()) << " " << leg(r.spins_r()[ir], r.sector_r())
         << ")";
      for (std::size_t id = 0; id < r.spins_d().size(); ++id)
        for (std::size_t iu = 0; iu < r.spins_u().size(); ++iu) {
          const cplx v = r.entry(il, ir, id, iu);
          std::snprintf(buf, sizeof(buf), ",%.17g%+.17gi", v.real(), v.imag());
          os << buf;
        }
      os << "\n";
    }
}

}  // namespace gpeps

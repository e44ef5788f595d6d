#include "gpeps/oracle.hpp"

#include <cmath>
#include <map>
#include <ostream>

#include "gpeps/group.hpp"

namespace gpeps {

namespace {

struct Element {
  VirtualIndex idx;
  cplx val;
};

/// Depth-first enumeration of all link configurations with nonzero
/// amplitude: sites are visited in row-major order and a nonzero tensor
/// element is chosen per site, constrained by the links fixed so far.
/// Wrap-around constraints (a row's leftmost site, the bottom row) are
/// checked as soon as the closing link is assigned.
class ConfigEnumerator {
 public:
  ConfigEnumerator(const GaugeTensor& t, const TorusSpec& torus)
      : tensor_(t), torus_(torus), labels_(torus.links(), 0) {
    for (const auto& [idx, val] : t.elements()) elems_.push_back({idx, val});
    for (std::size_t i = 0; i < elems_.size(); ++i) {
      const auto& e = elems_[i].idx;
      by_left_down_[{e.left, e.down}].push_back(i);
      by_left_[e.left].push_back(i);
      by_down_[e.down].push_back(i);
    }
    all_.resize(elems_.size());
    for (std::size_t i = 0; i < elems_.size(); ++i) all_[i] = i;
    pending_left_.assign(torus.n2, 0);
    pending_down_.assign(torus.n1, 0);
  }

  /// visit(labels, amplitude) is called once per allowed configuration.
  void run(const std::function<void(const std::vector<int>&, cplx)>& visit) {
    visit_ = &visit;
    dfs(0, cplx(1.0));
  }

 private:
  int link(int x, int y, int dir) const { return (y * torus_.n1 + x) * 2 + dir; }

  void dfs(int site, cplx amp) {
    if (site == torus_.sites()) {
      (*visit_)(labels_, amp);
      return;
    }
    const int x = site % torus_.n1;
    const int y = site / torus_.n1;

    const std::vector<std::size_t>* cands = &all_;
    if (x > 0 && y > 0) {
      auto it = by_left_down_.find(
          {labels_[link(x - 1, y, 0)], labels_[link(x, y - 1, 1)]});
      if (it == by_left_down_.end()) return;
      cands = &it->second;
    } else if (x > 0) {
      auto it = by_left_.find(labels_[link(x - 1, y, 0)]);
      if (it == by_left_.end()) return;
      cands = &it->second;
    } else if (y > 0) {
      auto it = by_down_.find(labels_[link(x, y - 1, 1)]);
      if (it == by_down_.end()) return;
      cands = &it->second;
    }

    for (std::size_t ei : *cands) {
      const auto& e = elems_[ei].idx;
      if (x == 0) pending_left_[y] = e.left;
      if (y == 0) pending_down_[x] = e.down;
      // closing constraints around the periodic directions
      if (x == torus_.n1 - 1 && e.right != pending_left_[y]) continue;
      if (y == torus_.n2 - 1 && e.up != pending_down_[x]) continue;
      labels_[link(x, y, 0)] = e.right;
      labels_[link(x, y, 1)] = e.up;
      dfs(site + 1, amp * elems_[ei].val);
    }
  }

  const GaugeTensor& tensor_;
  TorusSpec torus_;
  std::vector<int> labels_;
  std::vector<Element> elems_;
  std::map<std::pair<int, int>, std::vector<std::size_t>> by_left_down_;
  std::map<int, std::vector<std::size_t>> by_left_, by_down_;
  std::vector<std::size_t> all_;
  std::vector<int> pending_left_, pending_down_;
  const std::function<void(const std::vector<int>&, cplx)>* visit_ = nullptr;
};

cplx evaluate_amplitude(const GaugeTensor& t, const TorusSpec& torus,
                        const std::vector<int>& labels) {
  auto link = [&](int x, int y, int dir) {
    return labels[((y + torus.n2) % torus.n2 * torus.n1 + (x + torus.n1) % torus.n1) * 2 + dir];
  };
  cplx amp(1.0);
  for (int y = 0; y < torus.n2; ++y)
    for (int x = 0; x < torus.n1; ++x) {
      amp *= t.at({link(x, y, 0), link(x, y, 1), link(x - 1, y, 0), link(x, y - 1, 1)});
      if (amp == cplx(0.0)) return amp;
    }
  return amp;
}

/// Loop links with the label shift that the flux insertion applies to the
/// configuration a wave-function value is read from.
std::vector<std::pair<int, int>> loop_shifts(const GroupSpec& g, const TorusSpec& torus,
                                             const LoopSpec& loop, int ox, int oy) {
  loop.validate(torus);
  g.require_label(loop.flux);
  const int j = loop.flux;
  std::vector<std::pair<int, int>> shifts;
  auto link = [&](int x, int y, int dir) {
    return ((y % torus.n2) * torus.n1 + (x % torus.n1)) * 2 + dir;
  };
  for (int i = 0; i < loop.r1; ++i) {
    shifts.push_back({link(ox + i, oy, 0), -j});            // bottom edge, insertion
    shifts.push_back({link(ox + i, oy + loop.r2, 0), +j});  // top edge, inverse
  }
  for (int i = 0; i < loop.r2; ++i) {
    shifts.push_back({link(ox + loop.r1, oy + i, 1), -j});  // right edge, insertion
    shifts.push_back({link(ox, oy + i, 1), +j});            // left edge, inverse
  }
  return shifts;
}

/// Applies the shifts; false when a label leaves the truncated range.
bool apply_shifts(const GroupSpec& g, const std::vector<std::pair<int, int>>& shifts,
                  std::vector<int>& labels) {
  for (const auto& [l, delta] : shifts) {
    if (g.is_cyclic()) {
      const int n = g.order();
      labels[l] = (((labels[l] + delta) % n) + n) % n;
    } else {
      labels[l] += delta;
      if (!g.valid_label(labels[l])) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<int> StateVector::decode(std::size_t idx) const {
  const int d = group.dim();
  std::vector<int> labels(torus.links());
  for (int k = torus.links() - 1; k >= 0; --k) {
    labels[k] = group.label_at(idx % d);
    idx /= d;
  }
  return labels;
}

std::size_t StateVector::encode(const std::vector<int>& labels) const {
  const int d = group.dim();
  std::size_t idx = 0;
  for (int k = 0; k < torus.links(); ++k) idx = idx * d + group.index_of(labels[k]);
  return idx;
}

bool oracle_within_cap(const GroupSpec& g, const TorusSpec& t) {
  const double entries = std::pow(static_cast<double>(g.dim()), 2.0 * t.sites());
  return t.sites() <= kOracleMaxSites && entries <= kOracleMaxEntries;
}

StateVector build_state(const GaugeTensor& tensor, const TorusSpec& torus) {
  torus.validate();
  if (!oracle_within_cap(tensor.group(), torus))
    throw std::length_error("state vector exceeds the oracle feasibility cap");

  StateVector s{tensor.group(), torus, {}};
  std::size_t n = 1;
  for (int k = 0; k < torus.links(); ++k) n *= tensor.group().dim();
  s.amp.assign(n, cplx(0.0));

  ConfigEnumerator en(tensor, torus);
  en.run([&](const std::vector<int>& labels, cplx amp) { s.amp[s.encode(labels)] = amp; });
  return s;
}

double direct_norm_sq(const StateVector& s) {
  double out = 0.0;
  for (const cplx& a : s.amp) out += std::norm(a);
  return out;
}

GaugeInvarianceReport check_gauge_invariance(const StateVector& s) {
  const GroupSpec& g = s.group;

  std::vector<double> params;
  if (g.is_cyclic()) {
    for (int e = 1; e < g.order(); ++e) params.push_back(2.0 * M_PI * e / g.order());
  } else {
    params = {1.0, 0.5, 2.0 * M_PI / 7.0};
  }
  std::vector<Eigen::MatrixXcd> rots;
  for (double phi : params) rots.push_back(gauge_rotation_angle(g, phi).matrix);

  double amax = 0.0;
  for (const cplx& a : s.amp) amax = std::max(amax, std::abs(a));

  const int n1 = s.torus.n1, n2 = s.torus.n2;
  // deviation per (site, parameter)
  std::vector<double> dev(s.torus.sites() * params.size(), 0.0);
  for (std::size_t c = 0; c < s.amp.size(); ++c) {
    if (s.amp[c] == cplx(0.0)) continue;
    const auto labels = s.decode(c);
    for (int y = 0; y < n2; ++y)
      for (int x = 0; x < n1; ++x) {
        const int out1 = g.index_of(labels[s.link_index(x, y, 0)]);
        const int out2 = g.index_of(labels[s.link_index(x, y, 1)]);
        const int in1 = g.index_of(labels[s.link_index((x + n1 - 1) % n1, y, 0)]);
        const int in2 = g.index_of(labels[s.link_index(x, (y + n2 - 1) % n2, 1)]);
        for (std::size_t p = 0; p < params.size(); ++p) {
          const cplx phase = rots[p](out1, out1) * rots[p](out2, out2) *
                             std::conj(rots[p](in1, in1)) * std::conj(rots[p](in2, in2));
          double& slot = dev[(y * n1 + x) * params.size() + p];
          slot = std::max(slot, std::abs(s.amp[c] * phase - s.amp[c]));
        }
      }
  }

  GaugeInvarianceReport report;
  for (int y = 0; y < n2; ++y)
    for (int x = 0; x < n1; ++x)
      for (std::size_t p = 0; p < params.size(); ++p) {
        const double d = dev[(y * n1 + x) * params.size() + p];
        report.max_deviation = std::max(report.max_deviation, d);
        if (d > 1e-12 * std::max(1.0, amax)) {
          report.ok = false;
          report.violations.push_back({x, y, params[p], d});
        }
      }
  return report;
}

GaussLawReport check_gauss_law(const StateVector& s) {
  const GroupSpec& g = s.group;
  GaussLawReport report;
  const int n1 = s.torus.n1, n2 = s.torus.n2;
  for (std::size_t c = 0; c < s.amp.size(); ++c) {
    if (s.amp[c] == cplx(0.0)) continue;
    ++report.checked;
    const auto labels = s.decode(c);
    bool good = true;
    for (int y = 0; y < n2 && good; ++y)
      for (int x = 0; x < n1 && good; ++x) {
        const int out1 = labels[s.link_index(x, y, 0)];
        const int out2 = labels[s.link_index(x, y, 1)];
        const int in1 = labels[s.link_index((x + n1 - 1) % n1, y, 0)];
        const int in2 = labels[s.link_index(x, (y + n2 - 1) % n2, 1)];
        if (g.is_cyclic())
          good = g.fuse(out1, out2) == g.fuse(in1, in2);
        else
          good = out1 + out2 == in1 + in2;
      }
    if (!good) ++report.violating_configs;
  }
  report.ok = report.violating_configs == 0;
  return report;
}

cplx direct_wilson(const StateVector& s, const LoopSpec& loop, int origin_x, int origin_y) {
  const auto shifts = loop_shifts(s.group, s.torus, loop, origin_x, origin_y);
  cplx num(0.0);
  double den = 0.0;
  for (std::size_t c = 0; c < s.amp.size(); ++c) {
    if (s.amp[c] == cplx(0.0)) continue;
    den += std::norm(s.amp[c]);
    auto labels = s.decode(c);
    if (!apply_shifts(s.group, shifts, labels)) continue;
    num += std::conj(s.amp[c]) * s.amp[s.encode(labels)];
  }
  if (den == 0.0) throw std::runtime_error("state has zero norm");
  return num / den;
}

void dump_amplitudes(std::ostream& os, const StateVector& s) {
  os << "configuration,re,im\n";
  char buf[64];
  for (std::size_t c = 0; c < s.amp.size(); ++c) {
    if (s.amp[c] == cplx(0.0)) continue;
    const auto labels = s.decode(c);
    std::string key;
    for (std::size_t k = 0; k < labels.size(); ++k)
      key += (k ? " " : "") + std::to_string(labels[k]);
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", s.amp[c].real(), s.amp[c].imag());
    os << key << buf;
  }
}

double oracle_log_norm(const GaugeTensor& tensor, const TorusSpec& torus) {
  torus.validate();
  double sum = 0.0;
  ConfigEnumerator en(tensor, torus);
  en.run([&](const std::vector<int>&, cplx amp) { sum += std::norm(amp); });
  if (sum <= 0.0) throw std::runtime_error("tensor generates a zero-norm state");
  return std::log(sum);
}

cplx oracle_wilson(const GaugeTensor& tensor, const TorusSpec& torus, const LoopSpec& loop,
                   int origin_x, int origin_y) {
  torus.validate();
  const auto shifts = loop_shifts(tensor.group(), torus, loop, origin_x, origin_y);
  cplx num(0.0);
  double den = 0.0;
  ConfigEnumerator en(tensor, torus);
  en.run([&](const std::vector<int>& labels, cplx amp) {
    den += std::norm(amp);
    std::vector<int> shifted = labels;
    if (!apply_shifts(tensor.group(), shifts, shifted)) return;
    num += std::conj(amp) * evaluate_amplitude(tensor, torus, shifted);
  });
  if (den == 0.0) throw std::runtime_error("tensor generates a zero-norm state");
  return num / den;
}

}  // namespace gpeps

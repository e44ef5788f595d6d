#include "gpeps/gauge_tensor.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace gpeps {

namespace {

std::string tuple_str(const VirtualIndex& v) {
  std::ostringstream os;
  os << "(r=" << v.right << ", u=" << v.up << ", l=" << v.left << ", d=" << v.down << ")";
  return os.str();
}

}  // namespace

void GaugeTensor::set(const VirtualIndex& v, cplx value) {
  group_.require_label(v.right);
  group_.require_label(v.up);
  group_.require_label(v.left);
  group_.require_label(v.down);
  if (!satisfies_selection_rule(v))
    throw std::invalid_argument("selection-rule violation at " + tuple_str(v));
  if (value == cplx(0.0))
    elems_.erase(v);
  else
    elems_[v] = value;
}

void GaugeTensor::set_raw(const VirtualIndex& v, cplx value) {
  group_.require_label(v.right);
  group_.require_label(v.up);
  group_.require_label(v.left);
  group_.require_label(v.down);
  if (value == cplx(0.0))
    elems_.erase(v);
  else
    elems_[v] = value;
}

GaugeTensor GaugeTensor::scaled(cplx factor) const {
  GaugeTensor out(group_);
  for (const auto& [idx, val] : elems_) out.set_raw(idx, factor * val);
  return out;
}

GaugeTensor build_z2_tensor(const Z2Params& p) {
  if (p.flux_free == cplx(0.0) && p.corner == cplx(0.0) && p.straight == cplx(0.0) &&
      p.crossing == cplx(0.0))
    throw std::invalid_argument("all Z2 amplitudes vanish");
  const auto g = GroupSpec::cyclic(2);
  GaugeTensor t(g);
  // (right, up, left, down); label 1 marks a flux line on the leg.
  t.set({0, 0, 0, 0}, p.flux_free);
  t.set({0, 0, 1, 1}, p.corner);  // line entering left, leaving down
  t.set({1, 0, 0, 1}, p.corner);  // down - right
  t.set({1, 1, 0, 0}, p.corner);  // right - up
  t.set({0, 1, 1, 0}, p.corner);  // up - left
  t.set({0, 1, 0, 1}, p.straight);  // vertical line
  t.set({1, 0, 1, 0}, p.straight);  // horizontal line
  t.set({1, 1, 1, 1}, p.crossing);
  return t;
}

GaugeTensor build_zn_tensor(const GroupSpec& g, const std::map<VirtualIndex, cplx>& coeffs) {
  GaugeTensor t(g);
  for (const auto& [idx, val] : coeffs) t.set(idx, val);
  return t;
}

SymmetryReport check_gauge_symmetry(const GaugeTensor& t) {
  const GroupSpec& g = t.group();

  // Transformation angles: all group elements for Z_N; for the truncated
  // U(1) a fixed sample of angles, enough to expose any integer charge
  // mismatch (e^{i k phi} = 1 has no nonzero integer solution at phi = 1).
  std::vector<double> angles;
  if (g.is_cyclic()) {
    for (int e = 0; e < g.order(); ++e) angles.push_back(2.0 * M_PI * e / g.order());
  } else {
    angles = {1.0, 0.5, 2.0 * M_PI / 7.0};
  }

  SymmetryReport report;
  for (const auto& [idx, val] : t.elements()) {
    for (double phi : angles) {
      // Outgoing legs rotate with +phi per unit charge, ingoing with -phi;
      // an invariant element keeps its value under the combined action.
      const double charge_out = idx.right + idx.up;
      const double charge_in = idx.left + idx.down;
      const cplx transformed = val * std::exp(cplx(0.0, (charge_out - charge_in) * phi));
      if (std::abs(transformed - val) > 1e-12 * std::max(1.0, std::abs(val))) {
        report.ok = false;
        std::ostringstream what;
        what << "element " << tuple_str(idx) << " picks up phase "
             << (charge_out - charge_in) << " * phi under a gauge rotation";
        report.violations.push_back({idx, what.str()});
        break;
      }
    }
  }
  return report;
}

void write_tensor(std::ostream& os, const GaugeTensor& t) {
  const GroupSpec& g = t.group();
  os << "# gauge site tensor, one element per line: j_r j_u j_l j_d re im\n";
  if (g.is_cyclic())
    os << "group Z" << g.order() << "\n";
  else
    os << "group U1 " << g.cutoff() << "\n";
  char buf[128];
  for (const auto& [idx, val] : t.elements()) {
    std::snprintf(buf, sizeof(buf), "%d %d %d %d %.17g %.17g\n", idx.right, idx.up, idx.left,
                  idx.down, val.real(), val.imag());
    os << buf;
  }
}

GaugeTensor read_tensor(std::istream& is) {
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error("tensor file line " + std::to_string(lineno) + ": " + msg);
  };

  // Header first: "group Z<N>" or "group U1 <cutoff>".
  GroupSpec group = GroupSpec::cyclic(2);
  bool have_group = false;
  std::vector<std::array<double, 6>> rows;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "group") {
      std::string name;
      if (!(ls >> name)) fail("missing group name");
      if (name.size() > 1 && name[0] == 'Z') {
        group = GroupSpec::cyclic(std::stoi(name.substr(1)));
      } else if (name == "U1") {
        int cutoff = 0;
        if (!(ls >> cutoff)) fail("missing U1 cutoff");
        group = GroupSpec::truncated_u1(cutoff);
      } else {
        fail("unknown group '" + name + "'");
      }
      have_group = true;
      continue;
    }
    if (!have_group) fail("element before group header");
    std::array<double, 6> row{};
    std::istringstream es(line);
    for (double& x : row)
      if (!(es >> x)) fail("expected 'j_r j_u j_l j_d re im'");
    rows.push_back(row);
  }
  if (!have_group) throw std::runtime_error("tensor file: missing group header");

  GaugeTensor t(group);
  for (const auto& r : rows) {
    VirtualIndex idx{static_cast<int>(r[0]), static_cast<int>(r[1]), static_cast<int>(r[2]),
                     static_cast<int>(r[3])};
    t.set_raw(idx, cplx(r[4], r[5]));
  }
  return t;
}

}  // namespace gpeps

#pragma once

#include <stdexcept>

namespace gpeps {

/// Periodic square lattice, n1 columns by n2 rows.
struct TorusSpec {
  int n1 = 2;
  int n2 = 2;

  void validate() const {
    if (n1 < 2 || n2 < 2) throw std::invalid_argument("torus needs n1, n2 >= 2");
  }
  int sites() const { return n1 * n2; }
  int links() const { return 2 * n1 * n2; }
};

/// Rectangular Wilson loop: side lengths in links and the inserted flux
/// irrep. The lower-left corner sits at the lattice origin unless stated
/// otherwise.
struct LoopSpec {
  int r1 = 1;
  int r2 = 1;
  int flux = 1;

  void validate(const TorusSpec& t) const {
    if (r1 < 1 || r1 >= t.n1 || r2 < 1 || r2 >= t.n2)
      throw std::invalid_argument("loop does not fit the torus");
  }
};

}  // namespace gpeps

#pragma once

#include <vector>

#include "les/grid.hpp"

namespace les::detail {

// Periodic neighbour tables so that inner loops avoid modulo arithmetic.
struct Neighbours {
  std::vector<int> xm, xp, ym, yp;
  explicit Neighbours(const Grid& g) : xm(g.nx), xp(g.nx), ym(g.ny), yp(g.ny) {
    for (int i = 0; i < g.nx; ++i) {
      xm[i] = (i + g.nx - 1) % g.nx;
      xp[i] = (i + 1) % g.nx;
    }
    for (int j = 0; j < g.ny; ++j) {
      ym[j] = (j + g.ny - 1) % g.ny;
      yp[j] = (j + 1) % g.ny;
    }
  }
};

}  // namespace les::detail

#ifndef CROSSDIFF_GRID_HPP
#define CROSSDIFF_GRID_HPP

#include "crossdiff/common.hpp"
#include "crossdiff/entropy.hpp"
#include "crossdiff/mobility.hpp"
#include "crossdiff/model.hpp"

#include <vector>

namespace crossdiff {

/// Cell-centred fields on a uniform 1D grid. Rows of u and w are cells,
/// columns are species.
struct GridState {
  std::vector<double> x;
  double dx = 0.0;
  Matrix u;
  Matrix w;
  double t = 0.0;
  int k = 0;

  int cells() const { return static_cast<int>(u.rows()); }
  int species() const { return static_cast<int>(u.cols()); }

  /// State with u given and w left empty.
  static GridState from_density(const DomainConfig& dom, Matrix u) {
    GridState g;
    g.x = dom.centers();
    g.dx = dom.dx();
    g.u = std::move(u);
    return g;
  }
};

/// Midpoint quadrature of h_eps(u) over the grid.
inline double entropy_total(const EntropyParams& p, const GridState& g) {
  double H = 0.0;
  for (int k = 0; k < g.cells(); ++k) H += g.dx * entropy_density(p, g.u.row(k).transpose());
  return H;
}

/// Per-species integrals of u.
inline Vector mass(const GridState& g) { return g.dx * g.u.colwise().sum().transpose(); }

/// Signed entropy production dH/dt = -int du/dx . H(u)A(u) du/dx at the
/// given state, reaction-free. Gradients are two-point differences on the
/// faces and the matrices are evaluated at the arithmetic face state, so
/// kinks of piecewise-linear data placed on faces are integrated exactly.
inline double entropy_production(const CoefficientSystem& sys, const Vector& pi, const GridState& g) {
  detail::require_positive(Eigen::Map<const Vector>(g.u.data(), g.u.size()), "entropy_production");
  double integral = 0.0;
  for (int k = 0; k + 1 < g.cells(); ++k) {
    const Vector du = (g.u.row(k + 1) - g.u.row(k)).transpose() / g.dx;
    if (du.isZero(0.0)) continue;
    const Vector mid = 0.5 * (g.u.row(k + 1) + g.u.row(k)).transpose();
    integral += g.dx * du.dot(mobility_product(sys, pi, mid) * du);
  }
  return -integral;
}

}  // namespace crossdiff

#endif  // CROSSDIFF_GRID_HPP

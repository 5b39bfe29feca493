#ifndef CROSSDIFF_MODEL_HPP
#define CROSSDIFF_MODEL_HPP

#include "crossdiff/common.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace crossdiff {

/// Coefficients of an n-species cross-diffusion system with transition rates
/// p_i(u) = a_i0 + sum_k a_ik u_k^s and Lotka-Volterra competition terms
/// f_i(u) = u_i (b_i0 - sum_j b_ij u_j^sigma).
struct CoefficientSystem {
  int n = 1;
  double s = 1.0;
  Vector a0;  ///< a_i0
  Matrix a;   ///< a_ij, self-diffusion on the diagonal
  Vector b0;  ///< b_i0
  Matrix b;   ///< b_ij
  double sigma = 1.0;

  /// All-zero coefficients for n species.
  static CoefficientSystem zeros(int n, double s = 1.0) {
    CoefficientSystem sys;
    sys.n = n;
    sys.s = s;
    sys.a0 = Vector::Zero(n);
    sys.a = Matrix::Zero(n, n);
    sys.b0 = Vector::Zero(n);
    sys.b = Matrix::Zero(n, n);
    return sys;
  }

  bool has_reaction() const {
    return (b0.size() > 0 && b0.cwiseAbs().maxCoeff() > 0.0) ||
           (b.size() > 0 && b.cwiseAbs().maxCoeff() > 0.0);
  }
};

/// Uniform 1D grid on (0, length), time horizon and regularization.
struct DomainConfig {
  double length = 1.0;
  int cells = 64;
  double T = 0.1;
  double tau = 1e-3;
  double eps = 1e-3;   ///< regularization epsilon; zero only for s = 1
  double eta = 0.25;   ///< exponent of the eps^eta diagonal term

  double dx() const { return length / cells; }

  std::vector<double> centers() const {
    std::vector<double> x(static_cast<std::size_t>(cells));
    for (int k = 0; k < cells; ++k) x[static_cast<std::size_t>(k)] = (k + 0.5) * dx();
    return x;
  }
};

/// Piecewise-linear profile through (x, value) breakpoints, constant outside.
struct PiecewiseLinear {
  std::vector<double> x;
  std::vector<double> v;

  double operator()(double at) const {
    if (x.empty()) return 0.0;
    if (at <= x.front()) return v.front();
    if (at >= x.back()) return v.back();
    const auto it = std::upper_bound(x.begin(), x.end(), at);
    const auto hi = static_cast<std::size_t>(it - x.begin());
    const std::size_t lo = hi - 1;
    const double t = (at - x[lo]) / (x[hi] - x[lo]);
    return v[lo] + t * (v[hi] - v[lo]);
  }
};

/// mean + amplitude * cos(mode * pi * x / L); satisfies the no-flux condition.
struct CosineProfile {
  double mean = 1.0;
  double amplitude = 0.0;
  int mode = 1;
};

/// Cell values given directly; the count must match the grid.
struct SampledProfile {
  std::vector<double> values;
};

using Profile = std::variant<double, PiecewiseLinear, CosineProfile, SampledProfile>;

/// Q_eps: clamps z into [eps, eps^{-1/2}].
inline double cutoff(double z, double eps) {
  const double upper = 1.0 / std::sqrt(eps);
  if (z < eps) return eps;
  if (z >= upper) return upper;
  return z;
}

/// Initial densities, one profile per species, with an optional clamp applied
/// after evaluation (set by cutoff_initial_data).
struct InitialData {
  std::vector<Profile> species;
  std::optional<double> clamp_eps;

  int n() const { return static_cast<int>(species.size()); }

  static InitialData constant(const std::vector<double>& values) {
    InitialData d;
    for (double v : values) d.species.emplace_back(v);
    return d;
  }

  double evaluate(int i, double x, double length, std::size_t cell) const {
    const Profile& p = species.at(static_cast<std::size_t>(i));
    double value = std::visit(
        [&](const auto& prof) -> double {
          using T = std::decay_t<decltype(prof)>;
          if constexpr (std::is_same_v<T, double>) {
            return prof;
          } else if constexpr (std::is_same_v<T, PiecewiseLinear>) {
            return prof(x);
          } else if constexpr (std::is_same_v<T, CosineProfile>) {
            return prof.mean + prof.amplitude * std::cos(prof.mode * std::numbers::pi * x / length);
          } else {
            return prof.values.at(cell);
          }
        },
        p);
    if (clamp_eps) value = cutoff(value, *clamp_eps);
    return value;
  }

  /// Cell-centre samples, rows = cells, columns = species. Throws on negative
  /// densities or a sampled profile whose length does not match the grid.
  Matrix sample(const DomainConfig& dom) const {
    const auto x = dom.centers();
    Matrix u(dom.cells, n());
    for (int i = 0; i < n(); ++i) {
      if (const auto* sp = std::get_if<SampledProfile>(&species[static_cast<std::size_t>(i)])) {
        if (static_cast<int>(sp->values.size()) != dom.cells)
          throw Error("sampled initial profile for species " + std::to_string(i + 1) + " has " +
                      std::to_string(sp->values.size()) + " values, grid has " +
                      std::to_string(dom.cells) + " cells");
      }
      for (int k = 0; k < dom.cells; ++k) {
        const double v = evaluate(i, x[static_cast<std::size_t>(k)], dom.length, static_cast<std::size_t>(k));
        if (!(v >= 0.0) || !std::isfinite(v))
          throw Error("initial density of species " + std::to_string(i + 1) + " is negative or not finite at x=" +
                      std::to_string(x[static_cast<std::size_t>(k)]));
        u(k, i) = v;
      }
    }
    return u;
  }
};

/// Applies Q_eps componentwise. Idempotent: a second application with the
/// same eps changes nothing.
inline InitialData cutoff_initial_data(InitialData u0, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error("cutoff requires 0 < eps < 1");
  if (u0.clamp_eps && *u0.clamp_eps != eps)
    throw Error("initial data already clamped with a different eps");
  u0.clamp_eps = eps;
  return u0;
}

/// Lotka-Volterra reaction f_i(u) = u_i (b_i0 - sum_j b_ij u_j^sigma).
inline Vector reaction(const CoefficientSystem& sys, const Eigen::Ref<const Vector>& u) {
  Vector f(sys.n);
  for (int i = 0; i < sys.n; ++i) {
    if (u[i] < 0.0) throw Error("reaction: negative density for species " + std::to_string(i + 1));
  }
  for (int i = 0; i < sys.n; ++i) {
    double rate = sys.b0[i];
    for (int j = 0; j < sys.n; ++j) {
      if (sys.b(i, j) != 0.0) rate -= sys.b(i, j) * std::pow(u[j], sys.sigma);
    }
    f[i] = u[i] * rate;
  }
  return f;
}

}  // namespace crossdiff

#endif  // CROSSDIFF_MODEL_HPP

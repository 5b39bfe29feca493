#ifndef CROSSDIFF_SYMMETRY_HPP
#define CROSSDIFF_SYMMETRY_HPP

#include "crossdiff/common.hpp"
#include "crossdiff/mobility.hpp"
#include "crossdiff/model.hpp"

#include <cmath>
#include <optional>
#include <utility>

namespace crossdiff {

struct SymmetryReport {
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double max_asymmetry = 0.0;  ///< max over samples and i != j of |M_ij - M_ji| / (1 + |M_ij| + |M_ji|)
  std::optional<Vector> witness_u;
  std::optional<std::pair<int, int>> witness_pair;

  bool passed() const { return max_asymmetry < kSymmetryTolerance; }

  static constexpr double kSymmetryTolerance = 1e-10;
};

/// Samples u log-uniformly in [1e-3, 1e3]^n and measures how far H(u)A(u)
/// with weights pi is from symmetric. Symmetric at every u exactly when pi
/// satisfies detailed balance.
inline SymmetryReport symmetry_check(const CoefficientSystem& sys, const Vector& pi, std::size_t samples,
                                     std::uint64_t seed = 1) {
  if (samples == 0) throw Error("symmetry_check: sample count must be positive");
  if (pi.size() != sys.n) throw Error("symmetry_check: weight vector has the wrong length");
  if ((pi.array() <= 0.0).any()) throw Error("symmetry_check: weights must be positive");

  SymmetryReport rep;
  rep.samples = samples;
  rep.seed = seed;
  Random rng(seed);
  Vector u(sys.n);
  for (std::size_t k = 0; k < samples; ++k) {
    for (int i = 0; i < sys.n; ++i) u[i] = rng.log_uniform(1e-3, 1e3);
    const Matrix M = mobility_product(sys, pi, u);
    for (int i = 0; i < sys.n; ++i)
      for (int j = i + 1; j < sys.n; ++j) {
        const double d = std::abs(M(i, j) - M(j, i)) / (1.0 + std::abs(M(i, j)) + std::abs(M(j, i)));
        if (d > rep.max_asymmetry) {
          rep.max_asymmetry = d;
          if (d >= SymmetryReport::kSymmetryTolerance && !rep.witness_u) {
            rep.witness_u = u;
            rep.witness_pair = std::make_pair(i, j);
          }
        }
      }
  }
  return rep;
}

}  // namespace crossdiff

#endif  // CROSSDIFF_SYMMETRY_HPP

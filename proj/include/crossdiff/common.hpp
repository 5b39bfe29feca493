#ifndef CROSSDIFF_COMMON_HPP
#define CROSSDIFF_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace crossdiff {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numeric routine did not converge within its iteration budget.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, int component, double residual)
      : Error(what), component_(component), residual_(residual) {}

  int component() const noexcept { return component_; }
  double residual() const noexcept { return residual_; }

private:
  int component_;
  double residual_;
};

/// Exponents this close to one are treated as exactly linear.
inline constexpr double kLinearExponentBand = 1e-8;

inline bool is_linear_exponent(double s) {
  return std::abs(s - 1.0) < kLinearExponentBand;
}

/// Deterministic random source with platform-independent transforms.
///
/// The standard distributions are implementation-defined, so uniform and
/// normal variates are derived from raw 64-bit output here. Two hosts given
/// the same seed produce identical streams.
class Random {
public:
  explicit Random(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// exp(uniform(log lo, log hi)).
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform direction on the unit sphere in R^n.
  Vector unit_vector(Eigen::Index n) {
    Vector z(n);
    double norm = 0.0;
    do {
      for (Eigen::Index i = 0; i < n; ++i) z[i] = normal();
      norm = z.norm();
    } while (norm == 0.0);
    return z / norm;
  }

  /// Seed for an independent sub-stream, e.g. one per block of samples.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t index) {
    Random r(master ^ (0xD1B54A32D192ED03ull * (index + 1)));
    return r.next_u64();
  }

private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace crossdiff

#endif  // CROSSDIFF_COMMON_HPP

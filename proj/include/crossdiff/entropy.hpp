#ifndef CROSSDIFF_ENTROPY_HPP
#define CROSSDIFF_ENTROPY_HPP

#include "crossdiff/common.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace crossdiff {

/// Parameters of the entropy density
///   h_eps(u) = sum_i pi_i h_s(u_i) + eps sum_i (u_i (log u_i - 1) + 1).
struct EntropyParams {
  double s = 1.0;
  Vector pi;
  double eps = 0.0;

  int n() const { return static_cast<int>(pi.size()); }
};

namespace detail {

inline void require_positive(const Eigen::Ref<const Vector>& u, const char* where) {
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (!(u[i] > 0.0)) throw Error(std::string(where) + ": component " + std::to_string(i + 1) + " is not positive");
}

// z (log z - 1) + 1 with 0 log 0 = 0.
inline double boltzmann(double z) { return z > 0.0 ? z * (std::log(z) - 1.0) + 1.0 : 1.0; }

}  // namespace detail

/// Scalar density h_s: z(log z - 1) + 1 for s = 1, (z^s - s z)/(s - 1) + 1 otherwise.
inline double entropy_scalar(double s, double z) {
  if (z < 0.0) throw Error("entropy density: negative argument");
  if (is_linear_exponent(s)) return detail::boltzmann(z);
  return (std::pow(z, s) - s * z) / (s - 1.0) + 1.0;
}

inline double entropy_density(const EntropyParams& p, const Eigen::Ref<const Vector>& u) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u[i] < 0.0) throw Error("entropy density: component " + std::to_string(i + 1) + " is negative");
    h += p.pi[i] * entropy_scalar(p.s, u[i]);
    if (p.eps != 0.0) h += p.eps * detail::boltzmann(u[i]);
  }
  return h;
}

/// Scalar derivative of the i-th species density, pi h_s'(z) + eps log z.
inline double entropy_variable_scalar(double s, double pi, double eps, double z) {
  const double log_z = std::log(z);
  if (is_linear_exponent(s)) return (pi + eps) * log_z;
  return s * pi / (s - 1.0) * std::expm1((s - 1.0) * log_z) + eps * log_z;
}

/// w = h_eps'(u).
inline Vector entropy_variable(const EntropyParams& p, const Eigen::Ref<const Vector>& u) {
  detail::require_positive(u, "entropy_variable");
  Vector w(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) w[i] = entropy_variable_scalar(p.s, p.pi[i], p.eps, u[i]);
  return w;
}

/// Diagonal of H_eps(u) = h_eps''(u): s pi_i u_i^{s-2} + eps / u_i.
inline Vector hessian(const EntropyParams& p, const Eigen::Ref<const Vector>& u) {
  detail::require_positive(u, "hessian");
  Vector d(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) d[i] = p.s * p.pi[i] * std::pow(u[i], p.s - 2.0) + p.eps / u[i];
  return d;
}

/// Solves pi h_s'(u) + eps log u = w for u > 0.
///
/// Works in y = log u where the map is smooth and strictly increasing with
/// derivative s pi e^{(s-1) y} + eps. Newton steps leaving the current
/// bracket are replaced by bisection. The bracket starts at w/eps +- K with
/// K = 1 and doubles until it encloses the root.
inline double inverse_transform_scalar(double s, double pi, double eps, double w, int component = 0) {
  if (is_linear_exponent(s)) {
    const double u = std::exp(w / (pi + eps));
    if (!(u > 0.0) || !std::isfinite(u))
      throw ConvergenceError("inverse_transform: exp(w/(pi+eps)) out of range", component, w);
    return u;
  }
  if (!(eps > 0.0)) throw Error("inverse_transform: eps > 0 is required when s != 1");

  constexpr int kMaxIterations = 100;
  const double tol = 1e-12 * std::max(1.0, std::abs(w));
  const double c = s * pi / (s - 1.0);
  auto phi = [&](double y) { return c * std::expm1((s - 1.0) * y) + eps * y - w; };
  auto dphi = [&](double y) { return s * pi * std::exp((s - 1.0) * y) + eps; };

  const double centre = w / eps;
  double K = 1.0;
  double lo = centre - K, hi = centre + K;
  for (int grow = 0; !(phi(lo) <= 0.0 && phi(hi) >= 0.0); ++grow) {
    if (grow > 2100) throw ConvergenceError("inverse_transform: no bracket found", component, w);
    K *= 2.0;
    lo = centre - K;
    hi = centre + K;
  }

  // Initial guess from the dominant term where it is defined, kept inside the bracket.
  double y = 0.0;
  const double arg = 1.0 + w / c;
  if (arg > 0.0) y = std::log(arg) / (s - 1.0);
  if (!(y > lo && y < hi)) y = 0.5 * (lo + hi);

  auto finish = [&](double y_root) {
    const double u = std::exp(y_root);
    if (!(u > 0.0) || !std::isfinite(u))
      throw ConvergenceError("inverse_transform: density for component " + std::to_string(component + 1) +
                                 " is not representable (log u = " + std::to_string(y_root) + ")",
                             component, w);
    return u;
  };

  // A small residual alone is not enough where dphi is small: also require
  // the Newton correction in log u to be negligible.
  auto converged = [&](double y_now, double r_now) {
    return std::abs(r_now) <= tol && std::abs(r_now / dphi(y_now)) <= 1e-13 * std::max(1.0, std::abs(y_now));
  };

  double r = phi(y);
  for (int it = 0; it < kMaxIterations; ++it) {
    if (converged(y, r)) return finish(y);
    if (r > 0.0) hi = y;
    else lo = y;
    double next = y - r / dphi(y);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == y || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(y))) {
      y = next;
      r = phi(y);
      if (std::abs(r) <= tol) return finish(y);
      break;
    }
    y = next;
    r = phi(y);
  }
  if (std::abs(r) <= tol) return finish(y);
  throw ConvergenceError("inverse_transform: no convergence for component " + std::to_string(component + 1), component,
                         std::abs(r));
}

/// u = (h_eps')^{-1}(w), strictly positive.
inline Vector inverse_transform(const EntropyParams& p, const Eigen::Ref<const Vector>& w) {
  Vector u(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    u[i] = inverse_transform_scalar(p.s, p.pi[i], p.eps, w[i], static_cast<int>(i));
  return u;
}

}  // namespace crossdiff

#endif  // CROSSDIFF_ENTROPY_HPP

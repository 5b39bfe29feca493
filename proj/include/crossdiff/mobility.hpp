#ifndef CROSSDIFF_MOBILITY_HPP
#define CROSSDIFF_MOBILITY_HPP

#include "crossdiff/balance.hpp"
#include "crossdiff/common.hpp"
#include "crossdiff/entropy.hpp"
#include "crossdiff/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace crossdiff {

/// A_ij(u) = delta_ij p_i(u) + u_i dp_i/du_j(u) with p_i = a_i0 + sum_k a_ik u_k^s.
inline Matrix diffusion_matrix(const CoefficientSystem& sys, const Eigen::Ref<const Vector>& u) {
  const int n = sys.n;
  const double s = sys.s;
  Matrix A = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (u[i] < 0.0) throw Error("diffusion_matrix: negative density");
    double p = sys.a0[i];
    for (int k = 0; k < n; ++k)
      if (sys.a(i, k) != 0.0) p += sys.a(i, k) * std::pow(u[k], s);
    A(i, i) = p;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (sys.a(i, j) == 0.0 || u[i] == 0.0) continue;
      if (u[j] == 0.0 && s < 1.0)
        throw Error("diffusion_matrix: u_j^(s-1) is singular at a zero density with s < 1");
      A(i, j) += s * sys.a(i, j) * u[i] * std::pow(u[j], s - 1.0);
    }
  return A;
}

/// mu_i = (pi_i / 2) sum_{j != i} (a_ji / pi_i + a_ij / pi_j).
inline Vector approximation_weights(const CoefficientSystem& sys, const Vector& pi) {
  Vector mu = Vector::Zero(sys.n);
  for (int i = 0; i < sys.n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < sys.n; ++j)
      if (j != i) sum += sys.a(j, i) / pi[i] + sys.a(i, j) / pi[j];
    mu[i] = 0.5 * pi[i] * sum;
  }
  return mu;
}

/// A_eps(u) = A(u) + eps A0(u) + eps^eta diag(u), where A0 has diagonal
/// u_i mu_i / pi_i and off-diagonal -u_i a_ji / pi_i.
inline Matrix approx_matrix(const CoefficientSystem& sys, const EntropyParams& p, double eta,
                            const Eigen::Ref<const Vector>& u) {
  if (p.eps < 0.0) throw Error("approx_matrix: eps must be nonnegative");
  if (p.eps > 0.0 && !(eta > 0.0 && eta < 0.5)) throw Error("approx_matrix: eta must lie in (0, 1/2)");
  detail::require_positive(u, "approx_matrix");
  Matrix A = diffusion_matrix(sys, u);
  if (p.eps == 0.0) return A;
  const Vector mu = approximation_weights(sys, p.pi);
  const double eps_eta = std::pow(p.eps, eta);
  for (int i = 0; i < sys.n; ++i) {
    for (int j = 0; j < sys.n; ++j) {
      if (i == j) A(i, i) += p.eps * u[i] * mu[i] / p.pi[i] + eps_eta * u[i];
      else A(i, j) -= p.eps * u[i] * sys.a(j, i) / p.pi[i];
    }
  }
  return A;
}

/// H(u) A(u) with H = diag(s pi_i u_i^{s-2}).
inline Matrix mobility_product(const CoefficientSystem& sys, const Vector& pi, const Eigen::Ref<const Vector>& u) {
  EntropyParams p{sys.s, pi, 0.0};
  return hessian(p, u).asDiagonal() * diffusion_matrix(sys, u);
}

/// H_eps(u) A_eps(u).
inline Matrix approx_mobility_product(const CoefficientSystem& sys, const EntropyParams& p, double eta,
                                      const Eigen::Ref<const Vector>& u) {
  return hessian(p, u).asDiagonal() * approx_matrix(sys, p, eta, u);
}

/// Onsager matrix B_eps = A_eps(u) H_eps(u)^{-1}.
inline Matrix onsager_matrix(const CoefficientSystem& sys, const EntropyParams& p, double eta,
                             const Eigen::Ref<const Vector>& u) {
  const Vector h = hessian(p, u);
  return approx_matrix(sys, p, eta, u) * h.cwiseInverse().asDiagonal();
}

// ---------------------------------------------------------------------------
// Structural constants

enum class Regime {
  detailed_balance_self_diffusion,  ///< s <= 1, detailed balance, all a_ii > 0
  weak_cross_sublinear,             ///< s <= 1, eta0 > 0
  detailed_balance_superlinear,     ///< s > 1, detailed balance, eta1 > 0
  weak_cross_superlinear,           ///< s > 1, eta2 > 0
  small_exponent,                   ///< s <= s0
};

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::detailed_balance_self_diffusion: return "detailed-balance";
    case Regime::weak_cross_sublinear: return "eta0";
    case Regime::detailed_balance_superlinear: return "detailed-balance-eta1";
    case Regime::weak_cross_superlinear: return "eta2";
    case Regime::small_exponent: return "s0";
  }
  return "?";
}

struct MobilityBounds {
  double eta0 = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  std::optional<double> s0;  ///< only when a_ij + a_ji > 0 for all i != j
  bool detailed_balance = false;
  std::vector<Regime> applicable;

  bool holds(Regime r) const { return std::find(applicable.begin(), applicable.end(), r) != applicable.end(); }
};

/// Common factor c when pi = c (1, ..., 1), empty otherwise.
inline std::optional<double> uniform_weight(const Vector& pi) {
  const double c = pi[0];
  for (Eigen::Index i = 1; i < pi.size(); ++i)
    if (std::abs(pi[i] - c) > 1e-12 * c) return std::nullopt;
  return c;
}

inline MobilityBounds structural_constants(const CoefficientSystem& sys, const Vector& pi) {
  const int n = sys.n;
  const double s = sys.s;
  const Matrix& a = sys.a;
  MobilityBounds mb;
  mb.eta0 = mb.eta1 = mb.eta2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double sum0 = 0.0, sum1 = 0.0, sum2 = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d = std::sqrt(a(i, j)) - std::sqrt(a(j, i));
      sum0 += d * d;  // j = i contributes zero
      if (j == i) continue;
      sum1 += a(i, j);
      sum2 += s * (a(i, j) + a(j, i)) - 2.0 * std::sqrt(a(i, j) * a(j, i));
    }
    mb.eta0 = std::min(mb.eta0, a(i, i) - s / (2.0 * (s + 1.0)) * sum0);
    mb.eta1 = std::min(mb.eta1, a(i, i) - (s - 1.0) / (s + 1.0) * sum1);
    mb.eta2 = std::min(mb.eta2, a(i, i) - sum2 / (2.0 * (s + 1.0)));
  }

  bool pairs_positive = true;
  double s0 = 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double sum = a(i, j) + a(j, i);
      if (!(sum > 0.0)) {
        pairs_positive = false;
        continue;
      }
      s0 = std::min(s0, 2.0 * std::sqrt(a(i, j) * a(j, i)) / sum);
    }
  if (pairs_positive) mb.s0 = s0;

  mb.detailed_balance = satisfies_detailed_balance(a, pi);
  const bool self_diffusion = (a.diagonal().array() > 0.0).all();
  const bool sublinear = s <= 1.0;
  if (sublinear && mb.detailed_balance && self_diffusion) mb.applicable.push_back(Regime::detailed_balance_self_diffusion);
  if (sublinear && mb.eta0 > 0.0) mb.applicable.push_back(Regime::weak_cross_sublinear);
  if (!sublinear && mb.detailed_balance && mb.eta1 > 0.0) mb.applicable.push_back(Regime::detailed_balance_superlinear);
  if (!sublinear && mb.eta2 > 0.0) mb.applicable.push_back(Regime::weak_cross_superlinear);
  if (mb.s0 && s <= *mb.s0) mb.applicable.push_back(Regime::small_exponent);
  return mb;
}

// ---------------------------------------------------------------------------
// Quadratic-form lower bounds

enum class LowerBound {
  general,                 ///< any s > 0, any pi
  db_sublinear,            ///< 0 < s <= 1, detailed balance
  weak_cross_sublinear,    ///< 0 < s <= 1, eta0 > 0, pi = 1
  small_exponent,          ///< 0 < s <= s0, pi = 1
  db_superlinear,          ///< s > 1, detailed balance, eta1 > 0
  weak_cross_superlinear,  ///< s > 1, eta2 > 0, pi = 1
  regularized,             ///< z'H_eps A_eps z against z'HAz plus the eps terms
};

inline constexpr std::array<LowerBound, 7> kAllLowerBounds{
    LowerBound::general,        LowerBound::db_sublinear,           LowerBound::weak_cross_sublinear,
    LowerBound::small_exponent, LowerBound::db_superlinear,         LowerBound::weak_cross_superlinear,
    LowerBound::regularized};

inline std::string_view to_string(LowerBound b) {
  switch (b) {
    case LowerBound::general: return "general";
    case LowerBound::db_sublinear: return "db-sublinear";
    case LowerBound::weak_cross_sublinear: return "weak-cross-sublinear";
    case LowerBound::small_exponent: return "small-exponent";
    case LowerBound::db_superlinear: return "db-superlinear";
    case LowerBound::weak_cross_superlinear: return "weak-cross-superlinear";
    case LowerBound::regularized: return "regularized";
  }
  return "?";
}

inline std::optional<LowerBound> parse_lower_bound(std::string_view name) {
  for (auto b : kAllLowerBounds)
    if (to_string(b) == name) return b;
  return std::nullopt;
}

/// Reason the hypotheses of `bound` fail for (sys, pi), or empty when they hold.
inline std::optional<std::string> lower_bound_hypotheses(LowerBound bound, const CoefficientSystem& sys,
                                                         const Vector& pi) {
  const double s = sys.s;
  if (!(s > 0.0)) return "s > 0 violated";
  if ((pi.array() <= 0.0).any()) return "weights must be positive";
  const MobilityBounds mb = structural_constants(sys, pi);
  switch (bound) {
    case LowerBound::general:
    case LowerBound::regularized:
      return std::nullopt;
    case LowerBound::db_sublinear:
      if (s > 1.0) return "requires s <= 1";
      if (!mb.detailed_balance) return "weights do not satisfy detailed balance";
      return std::nullopt;
    case LowerBound::weak_cross_sublinear:
      if (s > 1.0) return "requires s <= 1";
      if (!(mb.eta0 > 0.0)) return "eta0 = " + std::to_string(mb.eta0) + " is not positive";
      return std::nullopt;
    case LowerBound::small_exponent:
      if (!mb.s0) return "requires a_ij + a_ji > 0 for all i != j";
      if (s > *mb.s0) return "s exceeds s0 = " + std::to_string(*mb.s0);
      return std::nullopt;
    case LowerBound::db_superlinear:
      if (!(s > 1.0)) return "requires s > 1";
      if (!mb.detailed_balance) return "weights do not satisfy detailed balance";
      if (!(mb.eta1 > 0.0)) return "eta1 = " + std::to_string(mb.eta1) + " is not positive";
      return std::nullopt;
    case LowerBound::weak_cross_superlinear:
      if (!(s > 1.0)) return "requires s > 1";
      if (!(mb.eta2 > 0.0)) return "eta2 = " + std::to_string(mb.eta2) + " is not positive";
      return std::nullopt;
  }
  return "unknown bound";
}

struct QuadraticFormSample {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack() const { return lhs - rhs; }
};

/// Evaluates z'Mz and the explicit right-hand side of `bound` at (u, z).
/// Bounds stated for unit weights use pi = 1 regardless of the argument.
/// `eps` and `eta` matter only for the regularized bound.
inline QuadraticFormSample evaluate_lower_bound(LowerBound bound, const CoefficientSystem& sys, const Vector& pi,
                                                const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& z,
                                                double eps = 0.0, double eta = 0.25) {
  const int n = sys.n;
  const double s = sys.s;
  const Matrix& a = sys.a;
  const bool unit_weights = bound == LowerBound::weak_cross_sublinear || bound == LowerBound::small_exponent ||
                            bound == LowerBound::weak_cross_superlinear;
  const Vector w = unit_weights ? Vector::Ones(n) : pi;

  QuadraticFormSample q;
  const Matrix HA = mobility_product(sys, w, u);
  q.lhs = z.dot(HA * z);

  auto a0_term = [&] {
    double t = 0.0;
    for (int i = 0; i < n; ++i) t += s * w[i] * sys.a0[i] * std::pow(u[i], s - 2.0) * z[i] * z[i];
    return t;
  };
  auto diag_term = [&](auto coeff) {
    double t = 0.0;
    for (int i = 0; i < n; ++i) t += coeff(i) * std::pow(u[i], 2.0 * (s - 1.0)) * z[i] * z[i];
    return t;
  };

  switch (bound) {
    case LowerBound::general: {
      double cross = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (i != j) cross += w[i] * a(i, j) * std::pow(u[j], s) * std::pow(u[i], s - 2.0) * z[i] * z[i];
      q.rhs = a0_term() + s * (1.0 - s) * cross + s * diag_term([&](int i) {
                double sum = 0.0;
                for (int j = 0; j < n; ++j) {
                  const double d = std::sqrt(w[i] * a(i, j)) - std::sqrt(w[j] * a(j, i));
                  sum += d * d;
                }
                return (s + 1.0) * w[i] * a(i, i) - 0.5 * s * sum;
              });
      break;
    }
    case LowerBound::db_sublinear: {
      double first = 0.0;
      for (int i = 0; i < n; ++i)
        first += s * w[i] * std::pow(u[i], s - 2.0) * (sys.a0[i] + (s + 1.0) * a(i, i) * std::pow(u[i], s)) * z[i] * z[i];
      double second = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          const double m = std::sqrt(u[j] / u[i]) * z[i] + std::sqrt(u[i] / u[j]) * z[j];
          second += w[i] * a(i, j) * std::pow(u[i] * u[j], s - 1.0) * m * m;
        }
      q.rhs = first + 0.5 * s * s * second;
      break;
    }
    case LowerBound::weak_cross_sublinear: {
      const double eta0 = structural_constants(sys, w).eta0;
      q.rhs = a0_term() + eta0 * s * (s + 1.0) * diag_term([](int) { return 1.0; });
      break;
    }
    case LowerBound::small_exponent:
      q.rhs = a0_term() + s * (s + 1.0) * diag_term([&](int i) { return a(i, i); });
      break;
    case LowerBound::db_superlinear: {
      const double eta1 = structural_constants(sys, w).eta1;
      q.rhs = a0_term() + eta1 * s * (s + 1.0) * diag_term([&](int i) { return w[i]; });
      break;
    }
    case LowerBound::weak_cross_superlinear: {
      const double eta2 = structural_constants(sys, w).eta2;
      q.rhs = a0_term() + eta2 * s * (s + 1.0) * diag_term([](int) { return 1.0; });
      break;
    }
    case LowerBound::regularized: {
      const EntropyParams p{s, w, eps};
      q.lhs = z.dot(approx_mobility_product(sys, p, eta, u) * z);
      const double eps_eta = std::pow(eps, eta);
      double extra = 0.0;
      for (int i = 0; i < n; ++i)
        extra += eps_eta * s * w[i] * std::pow(u[i], s - 1.0) * z[i] * z[i] + eps_eta * eps * z[i] * z[i];
      q.rhs = z.dot(HA * z) + extra;
      break;
    }
  }
  return q;
}

/// Sample where the claimed bound failed.
struct QuadraticFormWitness {
  Vector u;
  Vector z;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double eps = 0.0;
  double eta = 0.0;
};

struct CertifyOptions {
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  double u_min = 1e-3;
  double u_max = 1e3;
  /// Regularized bound only; sampled per point when unset.
  std::optional<double> eps;
  std::optional<double> eta;
  unsigned jobs = 1;
  std::size_t max_witnesses = 16;
};

struct CertificationReport {
  LowerBound bound = LowerBound::general;
  bool hypotheses_met = false;
  std::string reason;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double min_scaled_slack = std::numeric_limits<double>::infinity();  ///< min slack / (1 + |lhs|)
  std::size_t tight = 0;   ///< samples within tolerance of equality
  std::size_t failures = 0;
  std::vector<QuadraticFormWitness> witnesses;

  bool passed() const { return hypotheses_met && failures == 0; }
};

/// Relative slack tolerance: slack >= -kSlackTolerance (1 + |lhs|).
inline constexpr double kSlackTolerance = 1e-10;

/// Randomized check of a lower bound: u log-uniform in [u_min, u_max]^n, z
/// uniform on the unit sphere. Samples are processed in fixed blocks with
/// per-block seeds, so the report does not depend on `jobs`.
inline CertificationReport certify_lower_bound(const CoefficientSystem& sys, const Vector& pi, LowerBound bound,
                                               const CertifyOptions& opt) {
  CertificationReport rep;
  rep.bound = bound;
  rep.samples = opt.samples;
  rep.seed = opt.seed;
  if (auto why = lower_bound_hypotheses(bound, sys, pi)) {
    rep.reason = *why;
    return rep;
  }
  if (bound == LowerBound::regularized) {
    if (opt.eps && !(*opt.eps > 0.0 && *opt.eps < 1.0)) throw Error("certify: eps must lie in (0, 1)");
    if (opt.eta && !(*opt.eta > 0.0 && *opt.eta < 0.5)) throw Error("certify: eta must lie in (0, 1/2)");
  }
  rep.hypotheses_met = true;

  constexpr std::size_t kBlock = 1024;
  const std::size_t blocks = (opt.samples + kBlock - 1) / kBlock;
  struct BlockResult {
    double min_scaled = std::numeric_limits<double>::infinity();
    std::size_t tight = 0, failures = 0;
    std::vector<QuadraticFormWitness> witnesses;
  };
  std::vector<BlockResult> results(blocks);

  auto run_block = [&](std::size_t b) {
    Random rng(Random::derive(opt.seed, b));
    BlockResult& r = results[b];
    const std::size_t begin = b * kBlock, end = std::min(opt.samples, begin + kBlock);
    Vector u(sys.n);
    for (std::size_t k = begin; k < end; ++k) {
      for (int i = 0; i < sys.n; ++i) u[i] = rng.log_uniform(opt.u_min, opt.u_max);
      const Vector z = rng.unit_vector(sys.n);
      double eps = 0.0, eta = 0.25;
      if (bound == LowerBound::regularized) {
        eps = opt.eps ? *opt.eps : rng.log_uniform(1e-6, 0.999);
        eta = opt.eta ? *opt.eta : rng.uniform(1e-3, 0.5 - 1e-3);
      }
      const auto q = evaluate_lower_bound(bound, sys, pi, u, z, eps, eta);
      const double scale = 1.0 + std::abs(q.lhs);
      const double scaled = q.slack() / scale;
      r.min_scaled = std::min(r.min_scaled, scaled);
      if (std::abs(q.slack()) <= kSlackTolerance * scale) ++r.tight;
      if (!(q.slack() >= -kSlackTolerance * scale)) {
        ++r.failures;
        if (r.witnesses.size() < opt.max_witnesses) r.witnesses.push_back({u, z, q.lhs, q.rhs, q.slack(), eps, eta});
      }
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(std::max<std::size_t>(blocks, 1))));
  if (jobs == 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t b = t; b < blocks; b += jobs) run_block(b);
      });
    for (auto& th : pool) th.join();
  }

  for (auto& r : results) {
    rep.min_scaled_slack = std::min(rep.min_scaled_slack, r.min_scaled);
    rep.tight += r.tight;
    rep.failures += r.failures;
    for (auto& w : r.witnesses)
      if (rep.witnesses.size() < opt.max_witnesses) rep.witnesses.push_back(std::move(w));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Dissipation coercivity

/// Coefficients of the pointwise lower bound
///   grad w : B_eps grad w >= c_s sum |grad u_i^s|^2
///       + eps_eta_coefficient sum pi_i |grad u_i^{(s+1)/2}|^2
///       + eps_eta1_coefficient sum |grad u_i|^2.
struct DissipationBound {
  double c_s = 0.0;
  double eps_eta_coefficient = 0.0;   ///< 4 eps^eta s / (s+1)^2
  double eps_eta1_coefficient = 0.0;  ///< eps^(eta+1)
  Regime regime = Regime::detailed_balance_self_diffusion;
  /// Linear rates only: weights of |grad sqrt(u_i)|^2 and |grad u_i|^2 in
  /// the entropy inequality, 4 pi_i a_i0 and 2 pi_i a_ii.
  Vector sqrt_gradient_coefficients;
  Vector gradient_coefficients;
};

/// Picks the strongest applicable regime for the weights in `p` and returns
/// c_s = (s+1)/s * kappa with kappa the regime constant. Throws when no
/// regime applies.
inline DissipationBound dissipation_bound(const CoefficientSystem& sys, const EntropyParams& p, double eta) {
  const double s = sys.s;
  const Vector& pi = p.pi;
  const MobilityBounds mb = structural_constants(sys, pi);
  const auto unit = uniform_weight(pi);

  double kappa = 0.0;
  std::optional<Regime> best;
  auto offer = [&](Regime r, double k) {
    if (k > kappa) {
      kappa = k;
      best = r;
    }
  };
  if (mb.holds(Regime::detailed_balance_self_diffusion))
    offer(Regime::detailed_balance_self_diffusion, (pi.array() * sys.a.diagonal().array()).minCoeff());
  if (mb.holds(Regime::detailed_balance_superlinear)) offer(Regime::detailed_balance_superlinear, mb.eta1 * pi.minCoeff());
  if (unit) {
    if (mb.holds(Regime::weak_cross_sublinear)) offer(Regime::weak_cross_sublinear, *unit * mb.eta0);
    if (mb.holds(Regime::weak_cross_superlinear)) offer(Regime::weak_cross_superlinear, *unit * mb.eta2);
    if (mb.holds(Regime::small_exponent)) offer(Regime::small_exponent, *unit * sys.a.diagonal().minCoeff());
  }
  if (!best) throw Error("dissipation_bound: no applicable regime with a positive constant");

  DissipationBound db;
  db.regime = *best;
  db.c_s = (s + 1.0) / s * kappa;
  if (p.eps > 0.0) {
    db.eps_eta_coefficient = 4.0 * std::pow(p.eps, eta) * s / ((s + 1.0) * (s + 1.0));
    db.eps_eta1_coefficient = std::pow(p.eps, eta + 1.0);
  }
  if (is_linear_exponent(s)) {
    db.sqrt_gradient_coefficients = 4.0 * pi.cwiseProduct(sys.a0);
    db.gradient_coefficients = 2.0 * pi.cwiseProduct(sys.a.diagonal());
  }
  return db;
}

}  // namespace crossdiff

#endif  // CROSSDIFF_MOBILITY_HPP

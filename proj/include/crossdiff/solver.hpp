#ifndef CROSSDIFF_SOLVER_HPP
#define CROSSDIFF_SOLVER_HPP

// Implicit Euler in entropy variables on a uniform 1D grid with zero-flux
// boundaries:
//
//   (u(w^k) - u^{k-1})/tau - D(B_eps(u) D w^k) + eps(-D^2 w^k + w^k) = f(u(w^k)),
//
// B_eps = A_eps H_eps^{-1}, face matrices at the arithmetic mean of the two
// neighbouring cells. The nonlinear system is solved for w by damped Newton
// with a colored finite-difference Jacobian.

#include "crossdiff/common.hpp"
#include "crossdiff/entropy.hpp"
#include "crossdiff/grid.hpp"
#include "crossdiff/mobility.hpp"
#include "crossdiff/model.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace crossdiff {

struct Problem {
  CoefficientSystem sys;
  Vector pi;  ///< entropy weights
  DomainConfig dom;

  EntropyParams entropy() const { return {sys.s, pi, dom.eps}; }
  /// Entropy without regularization, the quantity monitored as H.
  EntropyParams plain_entropy() const { return {sys.s, pi, 0.0}; }
};

struct NewtonOptions {
  double tolerance = 1e-10;  ///< on max |tau R| relative to 1 + max u_prev
  int max_iterations = 40;
  int max_backtracks = 30;
  int max_halvings = 10;
};

struct StepReport {
  int newton_iters = 0;
  double final_residual = 0.0;
  int substeps = 1;
  double entropy_before = 0.0;  ///< regularized entropy of the scheme
  double entropy_after = 0.0;
  double dissipation = 0.0;      ///< tau * sum over faces dx Dw.B Dw
  double regularization = 0.0;   ///< eps tau (|Dw|^2 + |w|^2) integrated
  double reaction_work = 0.0;    ///< tau int f.w
  double min_slack = std::numeric_limits<double>::infinity();  ///< discrete entropy inequality, smallest over substeps
  Vector mass_before;
  Vector mass_after;
  Vector mass_defect;        ///< |m_after - m_before - tau int f|
  Vector mass_defect_bound;  ///< eps tau int |w| per species plus L times the Newton residual
  std::optional<double> coercivity_slack;  ///< tau int Dw.B Dw - c_s tau sum |D u^s|^2
};

/// Admissible C_f with sum_i f_i(u) w_i(u) <= C_f (1 + h_eps(u)) for all u > 0,
/// estimated by a dense logarithmic scan. Zero without reaction; infinite when
/// the growth of f is not controlled by the entropy (sigma > max(1, s)).
inline double reaction_constant(const CoefficientSystem& sys, const EntropyParams& p) {
  if (!sys.has_reaction()) return 0.0;
  const int n = sys.n;
  if (sys.sigma > std::max(1.0, sys.s) + 1e-12) return std::numeric_limits<double>::infinity();

  constexpr int kPoints = 24001;
  const double lo = std::log(1e-12), hi = std::log(1e12);
  Vector alpha = Vector::Zero(n), beta = Vector::Zero(n), gamma = Vector::Zero(n);
  for (int m = 0; m < kPoints; ++m) {
    const double z = std::exp(lo + (hi - lo) * m / (kPoints - 1));
    for (int i = 0; i < n; ++i) {
      const double g = p.pi[i] * entropy_scalar(p.s, z) + p.eps * detail::boltzmann(z);
      const double uw = z * entropy_variable_scalar(p.s, p.pi[i], p.eps, z);
      alpha[i] = std::max(alpha[i], std::max(0.0, uw) / (1.0 + g));
      if (z < 1.0) beta[i] = std::max(beta[i], -uw);
      gamma[i] = std::max(gamma[i], std::pow(z, sys.sigma) / (1.0 + g));
    }
  }
  double k0 = 0.0, k1 = 0.0;
  for (int i = 0; i < n; ++i) k0 = std::max(k0, sys.b0[i] * alpha[i]);
  for (int j = 0; j < n; ++j) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += sys.b(i, j) * beta[i];
    k1 = std::max(k1, gamma[j] * sum);
  }
  // Safety margin for the finite scan.
  return 1.05 * n * (k0 + k1);
}

namespace detail {

/// u(w) cellwise; throws ConvergenceError from the inverse transform.
inline Matrix densities(const EntropyParams& p, const Matrix& w) {
  Matrix u(w.rows(), w.cols());
  for (Eigen::Index k = 0; k < w.rows(); ++k)
    for (Eigen::Index i = 0; i < w.cols(); ++i)
      u(k, i) = inverse_transform_scalar(p.s, p.pi[i], p.eps, w(k, i), static_cast<int>(i));
  return u;
}

}  // namespace detail

/// Cellwise residual of the scheme for trial w, previous densities u_prev and
/// step tau. Rows are cells.
inline Matrix assemble_residual(const Problem& pb, const Matrix& u_prev, const Matrix& w, double tau,
                                Matrix* u_out = nullptr) {
  const EntropyParams p = pb.entropy();
  const int M = static_cast<int>(w.rows());
  const double dx = pb.dom.dx(), eps = pb.dom.eps;
  const Matrix u = detail::densities(p, w);

  Matrix R = (u - u_prev) / tau;
  for (int k = 0; k + 1 < M; ++k) {
    const Vector dw = (w.row(k + 1) - w.row(k)).transpose() / dx;
    const Vector mid = 0.5 * (u.row(k + 1) + u.row(k)).transpose();
    Vector flux = onsager_matrix(pb.sys, p, pb.dom.eta, mid) * dw;
    if (eps > 0.0) flux += eps * dw;
    R.row(k) -= flux.transpose() / dx;
    R.row(k + 1) += flux.transpose() / dx;
  }
  if (eps > 0.0) R += eps * w;
  if (pb.sys.has_reaction())
    for (int k = 0; k < M; ++k) R.row(k) -= reaction(pb.sys, u.row(k).transpose()).transpose();
  if (u_out) *u_out = u;
  return R;
}

namespace detail {

inline Eigen::Index flat(int k, int i, int n) { return static_cast<Eigen::Index>(k) * n + i; }

/// Finite-difference Jacobian of the residual. Cells k = c (mod 3) are
/// perturbed together since each residual row couples only neighbours.
inline Eigen::SparseMatrix<double> jacobian(const Problem& pb, const Matrix& u_prev, const Matrix& w, const Matrix& R,
                                            double tau) {
  const int M = static_cast<int>(w.rows()), n = static_cast<int>(w.cols());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(3 * M * n * n));
  for (int colour = 0; colour < 3; ++colour) {
    for (int i = 0; i < n; ++i) {
      Matrix wp = w;
      std::vector<double> h(static_cast<std::size_t>(M), 0.0);
      for (int k = colour; k < M; k += 3) {
        h[static_cast<std::size_t>(k)] = 1e-7 * (1.0 + std::abs(w(k, i)));
        wp(k, i) += h[static_cast<std::size_t>(k)];
      }
      const Matrix Rp = assemble_residual(pb, u_prev, wp, tau);
      for (int k = colour; k < M; k += 3) {
        const double hk = h[static_cast<std::size_t>(k)];
        for (int row = std::max(0, k - 1); row <= std::min(M - 1, k + 1); ++row)
          for (int j = 0; j < n; ++j) {
            const double d = (Rp(row, j) - R(row, j)) / hk;
            if (d != 0.0) entries.emplace_back(flat(row, j, n), flat(k, i, n), d);
          }
      }
    }
  }
  Eigen::SparseMatrix<double> J(static_cast<Eigen::Index>(M) * n, static_cast<Eigen::Index>(M) * n);
  J.setFromTriplets(entries.begin(), entries.end());
  J.makeCompressed();
  return J;
}

struct NewtonResult {
  bool converged = false;
  Matrix w;
  Matrix u;
  int iterations = 0;
  double residual = 0.0;
};

inline NewtonResult newton_solve(const Problem& pb, const Matrix& u_prev, const Matrix& w_start, double tau,
                                 const NewtonOptions& opt) {
  const int M = static_cast<int>(w_start.rows()), n = static_cast<int>(w_start.cols());
  const double target = opt.tolerance * (1.0 + u_prev.cwiseAbs().maxCoeff());
  NewtonResult res;
  res.w = w_start;
  Matrix R;
  try {
    R = assemble_residual(pb, u_prev, res.w, tau, &res.u);
  } catch (const ConvergenceError&) {
    return res;
  }
  res.residual = tau * R.cwiseAbs().maxCoeff();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (; res.iterations < opt.max_iterations; ++res.iterations) {
    if (!(res.residual > target)) {
      res.converged = std::isfinite(res.residual);
      return res;
    }
    const auto J = jacobian(pb, u_prev, res.w, R, tau);
    lu.compute(J);
    if (lu.info() != Eigen::Success) return res;
    Vector rhs(static_cast<Eigen::Index>(M) * n);
    for (int k = 0; k < M; ++k)
      for (int i = 0; i < n; ++i) rhs[flat(k, i, n)] = -R(k, i);
    const Vector delta = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !delta.allFinite()) return res;

    double lambda = 1.0;
    bool accepted = false;
    for (int b = 0; b < opt.max_backtracks; ++b, lambda *= 0.5) {
      Matrix trial = res.w;
      for (int k = 0; k < M; ++k)
        for (int i = 0; i < n; ++i) trial(k, i) += lambda * delta[flat(k, i, n)];
      Matrix u_trial;
      Matrix R_trial;
      try {
        R_trial = assemble_residual(pb, u_prev, trial, tau, &u_trial);
      } catch (const ConvergenceError&) {
        continue;
      }
      const double r = tau * R_trial.cwiseAbs().maxCoeff();
      if (std::isfinite(r) && r < res.residual) {
        res.w = std::move(trial);
        res.u = std::move(u_trial);
        R = std::move(R_trial);
        res.residual = r;
        accepted = true;
        break;
      }
    }
    if (!accepted) return res;  // stagnation
  }
  res.converged = !(res.residual > target);
  return res;
}

}  // namespace detail

/// Discrete entropy-inequality bookkeeping for one accepted substep.
struct SubstepTerms {
  double dissipation = 0.0;
  double regularization = 0.0;
  double reaction_work = 0.0;
  double coercive = 0.0;  ///< sum over faces dx |D u^s|^2
};

inline SubstepTerms substep_terms(const Problem& pb, const Matrix& u, const Matrix& w) {
  const EntropyParams p = pb.entropy();
  const int M = static_cast<int>(w.rows());
  const double dx = pb.dom.dx(), s = pb.sys.s;
  SubstepTerms t;
  for (int k = 0; k + 1 < M; ++k) {
    const Vector dw = (w.row(k + 1) - w.row(k)).transpose() / dx;
    const Vector mid = 0.5 * (u.row(k + 1) + u.row(k)).transpose();
    t.dissipation += dx * dw.dot(onsager_matrix(pb.sys, p, pb.dom.eta, mid) * dw);
    t.regularization += dx * dw.squaredNorm();
    for (int i = 0; i < u.cols(); ++i) {
      const double g = (std::pow(u(k + 1, i), s) - std::pow(u(k, i), s)) / dx;
      t.coercive += dx * g * g;
    }
  }
  t.regularization += dx * w.squaredNorm();
  if (pb.sys.has_reaction())
    for (int k = 0; k < M; ++k) t.reaction_work += dx * reaction(pb.sys, u.row(k).transpose()).dot(w.row(k).transpose());
  return t;
}

/// Raised when a step fails even after the allowed time-step halvings. Holds
/// the state the step started from.
class NewtonFailure : public ConvergenceError {
public:
  NewtonFailure(const std::string& what, double residual, GridState state)
      : ConvergenceError(what, -1, residual), state_(std::move(state)) {}
  const GridState& state() const noexcept { return state_; }

private:
  GridState state_;
};

namespace detail {

struct StepContext {
  const Problem& pb;
  const NewtonOptions& opt;
  double c_f;
  std::optional<double> c_s;
};

inline void advance(const StepContext& ctx, GridState& g, double tau, int depth, StepReport& rep) {
  const Problem& pb = ctx.pb;
  const EntropyParams p = pb.entropy();
  NewtonResult nr = newton_solve(pb, g.u, g.w, tau, ctx.opt);
  rep.newton_iters += nr.iterations;
  if (!nr.converged) {
    if (depth >= ctx.opt.max_halvings)
      throw NewtonFailure("Newton did not converge at t=" + std::to_string(g.t) + " after " +
                              std::to_string(depth) + " step halvings (residual " + std::to_string(nr.residual) + ")",
                          nr.residual, g);
    advance(ctx, g, 0.5 * tau, depth + 1, rep);
    advance(ctx, g, 0.5 * tau, depth + 1, rep);
    rep.substeps += 1;
    return;
  }

  const double L = pb.dom.length, eps = pb.dom.eps;
  const double H_prev = entropy_total(p, g);
  const Vector m_prev = mass(g);
  GridState next = g;
  next.u = std::move(nr.u);
  next.w = std::move(nr.w);
  next.t = g.t + tau;
  const double H_new = entropy_total(p, next);
  const SubstepTerms t = substep_terms(pb, next.u, next.w);

  const double cf_tau = std::isfinite(ctx.c_f) ? ctx.c_f * tau : 0.0;
  if (std::isfinite(ctx.c_f)) {
    const double slack = H_prev + cf_tau * L - ((1.0 - cf_tau) * H_new + tau * t.dissipation + eps * tau * t.regularization);
    rep.min_slack = std::min(rep.min_slack, slack);
  }
  rep.dissipation += tau * t.dissipation;
  rep.regularization += eps * tau * t.regularization;
  rep.reaction_work += tau * t.reaction_work;
  rep.final_residual = std::max(rep.final_residual, nr.residual);
  if (ctx.c_s) {
    const double c = tau * t.dissipation - *ctx.c_s * tau * t.coercive;
    rep.coercivity_slack = rep.coercivity_slack ? std::min(*rep.coercivity_slack, c) : c;
  }

  Vector reaction_mass = Vector::Zero(g.species());
  if (pb.sys.has_reaction())
    for (int k = 0; k < next.cells(); ++k) reaction_mass += next.dx * reaction(pb.sys, next.u.row(k).transpose());
  const Vector m_new = mass(next);
  const Vector defect = (m_new - m_prev - tau * reaction_mass).cwiseAbs();
  // The Newton residual enters the balance as well: |sum dx tau R| <= L r.
  Vector bound = eps * tau * next.dx * next.w.cwiseAbs().colwise().sum().transpose();
  bound.array() += L * nr.residual;
  rep.mass_defect += defect;
  rep.mass_defect_bound += bound;
  g = std::move(next);
}

}  // namespace detail

/// Initial grid state: samples u0 (clamped by the cut-off when eps > 0) and
/// computes w = h_eps'(u).
inline GridState initial_state(const Problem& pb, const InitialData& u0) {
  InitialData data = u0;
  if (pb.dom.eps > 0.0 && !data.clamp_eps) data = cutoff_initial_data(std::move(data), pb.dom.eps);
  GridState g = GridState::from_density(pb.dom, data.sample(pb.dom));
  g.w.resize(g.u.rows(), g.u.cols());
  const EntropyParams p = pb.entropy();
  for (int k = 0; k < g.cells(); ++k) g.w.row(k) = entropy_variable(p, g.u.row(k).transpose()).transpose();
  // Use the exact image of w so that u and w are consistent to round-off.
  g.u = detail::densities(p, g.w);
  return g;
}

/// One time step of size tau from `prev`, halving the step (and taking two
/// halves) when Newton stalls, up to the configured number of halvings.
inline std::pair<GridState, StepReport> newton_step(const Problem& pb, const GridState& prev, double c_f,
                                                    const NewtonOptions& opt = {},
                                                    std::optional<double> c_s = std::nullopt) {
  StepReport rep;
  const EntropyParams p = pb.entropy();
  rep.entropy_before = entropy_total(p, prev);
  rep.mass_before = mass(prev);
  rep.mass_defect = Vector::Zero(prev.species());
  rep.mass_defect_bound = Vector::Zero(prev.species());
  rep.substeps = 1;
  GridState g = prev;
  detail::StepContext ctx{pb, opt, c_f, c_s};
  detail::advance(ctx, g, pb.dom.tau, 0, rep);
  g.t = prev.t + pb.dom.tau;
  g.k = prev.k + 1;
  rep.entropy_after = entropy_total(p, g);
  rep.mass_after = mass(g);
  return {std::move(g), std::move(rep)};
}

struct DiagnosticsRow {
  int step = 0;
  double t = 0.0;
  double H = 0.0;           ///< regularized entropy of the scheme
  double production = 0.0;  ///< dH/dt of the unregularized entropy at this state
  Vector mass;
  double min_u = 0.0;
  double max_u = 0.0;
  int newton_iters = 0;
  double residual = 0.0;
};

struct Snapshot {
  double t = 0.0;
  Matrix u;
};

struct DiagnosticsSeries {
  std::vector<DiagnosticsRow> rows;  ///< row 0 is the initial state
  std::vector<StepReport> steps;
  std::vector<Snapshot> trajectory;  ///< initial state plus every recorded step
  double c_f = 0.0;
  std::optional<double> c_s;

  double min_slack() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : steps) m = std::min(m, s.min_slack);
    return m;
  }
  double min_density() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) m = std::min(m, r.min_u);
    return m;
  }
};

struct SimulateOptions {
  NewtonOptions newton;
  int record_every = 1;  ///< trajectory snapshots every this many steps (0: none)
  /// Called after each step; returning false stops the run early.
  std::function<bool(const GridState&, const StepReport&)> observer;
};

inline DiagnosticsRow diagnostics_row(const Problem& pb, const GridState& g, int iters, double residual) {
  DiagnosticsRow r;
  r.step = g.k;
  r.t = g.t;
  r.H = entropy_total(pb.entropy(), g);
  r.production = entropy_production(pb.sys, pb.pi, g);
  r.mass = mass(g);
  r.min_u = g.u.minCoeff();
  r.max_u = g.u.maxCoeff();
  r.newton_iters = iters;
  r.residual = residual;
  return r;
}

/// Runs the scheme to time T. Throws NewtonFailure when a step cannot be
/// completed, and Error when tau C_f >= 1.
inline DiagnosticsSeries simulate(const Problem& pb, const InitialData& u0, const SimulateOptions& opt = {}) {
  if (pb.pi.size() != pb.sys.n) throw Error("simulate: weight vector has the wrong length");
  if (u0.n() != pb.sys.n) throw Error("simulate: initial data has the wrong number of species");
  if (!(pb.dom.tau > 0.0) || pb.dom.cells < 2) throw Error("simulate: invalid grid");
  if (pb.dom.eps < 0.0 || pb.dom.eps >= 1.0 || (pb.dom.eps == 0.0 && !is_linear_exponent(pb.sys.s)))
    throw Error("simulate: eps must lie in (0, 1); eps = 0 only for s = 1");
  if (pb.dom.eps > 0.0 && !(pb.dom.eta > 0.0 && pb.dom.eta < 0.5)) throw Error("simulate: eta must lie in (0, 1/2)");

  DiagnosticsSeries out;
  out.c_f = reaction_constant(pb.sys, pb.entropy());
  if (std::isfinite(out.c_f) && out.c_f * pb.dom.tau >= 1.0) throw Error("simulate: tau C_f >= 1");
  try {
    out.c_s = dissipation_bound(pb.sys, pb.entropy(), pb.dom.eta).c_s;
  } catch (const Error&) {
  }

  GridState g = initial_state(pb, u0);
  out.rows.push_back(diagnostics_row(pb, g, 0, 0.0));
  if (opt.record_every > 0) out.trajectory.push_back({g.t, g.u});

  const int steps = static_cast<int>(std::ceil(pb.dom.T / pb.dom.tau - 1e-9));
  for (int k = 0; k < steps; ++k) {
    auto [next, rep] = newton_step(pb, g, out.c_f, opt.newton, out.c_s);
    next.t = (k + 1) * pb.dom.tau;
    g = std::move(next);
    out.rows.push_back(diagnostics_row(pb, g, rep.newton_iters, rep.final_residual));
    if (opt.record_every > 0 && (g.k % opt.record_every == 0 || k + 1 == steps)) out.trajectory.push_back({g.t, g.u});
    const bool go_on = !opt.observer || opt.observer(g, rep);
    out.steps.push_back(std::move(rep));
    if (!go_on) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weak residuals of the piecewise-constant-in-time trajectory

struct TestFunction {
  int time_power = 0;  ///< p in t^p
  int mode = 0;        ///< q in cos(q pi x / L)
  int species = 0;
};

struct WeakResidual {
  std::vector<TestFunction> functions;
  std::vector<double> weak;       ///< gradient form, int phi_x (A(u) u_x)_i
  std::vector<double> very_weak;  ///< second-derivative form, -int phi_xx u_i p_i(u)

  double max_weak() const { return weak.empty() ? 0.0 : *std::max_element(weak.begin(), weak.end()); }
  double max_very_weak() const {
    return very_weak.empty() ? 0.0 : *std::max_element(very_weak.begin(), very_weak.end());
  }
};

/// t^p cos(q pi x / L) for p in {0, 1}, q in {0, 1, 2} and every species.
inline std::vector<TestFunction> default_test_functions(int n) {
  std::vector<TestFunction> out;
  for (int i = 0; i < n; ++i)
    for (int p = 0; p <= 1; ++p)
      for (int q = 0; q <= 2; ++q) out.push_back({p, q, i});
  return out;
}

/// Absolute residuals of
///   int u(T) phi(T) - int u0 phi(0) - int int u phi_t + int int phi_x (A u_x)_i - int int f_i phi
/// (and the variant with -phi_xx u_i p_i(u) in place of the flux term) for
/// the trajectory u(t) = u^k on (t_{k-1}, t_k]. Time integrals are exact,
/// space integrals use the midpoint rule and face differences. Requires a
/// trajectory recorded at every step.
inline WeakResidual weak_residual(const Problem& pb, const DiagnosticsSeries& series,
                                  const std::vector<TestFunction>& functions) {
  const auto& tr = series.trajectory;
  if (tr.size() < 2) throw Error("weak_residual: trajectory needs at least two snapshots");
  const int M = static_cast<int>(tr.front().u.rows());
  const double L = pb.dom.length, dx = L / M;
  const double kpi = std::numbers::pi / L;
  auto time_factor = [](int p, double t) { return p == 0 ? 1.0 : t; };
  auto time_integral = [](int p, double a, double b) { return p == 0 ? b - a : 0.5 * (b * b - a * a); };

  WeakResidual out;
  out.functions = functions;
  for (const auto& tf : functions) {
    const int i = tf.species, q = tf.mode, p = tf.time_power;
    auto phi = [&](double x) { return std::cos(q * kpi * x); };
    auto phi_x = [&](double x) { return -q * kpi * std::sin(q * kpi * x); };
    auto phi_xx = [&](double x) { return -(q * kpi) * (q * kpi) * std::cos(q * kpi * x); };

    auto pairing = [&](const Matrix& u, auto&& f) {
      double sum = 0.0;
      for (int k = 0; k < M; ++k) sum += dx * u(k, i) * f((k + 0.5) * dx);
      return sum;
    };
    const double T = tr.back().t, t0 = tr.front().t;
    // Terms shared by both forms: boundary-in-time pairings, -int int u phi_t
    // and the reaction.
    double common = time_factor(p, T) * pairing(tr.back().u, phi) - time_factor(p, t0) * pairing(tr.front().u, phi);
    double flux_form = 0.0, second_form = 0.0;
    for (std::size_t k = 1; k < tr.size(); ++k) {
      const Matrix& u = tr[k].u;
      const double a = tr[k - 1].t, b = tr[k].t;
      const double ti = time_integral(p, a, b);
      common -= (time_factor(p, b) - time_factor(p, a)) * pairing(u, phi);

      double flux = 0.0;
      for (int c = 0; c + 1 < M; ++c) {
        const Vector mid = 0.5 * (u.row(c) + u.row(c + 1)).transpose();
        const Vector du = (u.row(c + 1) - u.row(c)).transpose() / dx;
        flux += dx * phi_x((c + 1) * dx) * diffusion_matrix(pb.sys, mid).row(i).dot(du);
      }
      double second = 0.0, react = 0.0;
      for (int c = 0; c < M; ++c) {
        const double x = (c + 0.5) * dx;
        double rate = pb.sys.a0[i];
        for (int j = 0; j < pb.sys.n; ++j) rate += pb.sys.a(i, j) * std::pow(u(c, j), pb.sys.s);
        second -= dx * phi_xx(x) * u(c, i) * rate;
        if (pb.sys.has_reaction()) react += dx * phi(x) * reaction(pb.sys, u.row(c).transpose())[i];
      }
      common -= ti * react;
      flux_form += ti * flux;
      second_form += ti * second;
    }
    out.weak.push_back(std::abs(common + flux_form));
    out.very_weak.push_back(std::abs(common + second_form));
  }
  return out;
}

}  // namespace crossdiff

#endif  // CROSSDIFF_SOLVER_HPP

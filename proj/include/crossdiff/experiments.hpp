#ifndef CROSSDIFF_EXPERIMENTS_HPP
#define CROSSDIFF_EXPERIMENTS_HPP

#include "crossdiff/balance.hpp"
#include "crossdiff/grid.hpp"
#include "crossdiff/mobility.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/solver.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace crossdiff {

// ---------------------------------------------------------------------------
// Entropy-increasing initial data for the cyclic three-species system
// a_13 = a_32 = a_21 = 1.

enum class CounterexampleVariant { vanishing_a0, positive_a0 };

struct CounterexampleConfig {
  CounterexampleVariant variant = CounterexampleVariant::vanishing_a0;
  double eps_profile = 0.1;  ///< ramp width, in (0, 1/2)
  double a10 = 1.0;          ///< positive_a0 only
  double a20 = 1.0;
  double a30 = 1.0;
};

inline void validate(const CounterexampleConfig& c) {
  if (!(c.eps_profile > 0.0 && c.eps_profile < 0.5)) throw Error("counterexample: eps must lie in (0, 1/2)");
  if (c.variant == CounterexampleVariant::positive_a0 && !(c.a10 > 0.0 && c.a20 > 0.0 && c.a30 > 0.0))
    throw Error("counterexample: a10, a20, a30 must be positive");
}

inline CoefficientSystem counterexample_system(const CounterexampleConfig& c) {
  validate(c);
  CoefficientSystem sys = CoefficientSystem::zeros(3, 1.0);
  sys.a(0, 2) = sys.a(2, 1) = sys.a(1, 0) = 1.0;
  if (c.variant == CounterexampleVariant::positive_a0) sys.a0 << c.a10, c.a20, c.a30;
  return sys;
}

/// Piecewise-linear data constant on (0, 1/2) and (1/2 + eps, 1) with a
/// linear ramp in between. Requires dx <= eps/8.
inline InitialData counterexample_initial_data(const CounterexampleConfig& c, const DomainConfig& dom) {
  validate(c);
  if (std::abs(dom.length - 1.0) > 1e-12) throw Error("counterexample: domain must be (0, 1)");
  if (dom.dx() > c.eps_profile / 8.0 * (1.0 + 1e-12))
    throw Error("counterexample: grid does not resolve the ramp (need dx <= eps/8)");
  const double e = c.eps_profile;
  auto ramp = [e](double left, double right) { return PiecewiseLinear{{0.5, 0.5 + e}, {left, right}}; };
  InitialData d;
  if (c.variant == CounterexampleVariant::vanishing_a0) {
    d.species = {1.0, ramp(3.0, 2.0), ramp(9.0, 10.0)};
  } else {
    const double a20 = c.a20, a30 = c.a30;
    const double u1 = a20 * (2.0 * a20 + a30) / (8.0 * a20 + 4.0 * a30);
    d.species = {u1, ramp(4.0 * a20, 3.0 * a20), ramp(8.0 * a20 + 4.0 * a30, 9.0 * a20 + 4.0 * a30)};
  }
  return d;
}

/// Lower bound on dH/dt at the initial data: 1/(6 eps), or a20^2/(12 eps).
inline double counterexample_bound(const CounterexampleConfig& c) {
  validate(c);
  if (c.variant == CounterexampleVariant::vanishing_a0) return 1.0 / (6.0 * c.eps_profile);
  return c.a20 * c.a20 / (12.0 * c.eps_profile);
}

/// dH/dt at the initial data on a grid of `cells` cells over (0, 1), weights 1.
inline double counterexample_production(const CounterexampleConfig& c, int cells) {
  DomainConfig dom;
  dom.cells = cells;
  const CoefficientSystem sys = counterexample_system(c);
  const InitialData u0 = counterexample_initial_data(c, dom);
  return entropy_production(sys, Vector::Ones(3), GridState::from_density(dom, u0.sample(dom)));
}

// ---------------------------------------------------------------------------
// Parameter sweeps

enum class KnobKind {
  cross,        ///< a_ij
  symmetric,    ///< a_ij and a_ji together
  diffusion,    ///< a_i0
  exponent,     ///< s
  eps_profile,  ///< ramp width of the vanishing-a0 initial data
};

struct Knob {
  KnobKind kind = KnobKind::cross;
  int i = 0;
  int j = 0;

  std::string name() const {
    switch (kind) {
      case KnobKind::cross: return "a:" + std::to_string(i + 1) + "," + std::to_string(j + 1);
      case KnobKind::symmetric: return "a_sym:" + std::to_string(i + 1) + "," + std::to_string(j + 1);
      case KnobKind::diffusion: return "a0:" + std::to_string(i + 1);
      case KnobKind::exponent: return "s";
      case KnobKind::eps_profile: return "eps_profile";
    }
    return "?";
  }
};

struct SweepRow {
  double value = 0.0;
  bool a1 = false;
  bool a2 = false;
  bool detailed_balance = false;
  MobilityBounds bounds;
  double production0 = 0.0;
  double min_slack = std::numeric_limits<double>::infinity();
  bool entropy_increase = false;
  int steps = 0;
  std::string error;  ///< nonempty when the short run failed
};

struct SweepOptions {
  int steps = 20;
  unsigned jobs = 1;
};

inline Problem apply_knob(Problem pb, const Knob& knob, double value) {
  auto& sys = pb.sys;
  auto in_range = [&](int k) {
    if (k < 0 || k >= sys.n) throw Error("sweep: species index out of range");
  };
  switch (knob.kind) {
    case KnobKind::cross:
      in_range(knob.i), in_range(knob.j);
      sys.a(knob.i, knob.j) = value;
      break;
    case KnobKind::symmetric:
      in_range(knob.i), in_range(knob.j);
      sys.a(knob.i, knob.j) = sys.a(knob.j, knob.i) = value;
      break;
    case KnobKind::diffusion:
      in_range(knob.i);
      sys.a0[knob.i] = value;
      break;
    case KnobKind::exponent:
      sys.s = value;
      break;
    case KnobKind::eps_profile:
      break;
  }
  if ((sys.a.array() < 0.0).any() || (sys.a0.array() < 0.0).any()) throw Error("sweep: negative coefficient");
  if (!(sys.s > 0.0)) throw Error("sweep: s must be positive");
  pb.pi = entropy_weights(sys.a);
  return pb;
}

/// For each value: balance certificate, structural constants, production at
/// the initial state, and a short run recording the smallest entropy slack
/// and whether the entropy ever increased.
inline std::vector<SweepRow> regime_sweep(const Problem& base, const InitialData& u0, const Knob& knob,
                                          const std::vector<double>& values, const SweepOptions& opt = {}) {
  std::vector<SweepRow> rows(values.size());
  auto run = [&](std::size_t idx) {
    SweepRow& row = rows[idx];
    row.value = values[idx];
    Problem pb = apply_knob(base, knob, values[idx]);
    InitialData data = u0;
    if (knob.kind == KnobKind::eps_profile) {
      CounterexampleConfig c;
      c.eps_profile = values[idx];
      data = counterexample_initial_data(c, pb.dom);
    }
    const auto cert = check_conditions(pb.sys.a);
    row.a1 = cert.a1_holds;
    row.a2 = cert.a2_holds;
    row.detailed_balance = cert.detailed_balance();
    row.bounds = structural_constants(pb.sys, pb.pi);
    row.production0 = entropy_production(pb.sys, pb.pi, GridState::from_density(pb.dom, data.sample(pb.dom)));
    row.entropy_increase = row.production0 > 0.0;

    pb.dom.T = opt.steps * pb.dom.tau;
    SimulateOptions so;
    so.record_every = 0;
    try {
      const auto series = simulate(pb, data, so);
      row.min_slack = series.min_slack();
      row.steps = static_cast<int>(series.steps.size());
      for (std::size_t k = 1; k < series.rows.size(); ++k) {
        const double prev = series.rows[k - 1].H, cur = series.rows[k].H;
        if (cur > prev + 1e-12 * (1.0 + std::abs(prev))) row.entropy_increase = true;
      }
    } catch (const Error& e) {
      row.error = e.what();
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(values.size())));
  if (jobs <= 1) {
    for (std::size_t k = 0; k < values.size(); ++k) run(k);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    for (unsigned t = 0; t < jobs; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t k = t; k < values.size(); k += jobs) run(k);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return rows;
}

}  // namespace crossdiff

#endif  // CROSSDIFF_EXPERIMENTS_HPP

#ifndef CROSSDIFF_VALIDATION_HPP
#define CROSSDIFF_VALIDATION_HPP

#include "crossdiff/balance.hpp"
#include "crossdiff/mobility.hpp"
#include "crossdiff/model.hpp"

#include <sstream>
#include <string>
#include <vector>

namespace crossdiff {

enum class ExistenceRegime { linear, sublinear, superlinear };

inline std::string_view to_string(ExistenceRegime r) {
  switch (r) {
    case ExistenceRegime::linear: return "linear";
    case ExistenceRegime::sublinear: return "sublinear";
    case ExistenceRegime::superlinear: return "superlinear";
  }
  return "?";
}

struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::string reason;  ///< empty when passed
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  ExistenceRegime regime = ExistenceRegime::linear;
  bool detailed_balance = false;
  bool eta0_positive = false;
  bool eta1_positive = false;
  bool eta2_positive = false;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }

  std::vector<std::string> failures() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
      if (!c.passed) out.push_back(c.reason);
    return out;
  }
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

/// Checks the coefficient and grid hypotheses one by one. Never throws; a
/// malformed system is reported as failed checks.
inline ValidationReport validate_system(const CoefficientSystem& sys, const DomainConfig& dom) {
  ValidationReport rep;
  auto check = [&](std::string name, bool ok, std::string reason) {
    rep.checks.push_back({std::move(name), ok, ok ? std::string() : std::move(reason)});
  };

  const int n = sys.n;
  const bool sizes_ok = n >= 1 && sys.a0.size() == n && sys.a.rows() == n && sys.a.cols() == n && sys.b0.size() == n &&
                        sys.b.rows() == n && sys.b.cols() == n;
  check("dimensions", sizes_ok, "coefficient arrays do not match n = " + std::to_string(n));

  const double s = sys.s;
  check("exponent", s > 0.0, "s > 0 violated");

  if (sizes_ok) {
    const bool nonneg = (sys.a0.array() >= 0.0).all() && (sys.a.array() >= 0.0).all() && (sys.b0.array() >= 0.0).all() &&
                        (sys.b.array() >= 0.0).all();
    check("nonnegative", nonneg, "all coefficients must be nonnegative");
  }
  check("sigma_nonnegative", sys.sigma >= 0.0, "sigma >= 0 violated");

  if (s > 0.0) {
    if (is_linear_exponent(s)) rep.regime = ExistenceRegime::linear;
    else rep.regime = s < 1.0 ? ExistenceRegime::sublinear : ExistenceRegime::superlinear;

    constexpr int d = 1;
    if (s >= 1.0 - kLinearExponentBand) {
      check("reaction_exponent", sys.sigma == 1.0, "sigma = 1 required for s >= 1, got sigma = " + detail::fmt(sys.sigma));
    } else {
      const double bound = 2.0 * s - 1.0 + 2.0 / d;
      check("reaction_exponent", sys.sigma < bound, "sigma < 2s-1+2/d = " + detail::fmt(bound) + " violated");
    }
  }

  check("cells", dom.cells >= 2, "at least two cells required");
  check("length", dom.length > 0.0, "domain length must be positive");
  check("time_step", dom.tau > 0.0, "tau > 0 violated");
  check("final_time", dom.T >= 0.0, "final time must be nonnegative");
  const bool eps_zero_ok = dom.eps == 0.0 && is_linear_exponent(s);
  check("regularization", (dom.eps > 0.0 && dom.eps < 1.0) || eps_zero_ok,
        "0 < eps < 1 violated (eps = 0 is allowed only for s = 1)");
  check("eta", dom.eta > 0.0 && dom.eta < 0.5, "0 < eta < 1/2 violated");

  if (sizes_ok && (sys.a.array() >= 0.0).all() && s > 0.0) {
    const auto cert = check_conditions(sys.a);
    rep.detailed_balance = cert.detailed_balance();
    const Vector pi = cert.measure ? cert.measure->pi : Vector::Ones(n);
    const auto mb = structural_constants(sys, pi);
    rep.eta0_positive = mb.eta0 > 0.0;
    rep.eta1_positive = mb.eta1 > 0.0;
    rep.eta2_positive = mb.eta2 > 0.0;
  }
  return rep;
}

}  // namespace crossdiff

#endif  // CROSSDIFF_VALIDATION_HPP

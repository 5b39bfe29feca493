#ifndef CROSSDIFF_TOOLS_REPORT_HPP
#define CROSSDIFF_TOOLS_REPORT_HPP

#include "crossdiff/balance.hpp"
#include "crossdiff/experiments.hpp"
#include "crossdiff/mobility.hpp"
#include "crossdiff/solver.hpp"
#include "crossdiff/validation.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace crossdiff::report {

using nlohmann::json;

inline constexpr const char* kDiagnosticsSchema = "# crossdiff-diagnostics v1";
inline constexpr const char* kTrajectorySchema = "# crossdiff-trajectory v1";
inline constexpr const char* kSweepSchema = "# crossdiff-sweep v1";

/// Shortest round-trip representation is not needed; %.17g is exact and
/// identical across runs.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string states(const std::vector<int>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " -> " : "") + std::to_string(v[k] + 1);
  if (!v.empty()) s += " -> " + std::to_string(v.front() + 1);
  return s;
}

// ---------------------------------------------------------------------------

inline json to_json(const BalanceCertificate& c) {
  json j;
  j["a1_holds"] = c.a1_holds;
  j["a2_holds"] = c.a2_holds;
  j["detailed_balance"] = c.detailed_balance();
  if (c.measure) {
    j["pi"] = to_std(c.measure->pi);
    json classes = json::array();
    for (const auto& cls : c.measure->classes) {
      json one = json::array();
      for (int v : cls) one.push_back(v + 1);
      classes.push_back(one);
    }
    j["classes"] = classes;
  }
  if (c.a1_witness) j["a1_witness"] = {c.a1_witness->first + 1, c.a1_witness->second + 1};
  if (c.a2_witness) {
    json cyc = json::array();
    for (int v : c.a2_witness->states) cyc.push_back(v + 1);
    j["a2_witness"] = {{"cycle", cyc}, {"forward", c.a2_witness->forward}, {"backward", c.a2_witness->backward}};
  }
  return j;
}

inline void write_certificate_text(std::ostream& os, const BalanceCertificate& c) {
  os << "detailed balance: " << (c.detailed_balance() ? "yes" : "no") << "\n";
  os << "(A1) pairwise reversibility: " << (c.a1_holds ? "holds" : "fails") << "\n";
  if (c.a1_witness)
    os << "  a_" << c.a1_witness->first + 1 << c.a1_witness->second + 1 << " > 0 but a_" << c.a1_witness->second + 1
       << c.a1_witness->first + 1 << " = 0\n";
  os << "(A2) cycle condition: " << (c.a2_holds ? "holds" : "fails") << "\n";
  if (c.a2_witness)
    os << "  cycle " << states(c.a2_witness->states) << ": forward product " << num(c.a2_witness->forward)
       << ", backward product " << num(c.a2_witness->backward) << "\n";
  if (c.measure) {
    os << "invariant measure pi:";
    for (Eigen::Index i = 0; i < c.measure->pi.size(); ++i) os << " " << num(c.measure->pi[i]);
    os << "\n";
  }
}

inline json to_json(const MobilityBounds& mb) {
  json j{{"eta0", mb.eta0}, {"eta1", mb.eta1}, {"eta2", mb.eta2}, {"detailed_balance", mb.detailed_balance}};
  j["s0"] = mb.s0 ? json(*mb.s0) : json(nullptr);
  json app = json::array();
  for (auto r : mb.applicable) app.push_back(std::string(to_string(r)));
  j["applicable"] = app;
  return j;
}

inline json to_json(const CertificationReport& r) {
  json j{{"bound", std::string(to_string(r.bound))},
         {"hypotheses_met", r.hypotheses_met},
         {"samples", r.samples},
         {"seed", r.seed},
         {"passed", r.passed()}};
  if (!r.hypotheses_met) j["reason"] = r.reason;
  if (r.hypotheses_met) {
    j["min_scaled_slack"] = r.min_scaled_slack;
    j["tight"] = r.tight;
    j["failures"] = r.failures;
    json ws = json::array();
    for (const auto& w : r.witnesses)
      ws.push_back({{"u", to_std(w.u)}, {"z", to_std(w.z)}, {"lhs", w.lhs}, {"rhs", w.rhs}, {"slack", w.slack},
                    {"eps", w.eps}, {"eta", w.eta}});
    j["witnesses"] = ws;
  }
  return j;
}

inline void write_certification_text(std::ostream& os, const CertificationReport& r) {
  os << "bound: " << to_string(r.bound) << "\n";
  if (!r.hypotheses_met) {
    os << "hypotheses unmet: " << r.reason << "\n";
    return;
  }
  os << "samples: " << r.samples << " (seed " << r.seed << ")\n";
  os << "min scaled slack: " << num(r.min_scaled_slack) << "\n";
  os << "tight samples: " << r.tight << "\n";
  os << "failures: " << r.failures << "\n";
  for (const auto& w : r.witnesses) {
    os << "  witness u=(";
    for (Eigen::Index i = 0; i < w.u.size(); ++i) os << (i ? ", " : "") << num(w.u[i]);
    os << ") z=(";
    for (Eigen::Index i = 0; i < w.z.size(); ++i) os << (i ? ", " : "") << num(w.z[i]);
    os << ") lhs=" << num(w.lhs) << " rhs=" << num(w.rhs) << " slack=" << num(w.slack) << "\n";
  }
  os << (r.passed() ? "PASS" : "FAIL") << "\n";
}

inline void write_validation_text(std::ostream& os, const ValidationReport& v) {
  os << "regime: " << to_string(v.regime) << "\n";
  for (const auto& c : v.checks)
    if (!c.passed) os << "  fail: " << c.reason << "\n";
  os << "candidates: detailed_balance=" << v.detailed_balance << " eta0>0=" << v.eta0_positive
     << " eta1>0=" << v.eta1_positive << " eta2>0=" << v.eta2_positive << "\n";
}

// ---------------------------------------------------------------------------
// CSV

inline void write_diagnostics_csv(std::ostream& os, const DiagnosticsSeries& s, int n) {
  os << kDiagnosticsSchema << "\n";
  os << "step,t,H,production";
  for (int i = 0; i < n; ++i) os << ",mass_" << i + 1;
  os << ",min_u,max_u,newton_iters,residual\n";
  for (const auto& r : s.rows) {
    os << r.step << "," << num(r.t) << "," << num(r.H) << "," << num(r.production);
    for (int i = 0; i < n; ++i) os << "," << num(r.mass[i]);
    os << "," << num(r.min_u) << "," << num(r.max_u) << "," << r.newton_iters << "," << num(r.residual) << "\n";
  }
}

inline void write_trajectory_header(std::ostream& os, int n) {
  os << kTrajectorySchema << "\n";
  os << "t,x";
  for (int i = 0; i < n; ++i) os << ",u_" << i + 1;
  os << "\n";
}

inline void write_trajectory_rows(std::ostream& os, double t, const std::vector<double>& x, const Matrix& u) {
  for (int k = 0; k < u.rows(); ++k) {
    os << num(t) << "," << num(x[static_cast<std::size_t>(k)]);
    for (int i = 0; i < u.cols(); ++i) os << "," << num(u(k, i));
    os << "\n";
  }
}

inline void write_sweep_csv(std::ostream& os, const std::string& knob, const std::vector<SweepRow>& rows) {
  os << kSweepSchema << "\n";
  os << "knob,value,a1,a2,detailed_balance,eta0,eta1,eta2,s0,applicable,production0,min_slack,entropy_increase,steps,"
        "error\n";
  for (const auto& r : rows) {
    std::string app;
    for (auto a : r.bounds.applicable) app += (app.empty() ? "" : ";") + std::string(to_string(a));
    std::string err = r.error;
    for (auto& c : err)
      if (c == ',' || c == '\n') c = ' ';
    os << knob << "," << num(r.value) << "," << r.a1 << "," << r.a2 << "," << r.detailed_balance << ","
       << num(r.bounds.eta0) << "," << num(r.bounds.eta1) << "," << num(r.bounds.eta2) << ","
       << (r.bounds.s0 ? num(*r.bounds.s0) : std::string()) << "," << app << "," << num(r.production0) << ","
       << (std::isfinite(r.min_slack) ? num(r.min_slack) : std::string()) << "," << r.entropy_increase << ","
       << r.steps << "," << err << "\n";
  }
}

// ---------------------------------------------------------------------------

struct Manifest {
  std::string command;
  std::vector<std::string> args;
  std::string config_path;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::string started;
  std::string finished;
  int exit_code = 0;

  json to_json() const {
    return {{"tool", "crossdiff"},
            {"version", CROSSDIFF_VERSION},
            {"command", command},
            {"args", args},
            {"config", {{"path", config_path}, {"fnv1a64", config_hash}}},
            {"seed", seed},
            {"output_dir", output_dir},
            {"started", started},
            {"finished", finished},
            {"exit_code", exit_code},
            {"compiler", __VERSION__}};
  }
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
}

}  // namespace crossdiff::report

#endif  // CROSSDIFF_TOOLS_REPORT_HPP

// crossdiff command-line tool.
//
// Exit codes: 0 success / property holds, 1 property fails (no detailed
// balance, witness found), 2 usage, parse or validation error, 3 hypotheses
// unmet, 4 Newton failure.

#include "crossdiff/config.hpp"
#include "crossdiff/symmetry.hpp"
#include "report.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace crossdiff;
namespace rp = crossdiff::report;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kFails = 1;
constexpr int kUsage = 2;
constexpr int kHypotheses = 3;
constexpr int kNewton = 4;

struct Invocation {
  std::string command;
  std::vector<std::string> args;
  std::string config_path;
  std::string config_text;
  std::string out_flag;
};

fs::path output_dir(const std::string& flag, const std::optional<std::string>& from_config) {
  if (!flag.empty()) return flag;
  if (from_config) return *from_config;
  if (const char* env = std::getenv("CROSSDIFF_OUT"); env && *env) return env;
  return "crossdiff-out";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void finish_manifest(const Invocation& inv, const fs::path& dir, std::uint64_t seed, const std::string& started,
                     int code) {
  rp::Manifest m;
  m.command = inv.command;
  m.args = inv.args;
  m.config_path = inv.config_path;
  m.config_hash = inv.config_text.empty() ? "" : rp::hex(rp::fnv1a(inv.config_text));
  m.seed = seed;
  m.output_dir = dir.string();
  m.started = started;
  m.finished = rp::utc_now();
  m.exit_code = code;
  rp::write_file(dir / "manifest.json", m.to_json().dump(2) + "\n");
}

RunConfig load(Invocation& inv) {
  inv.config_text = read_file(inv.config_path);
  return parse_config(inv.config_text);
}

// ---------------------------------------------------------------------------

int cmd_validate(Invocation& inv) {
  const RunConfig cfg = load(inv);
  const auto v = validate_system(cfg.sys, cfg.dom);
  rp::write_validation_text(std::cout, v);
  std::cout << (v.passed() ? "valid" : "invalid") << "\n";
  return v.passed() ? kOk : kUsage;
}

int cmd_check_balance(Invocation& inv) {
  const std::string started = rp::utc_now();
  const RunConfig cfg = load(inv);
  const auto cert = check_conditions(cfg.sys.a);

  std::ostringstream text;
  rp::write_certificate_text(text, cert);
  std::cout << text.str();

  const fs::path dir = output_dir(inv.out_flag, cfg.run.output);
  fs::create_directories(dir);
  rp::write_file(dir / "balance_certificate.txt",
                 text.str() + "\n# machine-readable\n" + rp::to_json(cert).dump(2) + "\n");
  const int code = cert.detailed_balance() ? kOk : kFails;
  finish_manifest(inv, dir, cfg.run.seed, started, code);
  return code;
}

struct CertifyFlags {
  std::string lemma;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
  std::optional<double> eps;
  std::optional<double> eta;
};

int cmd_certify(Invocation& inv, const CertifyFlags& fl) {
  const std::string started = rp::utc_now();
  const RunConfig cfg = load(inv);
  const std::string name = !fl.lemma.empty() ? fl.lemma : cfg.run.lemma.value_or("general");
  const auto bound = parse_lower_bound(name);
  if (!bound) {
    std::cerr << "unknown lemma '" << name << "'; expected one of:";
    for (auto b : kAllLowerBounds) std::cerr << " " << to_string(b);
    std::cerr << "\n";
    return kUsage;
  }
  CertifyOptions opt;
  opt.samples = fl.samples.value_or(cfg.run.samples);
  opt.seed = fl.seed.value_or(cfg.run.seed);
  opt.jobs = fl.jobs > 0 ? fl.jobs : cfg.run.jobs;
  opt.eps = fl.eps;
  opt.eta = fl.eta;
  const auto rep = certify_lower_bound(cfg.sys, cfg.weights(), *bound, opt);

  std::ostringstream text;
  rp::write_certification_text(text, rep);
  std::cout << text.str();
  const fs::path dir = output_dir(inv.out_flag, cfg.run.output);
  fs::create_directories(dir);
  json j = rp::to_json(rep);
  j["structural_constants"] = rp::to_json(structural_constants(cfg.sys, cfg.weights()));
  rp::write_file(dir / "certification.txt", text.str() + "\n# machine-readable\n" + j.dump(2) + "\n");
  const int code = !rep.hypotheses_met ? kHypotheses : rep.passed() ? kOk : kFails;
  finish_manifest(inv, dir, opt.seed, started, code);
  return code;
}

void dump_failure(const fs::path& dir, const NewtonFailure& f) {
  std::ofstream out(dir / "failure_state.csv", std::ios::binary);
  const GridState& g = f.state();
  out << "# crossdiff-failure v1\n# " << f.what() << "\nx";
  for (int i = 0; i < g.species(); ++i) out << ",u_" << i + 1;
  for (int i = 0; i < g.species(); ++i) out << ",w_" << i + 1;
  out << "\n";
  for (int k = 0; k < g.cells(); ++k) {
    out << rp::num(g.x[static_cast<std::size_t>(k)]);
    for (int i = 0; i < g.species(); ++i) out << "," << rp::num(g.u(k, i));
    for (int i = 0; i < g.species(); ++i) out << "," << rp::num(g.w(k, i));
    out << "\n";
  }
}

int cmd_simulate(Invocation& inv) {
  const std::string started = rp::utc_now();
  const RunConfig cfg = load(inv);
  const auto v = validate_system(cfg.sys, cfg.dom);
  if (!v.passed()) {
    rp::write_validation_text(std::cerr, v);
    return kUsage;
  }
  const Problem pb{cfg.sys, cfg.weights(), cfg.dom};
  const fs::path dir = output_dir(inv.out_flag, cfg.run.output);
  fs::create_directories(dir);

  SimulateOptions opt;
  opt.record_every = std::max(0, cfg.run.record_every);
  int code = kOk;
  try {
    const auto series = simulate(pb, cfg.initial, opt);
    {
      std::ofstream out(dir / "diagnostics.csv", std::ios::binary);
      rp::write_diagnostics_csv(out, series, cfg.sys.n);
    }
    {
      std::ofstream out(dir / "trajectory.csv", std::ios::binary);
      rp::write_trajectory_header(out, cfg.sys.n);
      const auto x = cfg.dom.centers();
      for (const auto& snap : series.trajectory) rp::write_trajectory_rows(out, snap.t, x, snap.u);
    }
    json summary{{"steps", series.steps.size()},
                 {"c_f", std::isfinite(series.c_f) ? json(series.c_f) : json(nullptr)},
                 {"c_s", series.c_s ? json(*series.c_s) : json(nullptr)},
                 {"min_entropy_slack", std::isfinite(series.min_slack()) ? json(series.min_slack()) : json(nullptr)},
                 {"min_density", series.min_density()},
                 {"H_initial", series.rows.front().H},
                 {"H_final", series.rows.back().H}};
    rp::write_file(dir / "summary.json", summary.dump(2) + "\n");
    std::cout << "steps: " << series.steps.size() << "\nH: " << rp::num(series.rows.front().H) << " -> "
              << rp::num(series.rows.back().H) << "\nmin density: " << rp::num(series.min_density())
              << "\nmin entropy-inequality slack: " << rp::num(series.min_slack()) << "\noutput: " << dir.string()
              << "\n";
  } catch (const NewtonFailure& f) {
    dump_failure(dir, f);
    std::cerr << "error: " << f.what() << "\nstate dumped to " << (dir / "failure_state.csv").string() << "\n";
    code = kNewton;
  }
  finish_manifest(inv, dir, cfg.run.seed, started, code);
  return code;
}

struct CounterexampleFlags {
  int variant = 1;
  double eps = 0.0;
  double a10 = 1.0, a20 = 1.0, a30 = 1.0;
  int cells = 0;
  bool simulate = false;
  double tau = 1e-4;
  int steps = 100;
  int sim_cells = 0;
};

int cmd_counterexample(Invocation& inv, const CounterexampleFlags& fl) {
  const std::string started = rp::utc_now();
  if (!(fl.eps > 0.0 && fl.eps < 0.5)) {
    std::cerr << "error: --eps must lie in (0, 0.5)\n";
    return kUsage;
  }
  if (fl.variant != 1 && fl.variant != 2) {
    std::cerr << "error: --variant must be 1 or 2\n";
    return kUsage;
  }
  CounterexampleConfig c;
  c.variant = fl.variant == 1 ? CounterexampleVariant::vanishing_a0 : CounterexampleVariant::positive_a0;
  c.eps_profile = fl.eps;
  c.a10 = fl.a10;
  c.a20 = fl.a20;
  c.a30 = fl.a30;
  const int cells = fl.cells > 0 ? fl.cells : static_cast<int>(std::ceil(64.0 / fl.eps - 1e-9));
  const double production = counterexample_production(c, cells);
  const double bound = counterexample_bound(c);
  const bool met = production >= bound;
  std::cout << "variant: " << fl.variant << "\neps: " << rp::num(fl.eps) << "\ncells: " << cells
            << "\ndH/dt at t=0: " << rp::num(production) << "\nlower bound: " << rp::num(bound)
            << "\nbound met: " << (met ? "yes" : "no") << "\n";

  json j{{"variant", fl.variant}, {"eps", fl.eps}, {"cells", cells}, {"production", production},
         {"bound", bound},        {"bound_met", met}};
  if (c.variant == CounterexampleVariant::positive_a0) j["a0"] = {fl.a10, fl.a20, fl.a30};

  std::optional<DiagnosticsSeries> series;
  if (fl.simulate) {
    Problem pb;
    pb.sys = counterexample_system(c);
    pb.pi = Vector::Ones(3);
    pb.dom.cells = fl.sim_cells > 0 ? fl.sim_cells : std::max(256, static_cast<int>(std::ceil(8.0 / fl.eps - 1e-9)));
    pb.dom.tau = fl.tau;
    pb.dom.T = fl.steps * fl.tau;
    pb.dom.eps = 0.0;
    SimulateOptions opt;
    opt.record_every = 0;
    try {
      series = simulate(pb, counterexample_initial_data(c, pb.dom), opt);
    } catch (const NewtonFailure& f) {
      std::cerr << "error: " << f.what() << "\n";
      return kNewton;
    }
    std::size_t rising = 0;
    while (rising + 1 < series->rows.size() && series->rows[rising + 1].H > series->rows[rising].H) ++rising;
    std::cout << "simulation: " << series->steps.size() << " steps, H " << rp::num(series->rows.front().H) << " -> "
              << rp::num(series->rows.back().H) << ", increasing for the first " << rising << " steps\n";
    j["simulation"] = {{"steps", series->steps.size()},
                       {"tau", fl.tau},
                       {"cells", pb.dom.cells},
                       {"H_initial", series->rows.front().H},
                       {"H_final", series->rows.back().H},
                       {"initial_increasing_steps", rising}};
  }

  if (!inv.out_flag.empty()) {
    const fs::path dir = inv.out_flag;
    fs::create_directories(dir);
    rp::write_file(dir / "counterexample.json", j.dump(2) + "\n");
    if (series) {
      std::ofstream out(dir / "diagnostics.csv", std::ios::binary);
      rp::write_diagnostics_csv(out, *series, 3);
    }
    finish_manifest(inv, dir, 0, started, met ? kOk : kFails);
  }
  return met ? kOk : kFails;
}

std::optional<Knob> parse_knob(const std::string& s) {
  auto index = [](const std::string& t) -> std::optional<int> {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(t, &pos);
      if (pos != t.size() || v < 1) return std::nullopt;
      return v - 1;
    } catch (...) {
      return std::nullopt;
    }
  };
  if (s == "s") return Knob{KnobKind::exponent, 0, 0};
  if (s == "eps_profile") return Knob{KnobKind::eps_profile, 0, 0};
  const auto colon = s.find(':');
  if (colon == std::string::npos) return std::nullopt;
  const std::string kind = s.substr(0, colon), rest = s.substr(colon + 1);
  if (kind == "a0") {
    auto i = index(rest);
    if (!i) return std::nullopt;
    return Knob{KnobKind::diffusion, *i, 0};
  }
  if (kind == "a" || kind == "a_sym") {
    const auto comma = rest.find(',');
    if (comma == std::string::npos) return std::nullopt;
    auto i = index(rest.substr(0, comma)), j = index(rest.substr(comma + 1));
    if (!i || !j) return std::nullopt;
    return Knob{kind == "a" ? KnobKind::cross : KnobKind::symmetric, *i, *j};
  }
  return std::nullopt;
}

int cmd_sweep(Invocation& inv, const std::string& knob_text, const std::vector<double>& values, int steps,
              unsigned jobs) {
  const std::string started = rp::utc_now();
  const RunConfig cfg = load(inv);
  const auto knob = parse_knob(knob_text);
  if (!knob) {
    std::cerr << "error: knob must be one of a:i,j  a_sym:i,j  a0:i  s  eps_profile\n";
    return kUsage;
  }
  const Problem base{cfg.sys, cfg.weights(), cfg.dom};
  SweepOptions opt;
  opt.steps = steps;
  opt.jobs = jobs > 0 ? jobs : cfg.run.jobs;
  const auto rows = regime_sweep(base, cfg.initial, *knob, values, opt);

  std::ostringstream csv;
  rp::write_sweep_csv(csv, knob->name(), rows);
  std::cout << csv.str();
  const fs::path dir = output_dir(inv.out_flag, cfg.run.output);
  fs::create_directories(dir);
  rp::write_file(dir / "sweep.csv", csv.str());
  finish_manifest(inv, dir, cfg.run.seed, started, kOk);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crossdiff: entropy structure and simulation of cross-diffusion population systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CROSSDIFF_VERSION);

  Invocation inv;
  for (int k = 1; k < argc; ++k) inv.args.emplace_back(argv[k]);

  auto* validate = app.add_subcommand("validate", "Check the hypotheses of a configuration");
  validate->add_option("config", inv.config_path, "configuration file")->required();

  auto* balance = app.add_subcommand("check-balance", "Detailed-balance certificate and invariant measure");
  balance->add_option("config", inv.config_path, "configuration file")->required();
  balance->add_option("--out", inv.out_flag, "output directory");

  CertifyFlags cf;
  auto* certify = app.add_subcommand("certify", "Randomized check of a quadratic-form lower bound");
  certify->add_option("config", inv.config_path, "configuration file")->required();
  certify->add_option("--lemma", cf.lemma, "bound identifier");
  certify->add_option("--samples", cf.samples, "number of samples");
  certify->add_option("--seed", cf.seed, "random seed");
  certify->add_option("--jobs", cf.jobs, "worker threads");
  certify->add_option("--eps", cf.eps, "regularization for the regularized bound (sampled if absent)");
  certify->add_option("--eta", cf.eta, "exponent for the regularized bound (sampled if absent)");
  certify->add_option("--out", inv.out_flag, "output directory");

  auto* sim = app.add_subcommand("simulate", "Run the implicit scheme and write CSV output");
  sim->add_option("config", inv.config_path, "configuration file")->required();
  sim->add_option("--out", inv.out_flag, "output directory");

  CounterexampleFlags xf;
  auto* counter = app.add_subcommand("counterexample", "Entropy production of entropy-increasing initial data");
  counter->add_option("--variant", xf.variant, "1: vanishing a_i0, 2: positive a_i0")->default_val(1);
  counter->add_option("--eps", xf.eps, "ramp width in (0, 0.5)")->required();
  counter->add_option("--a10", xf.a10, "variant 2 coefficient")->default_val(1.0);
  counter->add_option("--a20", xf.a20, "variant 2 coefficient")->default_val(1.0);
  counter->add_option("--a30", xf.a30, "variant 2 coefficient")->default_val(1.0);
  counter->add_option("--cells", xf.cells, "grid cells for the production (default 64/eps)");
  counter->add_flag("--simulate", xf.simulate, "also run a short simulation");
  counter->add_option("--tau", xf.tau, "time step of the simulation")->default_val(1e-4);
  counter->add_option("--steps", xf.steps, "number of simulated steps")->default_val(100);
  counter->add_option("--sim-cells", xf.sim_cells, "grid cells of the simulation");
  counter->add_option("--out", inv.out_flag, "output directory");

  std::string knob;
  std::vector<double> values;
  int sweep_steps = 20;
  unsigned sweep_jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "Vary one coefficient and tabulate structure and short runs");
  sweep->add_option("config", inv.config_path, "configuration file")->required();
  sweep->add_option("--knob", knob, "a:i,j | a_sym:i,j | a0:i | s | eps_profile")->required();
  sweep->add_option("--values", values, "knob values")->required()->expected(1, -1);
  sweep->add_option("--steps", sweep_steps, "time steps per run")->default_val(20);
  sweep->add_option("--jobs", sweep_jobs, "worker threads");
  sweep->add_option("--out", inv.out_flag, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*validate) return inv.command = "validate", cmd_validate(inv);
    if (*balance) return inv.command = "check-balance", cmd_check_balance(inv);
    if (*certify) return inv.command = "certify", cmd_certify(inv, cf);
    if (*sim) return inv.command = "simulate", cmd_simulate(inv);
    if (*counter) return inv.command = "counterexample", cmd_counterexample(inv, xf);
    if (*sweep) return inv.command = "sweep", cmd_sweep(inv, knob, values, sweep_steps, sweep_jobs);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

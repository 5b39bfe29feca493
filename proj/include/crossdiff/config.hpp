#ifndef CROSSDIFF_CONFIG_HPP
#define CROSSDIFF_CONFIG_HPP

// Run configuration files. INI-like:
//
//   # comment
//   [system]
//   n = 2
//   a =            # rows on indented continuation lines, or separated by ';'
//     1 0.5
//     0.5 1
//
// Sections: [system], [domain], [initial], [run]. See docs/example.cfg.

#include "crossdiff/balance.hpp"
#include "crossdiff/experiments.hpp"
#include "crossdiff/model.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace crossdiff {

class ConfigError : public Error {
public:
  using Error::Error;
};

struct RunSettings {
  std::uint64_t seed = 1;
  std::size_t samples = 10000;
  std::optional<std::string> lemma;
  std::optional<std::string> output;
  int record_every = 1;
  unsigned jobs = 1;
};

struct RunConfig {
  CoefficientSystem sys;
  std::optional<Vector> pi;  ///< empty: reversible measure if it exists, else ones
  DomainConfig dom;
  InitialData initial;
  std::optional<CounterexampleConfig> counterexample;
  RunSettings run;

  Vector weights() const { return pi ? *pi : entropy_weights(sys.a); }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct Entry {
  std::string value;
  int line = 0;
};

using Section = std::map<std::string, Entry>;

inline std::map<std::string, Section> parse_sections(const std::string& text) {
  std::map<std::string, Section> out;
  std::istringstream in(text);
  std::string raw, section;
  Entry* last = nullptr;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = raw.substr(0, hash);
    const bool indented = !line.empty() && std::isspace(static_cast<unsigned char>(line[0]));
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "system" && section != "domain" && section != "initial" && section != "run")
        throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      if (out.count(section)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate section [" + section + "]");
      out[section];
      last = nullptr;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (indented && last) {
        last->value += (last->value.empty() ? "" : ";") + line;
        continue;
      }
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key outside a section");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    auto& sec = out[section];
    if (sec.count(key)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    sec[key] = {trim(std::string_view(line).substr(eq + 1)), line_no};
    last = &sec[key];
  }
  return out;
}

inline std::string where(const std::string& section, const std::string& key, const Entry& e) {
  return "line " + std::to_string(e.line) + " ([" + section + "] " + key + ")";
}

inline double to_double(const std::string& tok, const std::string& ctx) {
  double v = 0.0;
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) throw ConfigError(ctx + ": '" + tok + "' is not a number");
  return v;
}

inline std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

inline std::vector<double> numbers(const std::string& s, const std::string& ctx) {
  std::vector<double> out;
  for (const auto& t : tokens(s)) out.push_back(to_double(t, ctx));
  return out;
}

/// Section reader that tracks which keys were consumed.
class Reader {
public:
  Reader(std::string name, const Section* sec) : name_(std::move(name)), sec_(sec) {}

  bool has(const std::string& key) const { return sec_ && sec_->count(key); }

  const Entry& entry(const std::string& key) {
    if (!has(key)) throw ConfigError("[" + name_ + "] missing key '" + key + "'");
    used_.insert(key);
    return sec_->at(key);
  }

  std::string text(const std::string& key) { return entry(key).value; }

  double number(const std::string& key) {
    const auto& e = entry(key);
    return to_double(trim(e.value), where(name_, key, e));
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  long integer(const std::string& key) {
    const double v = number(key);
    if (v != std::floor(v)) throw ConfigError(where(name_, key, sec_->at(key)) + ": expected an integer");
    return static_cast<long>(v);
  }

  Vector vector(const std::string& key, int n) {
    const auto& e = entry(key);
    const auto v = numbers(std::string(e.value), where(name_, key, e));
    if (v.size() == 1 && n > 1) return Vector::Constant(n, v[0]);
    if (static_cast<int>(v.size()) != n)
      throw ConfigError(where(name_, key, e) + ": expected " + std::to_string(n) + " values, got " +
                        std::to_string(v.size()));
    return Eigen::Map<const Vector>(v.data(), n);
  }

  Matrix matrix(const std::string& key, int n) {
    const auto& e = entry(key);
    const std::string ctx = where(name_, key, e);
    std::vector<std::vector<double>> rows;
    std::string row;
    std::istringstream in(e.value);
    while (std::getline(in, row, ';')) {
      if (trim(row).empty()) continue;
      rows.push_back(numbers(row, ctx));
    }
    if (static_cast<int>(rows.size()) != n) throw ConfigError(ctx + ": expected " + std::to_string(n) + " rows");
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != n)
        throw ConfigError(ctx + ": row " + std::to_string(i + 1) + " needs " + std::to_string(n) + " entries");
      for (int j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return m;
  }

  void finish() const {
    if (!sec_) return;
    for (const auto& [k, e] : *sec_)
      if (!used_.count(k)) throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + k + "' in [" + name_ + "]");
  }

private:
  std::string name_;
  const Section* sec_;
  std::set<std::string> used_;
};

inline InitialData parse_initial(Reader& r, int n, const DomainConfig& dom, std::optional<CounterexampleConfig>& ce) {
  const std::string type = r.has("type") ? trim(r.text("type")) : "constant";
  InitialData d;
  if (type == "constant") {
    const Vector v = r.has("values") ? r.vector("values", n) : Vector::Ones(n);
    for (int i = 0; i < n; ++i) d.species.emplace_back(v[i]);
  } else if (type == "cosine") {
    const Vector mean = r.has("mean") ? r.vector("mean", n) : Vector::Ones(n);
    const Vector amp = r.has("amplitude") ? r.vector("amplitude", n) : Vector::Zero(n);
    const Vector mode = r.has("mode") ? r.vector("mode", n) : Vector::Ones(n);
    for (int i = 0; i < n; ++i) d.species.emplace_back(CosineProfile{mean[i], amp[i], static_cast<int>(mode[i])});
  } else if (type == "piecewise") {
    for (int i = 0; i < n; ++i) {
      const std::string key = "u" + std::to_string(i + 1);
      const auto& e = r.entry(key);
      PiecewiseLinear p;
      for (const auto& tok : tokens(std::string(e.value))) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos) throw ConfigError(where("initial", key, e) + ": expected x:value pairs");
        p.x.push_back(to_double(tok.substr(0, colon), where("initial", key, e)));
        p.v.push_back(to_double(tok.substr(colon + 1), where("initial", key, e)));
        if (p.x.size() > 1 && !(p.x.back() > p.x[p.x.size() - 2]))
          throw ConfigError(where("initial", key, e) + ": breakpoints must increase");
      }
      if (p.x.empty()) throw ConfigError(where("initial", key, e) + ": no breakpoints");
      d.species.emplace_back(std::move(p));
    }
  } else if (type == "sampled") {
    for (int i = 0; i < n; ++i) {
      const std::string key = "u" + std::to_string(i + 1);
      const auto& e = r.entry(key);
      d.species.emplace_back(SampledProfile{numbers(std::string(e.value), where("initial", key, e))});
    }
  } else if (type == "counterexample") {
    CounterexampleConfig c;
    const long variant = r.has("variant") ? r.integer("variant") : 1;
    if (variant != 1 && variant != 2) throw ConfigError("[initial] variant must be 1 or 2");
    c.variant = variant == 1 ? CounterexampleVariant::vanishing_a0 : CounterexampleVariant::positive_a0;
    c.eps_profile = r.number("eps_profile", c.eps_profile);
    c.a10 = r.number("a10", c.a10);
    c.a20 = r.number("a20", c.a20);
    c.a30 = r.number("a30", c.a30);
    if (n != 3) throw ConfigError("[initial] counterexample data needs n = 3");
    try {
      d = counterexample_initial_data(c, dom);
    } catch (const Error& e) {
      throw ConfigError(std::string("[initial] ") + e.what());
    }
    ce = c;
  } else {
    throw ConfigError("[initial] unknown type '" + type + "'");
  }
  return d;
}

}  // namespace detail

/// Parses a configuration from text. Throws ConfigError with the line number
/// of the offending entry.
inline RunConfig parse_config(const std::string& text) {
  using detail::Reader;
  const auto sections = detail::parse_sections(text);
  auto section = [&](const char* name) -> const detail::Section* {
    auto it = sections.find(name);
    return it == sections.end() ? nullptr : &it->second;
  };

  RunConfig cfg;
  Reader init(std::string("initial"), section("initial"));
  const bool counterexample = init.has("type") && detail::trim(sections.at("initial").at("type").value) == "counterexample";

  Reader sys(std::string("system"), section("system"));
  if (!section("system") && counterexample) {
    // The cyclic coefficients are implied by the counterexample data.
    CounterexampleConfig c;
    Reader peek(std::string("initial"), section("initial"));
    if (peek.has("variant") && peek.integer("variant") == 2) {
      c.variant = CounterexampleVariant::positive_a0;
      c.a10 = peek.number("a10", c.a10);
      c.a20 = peek.number("a20", c.a20);
      c.a30 = peek.number("a30", c.a30);
    }
    cfg.sys = counterexample_system(c);
  } else {
    const long n = sys.integer("n");
    if (n < 1 || n > 64) throw ConfigError("[system] n must lie in 1..64");
    const int nn = static_cast<int>(n);
    cfg.sys = CoefficientSystem::zeros(nn, sys.number("s", 1.0));
    cfg.sys.a = sys.matrix("a", nn);
    if (sys.has("a0")) cfg.sys.a0 = sys.vector("a0", nn);
    if (sys.has("b0")) cfg.sys.b0 = sys.vector("b0", nn);
    if (sys.has("b")) cfg.sys.b = sys.matrix("b", nn);
    cfg.sys.sigma = sys.number("sigma", 1.0);
    if (sys.has("pi")) {
      const std::string v = detail::trim(sys.text("pi"));
      if (v != "auto") {
        Reader again(std::string("system"), section("system"));
        cfg.pi = again.vector("pi", nn);
        if ((cfg.pi->array() <= 0.0).any()) throw ConfigError("[system] pi must be positive");
      }
    }
    sys.finish();
  }

  Reader dom(std::string("domain"), section("domain"));
  cfg.dom.length = dom.number("length", cfg.dom.length);
  if (dom.has("cells")) cfg.dom.cells = static_cast<int>(dom.integer("cells"));
  cfg.dom.T = dom.number("T", cfg.dom.T);
  cfg.dom.tau = dom.number("tau", cfg.dom.tau);
  cfg.dom.eps = dom.number("eps", cfg.dom.eps);
  cfg.dom.eta = dom.number("eta", cfg.dom.eta);
  dom.finish();

  cfg.initial = detail::parse_initial(init, cfg.sys.n, cfg.dom, cfg.counterexample);
  init.finish();

  Reader run(std::string("run"), section("run"));
  if (run.has("seed")) {
    const long seed = run.integer("seed");
    if (seed < 0) throw ConfigError("[run] seed must be nonnegative");
    cfg.run.seed = static_cast<std::uint64_t>(seed);
  }
  if (run.has("samples")) {
    const long v = run.integer("samples");
    if (v <= 0) throw ConfigError("[run] samples must be positive");
    cfg.run.samples = static_cast<std::size_t>(v);
  }
  if (run.has("lemma")) cfg.run.lemma = detail::trim(run.text("lemma"));
  if (run.has("output")) cfg.run.output = detail::trim(run.text("output"));
  if (run.has("record_every")) cfg.run.record_every = static_cast<int>(run.integer("record_every"));
  if (run.has("jobs")) cfg.run.jobs = static_cast<unsigned>(std::max(1L, run.integer("jobs")));
  run.finish();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace crossdiff

#endif  // CROSSDIFF_CONFIG_HPP

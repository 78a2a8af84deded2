#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qarrival/abm.hpp"
#include "qarrival/fluid.hpp"
#include "qarrival/signal.hpp"
#include "qarrival/solver.hpp"

namespace qarrival {

// Malformed scenario text: bad syntax, unknown keys, unreadable values.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { fluid, discrete_br, discrete_fr, abm, compare, signal };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::fluid: return "fluid";
    case Mode::discrete_br: return "discrete_br";
    case Mode::discrete_fr: return "discrete_fr";
    case Mode::abm: return "abm";
    case Mode::compare: return "compare";
    case Mode::signal: return "signal";
  }
  return "?";
}

// Raw scenario: the INI tree plus the line each key came from.
class ScenarioFile {
 public:
  static ScenarioFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open scenario file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
  }

  static ScenarioFile parse(const std::string& text, const std::string& origin = "<scenario>") {
    ScenarioFile f;
    f.origin_ = origin;
    std::istringstream in(text);
    try {
      boost::property_tree::ini_parser::read_ini(in, f.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ParseError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    f.index_lines(text);
    return f;
  }

  // Applies "section.key=value".
  void set_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ParseError("override '" + assignment + "' is not of the form section.key=value");
    const std::string key = assignment.substr(0, eq);
    if (key.find('.') == std::string::npos) throw ParseError("override key '" + key + "' needs a section");
    tree_.put(key, assignment.substr(eq + 1));
    lines_[key] = 0;
  }

  bool has_section(const std::string& s) const { return tree_.get_child_optional(s).has_value(); }
  bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

  std::string where(const std::string& key) const {
    auto it = lines_.find(key);
    if (it == lines_.end()) return origin_;
    return it->second == 0 ? std::string("--override") : origin_ + ":" + std::to_string(it->second);
  }

  std::string get_string(const std::string& key, const std::optional<std::string>& fallback = std::nullopt) const {
    auto v = tree_.get_optional<std::string>(key);
    if (v) return *v;
    if (fallback) return *fallback;
    throw ParseError(origin_ + ": missing required field '" + key + "'");
  }

  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ParseError(origin_ + ": missing required field '" + key + "'");
    }
    try {
      std::size_t used = 0;
      const double d = std::stod(*v, &used);
      if (used == v->size() && std::isfinite(d)) return d;
    } catch (const std::exception&) {
    }
    throw ParseError(where(key) + ": field '" + key + "': cannot read '" + *v + "' as a number");
  }

  long get_long(const std::string& key, std::optional<long> fallback = std::nullopt) const {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ParseError(origin_ + ": missing required field '" + key + "'");
    }
    try {
      std::size_t used = 0;
      const long n = std::stol(*v, &used);
      if (used == v->size()) return n;
    } catch (const std::exception&) {
    }
    throw ParseError(where(key) + ": field '" + key + "': cannot read '" + *v + "' as an integer");
  }

  // Rejects keys that no mode understands, so typos do not pass silently.
  void check_known(const std::map<std::string, std::set<std::string>>& schema) const {
    for (const auto& [section, body] : tree_) {
      if (body.empty()) throw ParseError(where(section) + ": key '" + section + "' must sit inside a section");
      auto known = schema.find(section);
      if (known == schema.end()) throw ParseError(origin_ + ": unknown section [" + section + "]");
      for (const auto& [key, value] : body)
        if (!known->second.count(key))
          throw ParseError(where(section + "." + key) + ": unknown field '" + section + "." + key + "'");
    }
  }

 private:
  void index_lines(const std::string& text) {
    std::istringstream in(text);
    std::string line, section;
    int n = 0;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
      ++n;
      const std::string t = trim(line);
      if (t.empty() || t[0] == ';' || t[0] == '#') continue;
      if (t.front() == '[' && t.back() == ']') {
        section = trim(t.substr(1, t.size() - 2));
        lines_[section] = n;
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(t.substr(0, eq));
      lines_[section.empty() ? key : section + "." + key] = n;
    }
  }

  boost::property_tree::ptree tree_;
  std::map<std::string, int> lines_;
  std::string origin_;
};

inline const std::map<std::string, std::set<std::string>>& scenario_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"run", {"mode", "seed"}},
      {"fluid", {"lambda_a", "lambda_b", "mu_a", "mu_b", "horizon", "case", "grid", "csv_points"}},
      {"game", {"lambda_a", "lambda_b", "tau", "slots", "eps_tail"}},
      {"service", {"family", "chi_a", "chi_b", "cv_a", "cv_b"}},
      {"solver", {"epsilon", "delta", "max_outer", "norm", "mass_floor", "max_bisection", "verify_factor"}},
      {"signal", {"lambda", "p", "q"}},
      {"abm", {"pool", "days", "c1", "c2", "blocks"}},
  };
  return schema;
}

struct FluidBlock {
  FluidParams params;
  std::optional<FluidCase> tag;
  std::size_t grid = 10000;
  std::size_t csv_points = 601;
};

struct Scenario {
  Mode mode = Mode::fluid;
  std::uint64_t seed = 1;
  FluidBlock fluid;
  SlotGame game;  // for discrete_br; tau and slots are shared by all discrete modes
  SignalParams signal;
  SolverConfig solver;
  AbmConfig abm;
};

namespace detail {

inline Mode parse_mode(const std::string& s, const std::string& where) {
  static const std::map<std::string, Mode> modes{{"fluid", Mode::fluid},     {"discrete_br", Mode::discrete_br},
                                                 {"discrete_fr", Mode::discrete_fr}, {"abm", Mode::abm},
                                                 {"compare", Mode::compare}, {"signal", Mode::signal}};
  auto it = modes.find(s);
  if (it == modes.end()) throw ParseError(where + ": unknown mode '" + s + "'");
  return it->second;
}

inline FluidCase parse_case(const std::string& s, const std::string& where) {
  static const std::map<std::string, FluidCase> cases{{"i", FluidCase::i},   {"ii", FluidCase::ii},
                                                      {"iii", FluidCase::iii}, {"iv", FluidCase::iv},
                                                      {"v", FluidCase::v},   {"vi", FluidCase::vi}};
  auto it = cases.find(s);
  if (it == cases.end()) throw ParseError(where + ": unknown fluid case '" + s + "'");
  return it->second;
}

inline PerBelief<ServiceDist> parse_services(const ScenarioFile& f) {
  const std::string family = f.get_string("service.family");
  const double chi_a = f.get_double("service.chi_a");
  const double chi_b = f.get_double("service.chi_b");
  if (family == "deterministic") return {make_deterministic(chi_a), make_deterministic(chi_b)};
  if (family == "geometric") return {make_geometric(chi_a), make_geometric(chi_b)};
  if (family == "mixture") {
    // Default CVs double those of the geometric law with the same mean.
    const double cv_a = f.get_double("service.cv_a", 2.0 * std::sqrt(1.0 - 1.0 / chi_a));
    const double cv_b = f.get_double("service.cv_b", 2.0 * std::sqrt(1.0 - 1.0 / chi_b));
    return {make_geometric_mixture(chi_a, cv_a), make_geometric_mixture(chi_b, cv_b)};
  }
  throw ParseError(f.where("service.family") + ": unknown service family '" + family +
                   "' (deterministic, geometric, mixture)");
}

inline SolverConfig parse_solver(const ScenarioFile& f) {
  SolverConfig c;
  c.epsilon = f.get_double("solver.epsilon", c.epsilon);
  c.delta = f.get_double("solver.delta", c.delta);
  c.max_outer = static_cast<int>(f.get_long("solver.max_outer", c.max_outer));
  c.mass_floor = f.get_double("solver.mass_floor", c.mass_floor);
  c.max_bisection = static_cast<int>(f.get_long("solver.max_bisection", c.max_bisection));
  c.verify_factor = f.get_double("solver.verify_factor", c.verify_factor);
  const std::string norm = f.get_string("solver.norm", std::string("sup"));
  if (norm == "sup") c.norm = Norm::sup;
  else if (norm == "l1") c.norm = Norm::l1;
  else throw ParseError(f.where("solver.norm") + ": unknown norm '" + norm + "' (sup, l1)");
  validate(c);
  return c;
}

}  // namespace detail

// Reads and validates everything the chosen mode needs. Syntax problems raise
// ParseError; out-of-range values raise Error(invalid_parameter).
inline Scenario build_scenario(const ScenarioFile& f) {
  f.check_known(scenario_schema());
  Scenario s;
  s.mode = detail::parse_mode(f.get_string("run.mode"), f.where("run.mode"));
  const long seed = f.get_long("run.seed", 1);
  require(seed >= 0, ErrorKind::invalid_parameter, "seed must be nonnegative");
  s.seed = static_cast<std::uint64_t>(seed);

  if (s.mode == Mode::fluid) {
    FluidParams& p = s.fluid.params;
    p.lambda_a = f.get_double("fluid.lambda_a");
    p.lambda_b = f.get_double("fluid.lambda_b");
    p.mu_a = f.get_double("fluid.mu_a");
    p.mu_b = f.get_double("fluid.mu_b");
    p.horizon = f.get_double("fluid.horizon");
    if (f.has("fluid.case")) s.fluid.tag = detail::parse_case(f.get_string("fluid.case"), f.where("fluid.case"));
    const long grid = f.get_long("fluid.grid", 10000), points = f.get_long("fluid.csv_points", 601);
    require(grid >= 2 && points >= 2, ErrorKind::invalid_parameter, "fluid grid sizes must be >= 2");
    s.fluid.grid = static_cast<std::size_t>(grid);
    s.fluid.csv_points = static_cast<std::size_t>(points);
    thresholds(p);  // validates
    return s;
  }

  const bool needs_signal = s.mode != Mode::discrete_br || !f.has("game.lambda_a");
  if (needs_signal || s.mode == Mode::signal) {
    s.signal.lambda = f.get_double("signal.lambda");
    s.signal.p = f.get_double("signal.p");
    s.signal.q = f.get_double("signal.q");
  }
  const auto x = detail::parse_services(f);
  s.signal.x_a = x.a;
  s.signal.x_b = x.b;
  if (s.mode == Mode::signal) {
    posterior_views(s.signal);  // validates
    return s;
  }

  const long tau = f.get_long("game.tau");
  const long slots = f.get_long("game.slots");
  require(tau >= 1 && slots >= 1, ErrorKind::invalid_parameter, "game.tau and game.slots must be >= 1");
  const double eps_tail = f.get_double("game.eps_tail", default_eps_tail);
  if (s.mode == Mode::discrete_br && f.has("game.lambda_a")) {
    s.game = {f.get_double("game.lambda_a"), f.get_double("game.lambda_b"), static_cast<int>(tau),
              static_cast<int>(slots - 1), x.a, x.b, eps_tail};
  } else {
    s.game = bounded_rational_game(s.signal, static_cast<int>(tau), static_cast<int>(slots - 1), eps_tail);
  }
  validate(s.game);
  s.solver = detail::parse_solver(f);
  if (s.mode == Mode::discrete_fr || s.mode == Mode::compare) posterior_views(s.signal);

  if (s.mode == Mode::abm || s.mode == Mode::compare) {
    AbmConfig& a = s.abm;
    a.pool = static_cast<int>(f.get_long("abm.pool", a.pool));
    a.lambda = s.signal.lambda;
    a.days = f.get_long("abm.days", 0);
    a.p = s.signal.p;
    a.q = s.signal.q;
    a.x_a = x.a;
    a.x_b = x.b;
    a.tau = static_cast<int>(tau);
    a.last_slot = static_cast<int>(slots - 1);
    a.c1 = f.get_double("abm.c1", a.c1);
    a.c2 = f.get_double("abm.c2", a.c2);
    a.diagnostic_blocks = static_cast<int>(f.get_long("abm.blocks", a.diagnostic_blocks));
    a.seed = s.seed;
    validate(a);
  }
  return s;
}

// Files produced by one run, keyed by file name.
struct RunOutput {
  std::map<std::string, std::string> files;
  bool converged = true;
};

namespace detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string join_slots(const std::vector<std::size_t>& s) {
  std::string out;
  for (std::size_t k = 0; k < s.size(); ++k) out += (k ? " " : "") + std::to_string(s[k]);
  return out;
}

// Slot CDF table; the time column is the slot's opening instant.
inline std::string slot_cdf_csv(const PerBelief<std::vector<double>>& p, int tau) {
  std::string out = "time,F_a,F_b\n";
  double Fa = 0.0, Fb = 0.0;
  for (std::size_t t = 0; t < p.a.size(); ++t) {
    Fa += p.a[t];
    Fb += p.b[t];
    out += num(static_cast<double>(t) * tau) + "," + num(Fa) + "," + num(Fb) + "\n";
  }
  return out;
}

class Summary {
 public:
  void add(const std::string& key, const std::string& value) { text_ += key + " = " + value + "\n"; }
  void add(const std::string& key, double value) { add(key, num(value)); }
  void add_int(const std::string& key, long value) { add(key, std::to_string(value)); }
  void add_bool(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }
  void section(const std::string& name) { text_ += "\n[" + name + "]\n"; }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

inline void add_report(Summary& s, const std::string& prefix, const EquilibriumReport& r) {
  s.add(prefix + "wbar_a", r.wbar.a);
  s.add(prefix + "wbar_b", r.wbar.b);
  s.add_bool(prefix + "converged", r.converged);
  s.add_int(prefix + "iterations", r.iterations);
  s.add(prefix + "last_delta", r.last_delta);
  s.add(prefix + "max_support_spread", r.max_support_spread);
  s.add(prefix + "max_offsupport_violation", r.max_offsupport_violation);
  s.add(prefix + "verify_tol", r.tol);
  s.add_bool(prefix + "verified", r.passed);
  s.add_int(prefix + "monotonicity_violations", r.monotonicity_violations);
  s.add(prefix + "support_a", join_slots(r.support.a));
  s.add(prefix + "support_b", join_slots(r.support.b));
}

inline void add_views(Summary& s, const PerBelief<PosteriorView>& views) {
  for (Belief i : both_beliefs) {
    const std::string n = std::string("signal_") + name(i) + "_";
    s.add(n + "nu_a", views[i].nu.a);
    s.add(n + "nu_b", views[i].nu.b);
    s.add(n + "eta_a", views[i].eta.a);
    s.add(n + "eta_b", views[i].eta.b);
    s.add(n + "zeta", views[i].zeta);
    s.add(n + "z_cv", views[i].z.cv);
  }
}

inline void add_abm(Summary& s, const AbmResult& r) {
  s.add_int("days", r.days);
  s.add_int("total_arrivals", r.total_arrivals);
  s.add("wbar_a", r.wbar_pop.a);
  s.add("wbar_b", r.wbar_pop.b);
  s.add_int("agents_seen_a", r.agents_seen.a);
  s.add_int("agents_seen_b", r.agents_seen.b);
  std::string fr;
  for (std::size_t k = 0; k < r.exploration_fraction.size(); ++k)
    fr += (k ? " " : "") + num(r.exploration_fraction[k]);
  s.add("exploration_fraction_by_block", fr);
}

inline PerBelief<std::vector<double>> probs_of(const PerBelief<ArrivalStrategy>& p) {
  return {p.a.probs, p.b.probs};
}

}  // namespace detail

inline RunOutput run_scenario(const Scenario& sc) {
  RunOutput out;
  detail::Summary s;
  s.add("mode", std::string(to_string(sc.mode)));
  s.add_int("seed", static_cast<long>(sc.seed));

  switch (sc.mode) {
    case Mode::fluid: {
      const FluidParams& p = sc.fluid.params;
      const auto xi = thresholds(p);
      const auto cases = classify(p);
      const FluidCase tag = sc.fluid.tag.value_or(cases.front());
      const auto eq = solve_case(p, tag);
      const auto ver = verify_fluid(p, eq, sc.fluid.grid);
      std::string applicable;
      for (std::size_t k = 0; k < cases.size(); ++k) applicable += (k ? " " : "") + std::string(to_string(cases[k]));
      for (int k = 0; k < 4; ++k) s.add("xi_" + std::to_string(k + 1), xi[static_cast<std::size_t>(k)]);
      s.add("applicable_cases", applicable);
      s.add("case", std::string(to_string(tag)));
      s.add_bool("non_unique", eq.non_unique);
      s.add("F_a0", eq.atom.a);
      s.add("F_b0", eq.atom.b);
      s.add("q0", eq.q0);
      s.add("queue_level_a", ver.level.a);
      s.add("queue_level_b", ver.level.b);
      s.add("max_violation", ver.max_violation);
      std::string csv = "time,F_a,F_b\n";
      const std::size_t n = sc.fluid.csv_points;
      for (std::size_t k = 0; k < n; ++k) {
        const double t = k + 1 == n ? p.horizon : p.horizon * static_cast<double>(k) / static_cast<double>(n - 1);
        csv += detail::num(t) + "," + detail::num(cdf(eq, Belief::a, t)) + "," + detail::num(cdf(eq, Belief::b, t)) +
               "\n";
      }
      out.files["cdf.csv"] = csv;
      break;
    }
    case Mode::signal: {
      const auto m = signal_marginals(sc.signal.p, sc.signal.q);
      s.add("marginal_a", m.a);
      s.add("marginal_b", m.b);
      detail::add_views(s, posterior_views(sc.signal));
      break;
    }
    case Mode::discrete_br: {
      const auto r = iterated_best_response(sc.game, sc.solver);
      s.add("lambda_a", sc.game.lambda_a);
      s.add("lambda_b", sc.game.lambda_b);
      detail::add_report(s, "", r.report);
      out.files["cdf.csv"] = detail::slot_cdf_csv(detail::probs_of(r.p), sc.game.tau);
      out.converged = r.report.converged;
      break;
    }
    case Mode::discrete_fr: {
      const auto fr = solve_fr(sc.signal, sc.game.tau, sc.game.last_slot, sc.solver, sc.game.eps_tail);
      detail::add_views(s, fr.views);
      for (Belief i : both_beliefs) {
        s.section(std::string("view_") + name(i));
        detail::add_report(s, "", fr.runs[i].report);
        out.converged = out.converged && fr.runs[i].report.converged;
      }
      out.files["cdf.csv"] = detail::slot_cdf_csv(detail::probs_of(fr.p), sc.game.tau);
      break;
    }
    case Mode::abm: {
      const auto r = run_abm(sc.abm);
      detail::add_abm(s, r);
      out.files["cdf.csv"] = detail::slot_cdf_csv(r.pbar, sc.abm.tau);
      break;
    }
    case Mode::compare: {
      const auto br = iterated_best_response(sc.game, sc.solver);
      const auto fr = solve_fr(sc.signal, sc.game.tau, sc.game.last_slot, sc.solver, sc.game.eps_tail);
      const auto l = run_abm(sc.abm);
      out.converged = br.report.converged && fr.runs.a.report.converged && fr.runs.b.report.converged;

      s.section("BR");
      detail::add_report(s, "", br.report);
      s.section("FR");
      detail::add_views(s, fr.views);
      s.add("wbar_a", fr.runs.a.report.wbar.a);
      s.add("wbar_b", fr.runs.b.report.wbar.b);
      for (Belief i : both_beliefs) {
        s.add_bool(std::string("converged_view_") + name(i), fr.runs[i].report.converged);
        s.add_bool(std::string("verified_view_") + name(i), fr.runs[i].report.passed);
      }
      s.section("L");
      detail::add_abm(s, l);

      std::string csv = "time,BR_F_a,BR_F_b,FR_F_a,FR_F_b,L_F_a,L_F_b,L_wait_a,L_wait_b\n";
      PerBelief<double> Fbr, Ffr, Fl;
      for (std::size_t t = 0; t < sc.game.slots(); ++t) {
        for (Belief i : both_beliefs) {
          Fbr[i] += br.p[i][t];
          Ffr[i] += fr.p[i][t];
          Fl[i] += l.pbar[i][t];
        }
        csv += detail::num(static_cast<double>(t) * sc.game.tau) + "," + detail::num(Fbr.a) + "," +
               detail::num(Fbr.b) + "," + detail::num(Ffr.a) + "," + detail::num(Ffr.b) + "," + detail::num(Fl.a) +
               "," + detail::num(Fl.b) + "," + detail::num(l.slot_wait.a[t]) + "," + detail::num(l.slot_wait.b[t]) +
               "\n";
      }
      out.files["compare.csv"] = csv;
      out.files["cdf.csv"] = detail::slot_cdf_csv(l.pbar, sc.abm.tau);
      break;
    }
  }
  s.add_bool("converged", out.converged);
  out.files["summary.txt"] = s.str();
  return out;
}

// Writes every file to a temporary name first, then renames them into place.
inline void write_outputs(const RunOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged;
  for (const auto& [name, body] : out.files) {
    const auto final_path = dir / name;
    auto tmp = final_path;
    tmp += ".tmp";
    std::ofstream f(tmp, std::ios::binary);
    f << body;
    f.close();
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    staged.emplace_back(tmp, final_path);
  }
  for (const auto& [tmp, final_path] : staged) std::filesystem::rename(tmp, final_path);
}

}  // namespace qarrival

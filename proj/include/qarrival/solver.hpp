#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qarrival/belief.hpp"
#include "qarrival/error.hpp"
#include "qarrival/signal.hpp"
#include "qarrival/workload.hpp"

namespace qarrival {

enum class Norm { sup, l1 };

struct SolverConfig {
  double epsilon = 1e-5;     // tolerated deviation of a best response's mass from 1
  double delta = 1e-5;       // stop when successive iterates are closer than this
  int max_outer = 500;
  Norm norm = Norm::sup;
  double mass_floor = 1e-8;  // slots with less mass are off the support
  int max_bisection = 200;
  double verify_factor = 50.0;

  double verify_tol() const { return verify_factor * epsilon; }
};

inline void validate(const SolverConfig& c) {
  require(c.epsilon > 0.0 && c.epsilon < 0.5, ErrorKind::invalid_parameter, "epsilon must lie in (0, 1/2)");
  require(c.delta > 0.0, ErrorKind::invalid_parameter, "delta must be positive");
  require(c.max_outer >= 1, ErrorKind::invalid_parameter, "max_outer must be >= 1");
  require(c.max_bisection >= 1, ErrorKind::invalid_parameter, "max_bisection must be >= 1");
  require(c.mass_floor >= 0.0 && c.verify_factor > 0.0, ErrorKind::invalid_parameter,
          "mass_floor and verify_factor must be nonnegative");
}

inline double distance(const ArrivalStrategy& p, const ArrivalStrategy& q, Norm norm) {
  double d = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    const double diff = std::abs(p[t] - q[t]);
    d = norm == Norm::sup ? std::max(d, diff) : d + diff;
  }
  return d;
}

namespace detail {

// Workload path under belief i when type i stays away (p_i = 0).
struct ZeroOwnPath {
  std::vector<Pmf> v;
  std::vector<double> ev;
  std::vector<double> w;
};

inline ZeroOwnPath zero_own_path(const SlotGame& g, const ArrivalStrategy& p_minus, Belief i) {
  const Belief j = other(i);
  const ServiceDist& x = g.x(i);
  const std::size_t n = g.slots();
  ZeroOwnPath out;
  out.v.reserve(n);
  out.v.push_back(Pmf::point(0));
  out.ev.assign(n, 0.0);
  out.w.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const double rate = g.lambda(j) * p_minus[t];
    out.w[t] = out.ev[t] + rate * x.mean / 2.0;
    if (t + 1 < n) {
      auto step = advance(out.v[t], rate, x, g.tau, g.slot_budget());
      out.ev[t + 1] = out.ev[t] + step.mean_increment;
      out.v.push_back(std::move(step.next));
    }
  }
  return out;
}

struct TailFill {
  std::vector<double> probs;
  double mass = 0.0;
  bool stopped_early = false;  // mass already exceeded the stop level; later slots not filled
  double wbar = 0.0;
};

// Puts p_theta on slot theta and fills later slots so that type i's wait
// equals w_{i,theta} wherever it arrives.
inline TailFill fill_tail(const SlotGame& g, const ArrivalStrategy& p_minus, Belief i, std::size_t theta,
                          double p_theta, const ZeroOwnPath& prefix, double stop_above) {
  const Belief j = other(i);
  const double li = g.lambda(i), lj = g.lambda(j);
  const ServiceDist& x = g.x(i);
  const std::size_t n = g.slots();

  TailFill out;
  out.probs.assign(n, 0.0);
  out.probs[theta] = p_theta;
  out.mass = p_theta;
  double rate = li * p_theta + lj * p_minus[theta];
  out.wbar = prefix.ev[theta] + rate * x.mean / 2.0;
  if (out.mass > stop_above) {
    out.stopped_early = true;
    return out;
  }

  Pmf state = prefix.v[theta];
  double ev = prefix.ev[theta];
  for (std::size_t t = theta + 1; t < n; ++t) {
    auto step = advance(state, rate, x, g.tau, g.slot_budget());
    state = std::move(step.next);
    ev += step.mean_increment;
    const double p = std::max(0.0, 2.0 / x.mean * (out.wbar - ev) - lj * p_minus[t]) / li;
    out.probs[t] = p;
    out.mass += p;
    if (out.mass > stop_above) {
      out.stopped_early = true;
      return out;
    }
    rate = li * p + lj * p_minus[t];
  }
  return out;
}

}  // namespace detail

struct BisectionResult {
  std::vector<double> probs;
  bool success = false;
  std::size_t next_theta = 0;  // meaningful only when success is false
  int iterations = 0;
  int monotonicity_violations = 0;
  double wbar = 0.0;
};

namespace detail {

inline BisectionResult bisect(const SlotGame& g, const ArrivalStrategy& p_minus, Belief i, std::size_t theta,
                              const SolverConfig& cfg, const ZeroOwnPath& prefix) {
  const double eps = cfg.epsilon;
  BisectionResult out;
  double left = 0.0, right = 1.0;
  const TailFill at_left = fill_tail(g, p_minus, i, theta, left, prefix, 1.0);
  double left_mass = at_left.mass;
  bool left_overshoots = at_left.stopped_early;

  while (true) {
    if (++out.iterations > cfg.max_bisection)
      throw Error(ErrorKind::numeric_failure, "bisection did not converge within " +
                                                  std::to_string(cfg.max_bisection) + " steps at slot " +
                                                  std::to_string(theta));
    const double middle = (left + right) / 2.0;
    TailFill m = fill_tail(g, p_minus, i, theta, middle, prefix, 1.0 + eps);
    if (!m.stopped_early && m.mass < left_mass - 1e-12) ++out.monotonicity_violations;

    if (!m.stopped_early && m.mass > 1.0 - eps) {
      out.probs = std::move(m.probs);
      out.success = true;
      out.wbar = m.wbar;
      return out;
    }
    if (left_overshoots) {
      out.next_theta = theta + 1;
      return out;
    }
    if (!m.stopped_early) {
      left = middle;
      left_mass = m.mass;
      left_overshoots = false;
    } else {
      right = middle;
    }
  }
}

}  // namespace detail

// Bisection on the first support slot theta of type i; all earlier slots carry no type-i mass.
inline BisectionResult bisection_tail(const ArrivalStrategy& p_minus, const SlotGame& g, Belief i, std::size_t theta,
                                      const SolverConfig& cfg = {}) {
  validate(g);
  validate(cfg);
  check_strategy(p_minus, g.slots(), cfg.epsilon);
  require(theta < g.slots(), ErrorKind::invalid_parameter, "theta out of range");
  require(g.lambda(i) > 0.0, ErrorKind::invalid_parameter, "bisection needs a positive own population");
  return detail::bisect(g, p_minus, i, theta, cfg, detail::zero_own_path(g, p_minus, i));
}

struct BestResponse {
  ArrivalStrategy raw;  // mass within epsilon of 1
  ArrivalStrategy p;    // raw rescaled to mass 1
  double raw_mass = 1.0;
  std::size_t theta = 0;
  double wbar = 0.0;
  int bisection_iterations = 0;
  int monotonicity_violations = 0;
};

inline BestResponse best_response(const ArrivalStrategy& p_minus, const SlotGame& g, Belief i,
                                  const SolverConfig& cfg = {}) {
  validate(g);
  validate(cfg);
  check_strategy(p_minus, g.slots(), cfg.epsilon);
  const std::size_t n = g.slots();
  const auto prefix = detail::zero_own_path(g, p_minus, i);

  BestResponse out;
  if (g.lambda(i) == 0.0) {
    const auto best = std::min_element(prefix.w.begin(), prefix.w.end());
    out.theta = static_cast<std::size_t>(best - prefix.w.begin());
    out.raw.probs.assign(n, 0.0);
    out.raw.probs[out.theta] = 1.0;
    out.p = out.raw;
    out.wbar = *best;
    return out;
  }

  double w_min = std::numeric_limits<double>::infinity();
  for (std::size_t theta = 0; theta < n; ++theta) {
    if (prefix.w[theta] < w_min) {
      auto b = detail::bisect(g, p_minus, i, theta, cfg, prefix);
      out.bisection_iterations += b.iterations;
      out.monotonicity_violations += b.monotonicity_violations;
      if (b.success) {
        out.raw.probs = std::move(b.probs);
        out.raw_mass = out.raw.mass();
        out.p = out.raw.normalized();
        out.theta = theta;
        out.wbar = b.wbar;
        return out;
      }
    }
    w_min = std::min(w_min, prefix.w[theta]);
  }
  throw Error(ErrorKind::infeasible_response,
              std::string("no start slot yields a best response for type ") + name(i));
}

struct EquilibriumReport {
  PerBelief<double> wbar;
  PerBelief<std::vector<std::size_t>> support;
  double max_support_spread = 0.0;
  double max_offsupport_violation = 0.0;
  double tol = 0.0;
  bool passed = false;
  int iterations = 0;
  bool converged = false;
  double last_delta = 0.0;
  int monotonicity_violations = 0;
};

// Equilibrium conditions: type i's expected wait is flat on its support and
// no lower anywhere else.
inline EquilibriumReport verify_equilibrium(const SlotGame& g, const ArrivalStrategy& pa, const ArrivalStrategy& pb,
                                            double tol, double mass_floor = 1e-8, double simplex_tol = 1e-5) {
  EquilibriumReport r;
  r.tol = tol;
  const PerBelief<const ArrivalStrategy*> own{&pa, &pb};
  for (Belief i : both_beliefs) {
    const auto prof = workload_profile(g, pa, pb, i, simplex_tol);
    const ArrivalStrategy& p = *own[i];
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, weighted = 0.0, mass = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) {
      if (p[t] <= mass_floor) continue;
      r.support[i].push_back(t);
      lo = std::min(lo, prof.w[t]);
      hi = std::max(hi, prof.w[t]);
      weighted += p[t] * prof.w[t];
      mass += p[t];
    }
    require(mass > 0.0, ErrorKind::invalid_strategy, std::string("strategy ") + name(i) + " has empty support");
    r.wbar[i] = weighted / mass;
    r.max_support_spread = std::max(r.max_support_spread, hi - lo);
    for (std::size_t t = 0; t < p.size(); ++t)
      if (p[t] <= mass_floor) r.max_offsupport_violation = std::max(r.max_offsupport_violation, r.wbar[i] - prof.w[t]);
  }
  r.passed = r.max_support_spread <= tol && r.max_offsupport_violation <= tol;
  return r;
}

struct IteratedResult {
  PerBelief<ArrivalStrategy> p;    // normalized
  PerBelief<ArrivalStrategy> raw;  // as produced by the last best responses
  EquilibriumReport report;
};

// Alternating best responses from everybody-at-the-opening until successive
// iterates are within delta.
inline IteratedResult iterated_best_response(const SlotGame& g, const SolverConfig& cfg = {}) {
  validate(g);
  validate(cfg);
  PerBelief<ArrivalStrategy> cur{ArrivalStrategy::at_opening(g.slots()), ArrivalStrategy::at_opening(g.slots())};
  int iterations = 0, violations = 0;
  bool converged = false;
  double delta = 0.0;
  while (iterations < cfg.max_outer) {
    ++iterations;
    auto ra = best_response(cur.b, g, Belief::a, cfg);
    auto rb = best_response(ra.raw, g, Belief::b, cfg);
    violations += ra.monotonicity_violations + rb.monotonicity_violations;
    delta = std::max(distance(ra.raw, cur.a, cfg.norm), distance(rb.raw, cur.b, cfg.norm));
    cur = {std::move(ra.raw), std::move(rb.raw)};
    if (delta < cfg.delta) {
      converged = true;
      break;
    }
  }
  IteratedResult out;
  out.raw = cur;
  out.p = {cur.a.normalized(), cur.b.normalized()};
  out.report = verify_equilibrium(g, cur.a, cur.b, cfg.verify_tol(), cfg.mass_floor, cfg.epsilon);
  out.report.iterations = iterations;
  out.report.converged = converged;
  out.report.last_delta = delta;
  out.report.monotonicity_violations = violations;
  return out;
}

// Game as seen by customers who take their signal at face value.
inline SlotGame bounded_rational_game(const SignalParams& s, int tau, int last_slot,
                                      double eps_tail = default_eps_tail) {
  const auto marginal = signal_marginals(s.p, s.q);
  return {s.lambda * marginal.a, s.lambda * marginal.b, tau, last_slot, s.x_a, s.x_b, eps_tail};
}

// Game as seen by a posterior-updating customer holding signal i.
inline SlotGame fully_rational_game(const PerBelief<PosteriorView>& views, Belief i, int tau, int last_slot,
                                    double eps_tail = default_eps_tail) {
  return {views[i].nu.a, views[i].nu.b, tau, last_slot, views.a.z, views.b.z, eps_tail};
}

struct FrResult {
  PerBelief<ArrivalStrategy> p;  // p[i] is the signal-i customers' strategy from their own game
  PerBelief<IteratedResult> runs;
  PerBelief<PosteriorView> views;
};

inline FrResult solve_fr(const SignalParams& s, int tau, int last_slot, const SolverConfig& cfg = {},
                         double eps_tail = default_eps_tail) {
  FrResult out;
  out.views = posterior_views(s);
  for (Belief i : both_beliefs) {
    out.runs[i] = iterated_best_response(fully_rational_game(out.views, i, tau, last_slot, eps_tail), cfg);
    out.p[i] = out.runs[i].p[i];
  }
  return out;
}

}  // namespace qarrival

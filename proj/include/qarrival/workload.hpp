#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qarrival/belief.hpp"
#include "qarrival/dists.hpp"
#include "qarrival/error.hpp"

namespace qarrival {

// Discrete-time game: slots 0..last_slot of length tau, Poisson populations
// lambda_a / lambda_b, and the service law each belief assumes.
struct SlotGame {
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  int tau = 1;
  int last_slot = 0;
  ServiceDist x_a;
  ServiceDist x_b;
  double eps_tail = default_eps_tail;

  std::size_t slots() const { return static_cast<std::size_t>(last_slot) + 1; }
  double lambda(Belief i) const { return i == Belief::a ? lambda_a : lambda_b; }
  const ServiceDist& x(Belief i) const { return i == Belief::a ? x_a : x_b; }

  // Truncation allowance for one slot; the whole horizon stays within eps_tail.
  double slot_budget() const { return eps_tail / (2.0 * static_cast<double>(slots())); }
};

inline void validate(const SlotGame& g) {
  require(g.lambda_a >= 0.0 && g.lambda_b >= 0.0 && std::isfinite(g.lambda_a) && std::isfinite(g.lambda_b),
          ErrorKind::invalid_parameter, "population means must be finite and nonnegative");
  require(g.tau >= 1, ErrorKind::invalid_parameter, "slot length tau must be >= 1");
  require(g.last_slot >= 0, ErrorKind::invalid_parameter, "last slot index must be >= 0");
  require(g.eps_tail > 0.0 && g.eps_tail < 1e-3, ErrorKind::invalid_parameter, "eps_tail must lie in (0, 1e-3)");
  for (Belief i : both_beliefs)
    require(!g.x(i).pmf.mass.empty() && g.x(i).pmf[0] == 0.0, ErrorKind::invalid_parameter,
            std::string("service law ") + name(i) + " must live on {1, 2, ...}");
}

struct ArrivalStrategy {
  std::vector<double> probs;

  static ArrivalStrategy at_opening(std::size_t slots) {
    ArrivalStrategy s;
    s.probs.assign(slots, 0.0);
    s.probs[0] = 1.0;
    return s;
  }

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t t) const { return probs[t]; }

  double mass() const {
    double m = 0.0;
    for (double p : probs) m += p;
    return m;
  }

  ArrivalStrategy normalized() const {
    const double m = mass();
    require(m > 0.0, ErrorKind::invalid_strategy, "cannot normalize a strategy with zero mass");
    ArrivalStrategy s = *this;
    for (double& p : s.probs) p /= m;
    return s;
  }

  std::vector<double> cdf() const {
    std::vector<double> F(probs.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < probs.size(); ++t) F[t] = acc += probs[t];
    return F;
  }
};

inline void check_strategy(const ArrivalStrategy& p, std::size_t slots, double simplex_tol) {
  require(p.size() == slots, ErrorKind::invalid_strategy,
          "strategy has " + std::to_string(p.size()) + " slots, game has " + std::to_string(slots));
  for (double v : p.probs)
    require(v >= 0.0 && std::isfinite(v), ErrorKind::invalid_strategy, "strategy entries must be nonnegative");
  require(std::abs(p.mass() - 1.0) <= simplex_tol, ErrorKind::invalid_strategy,
          "strategy mass " + std::to_string(p.mass()) + " is off the simplex");
}

// Law of (V + H - tau)^+ for independent V ~ v and H ~ h.
inline Pmf step_pmf(const Pmf& v, const Pmf& h, int tau) {
  require(tau >= 1, ErrorKind::invalid_parameter, "slot length tau must be >= 1");
  const Pmf g = convolve(v, h);
  const auto shift = static_cast<std::size_t>(tau);
  Pmf out;
  out.tail_bound = g.tail_bound;
  if (g.size() <= shift) {
    out.mass.assign(1, g.total());
    return out;
  }
  out.mass.assign(g.mass.begin() + static_cast<std::ptrdiff_t>(shift), g.mass.end());
  double idle = 0.0;
  for (std::size_t l = 0; l <= shift; ++l) idle += g.mass[l];
  out.mass[0] = idle;
  return out;
}

namespace detail {

struct SlotAdvance {
  Pmf next;               // law of V just before the following slot
  double mean_increment;  // E[V_next] - E[V]
};

// One slot of the workload recursion with Poisson(rate) arrivals of law x.
// The mean increment follows the telescoping identity
//   rate * chi - tau + sum_{k < tau} (tau - k) (v * h)(k).
inline SlotAdvance advance(const Pmf& v, double rate, const ServiceDist& x, int tau, double budget) {
  SlotAdvance out;
  const auto shift = static_cast<std::size_t>(tau);
  double idle_credit = 0.0;
  if (rate == 0.0) {
    for (std::size_t k = 0; k < shift && k < v.size(); ++k) idle_credit += static_cast<double>(shift - k) * v.mass[k];
    out.next = step_pmf(v, Pmf::point(0), tau);
  } else {
    const Pmf h = compound_poisson(rate, x, budget);
    const Pmf g = convolve(v, h);
    for (std::size_t k = 0; k < shift && k < g.size(); ++k) idle_credit += static_cast<double>(shift - k) * g.mass[k];
    out.next.tail_bound = g.tail_bound;
    if (g.size() <= shift) {
      out.next.mass.assign(1, g.total());
    } else {
      out.next.mass.assign(g.mass.begin() + static_cast<std::ptrdiff_t>(shift), g.mass.end());
      double idle = 0.0;
      for (std::size_t l = 0; l <= shift; ++l) idle += g.mass[l];
      out.next.mass[0] = idle;
    }
  }
  trim_tail(out.next, budget);
  out.mean_increment = rate * x.mean - static_cast<double>(tau) + idle_credit;
  return out;
}

inline double slot_rate(const SlotGame& g, const ArrivalStrategy& pa, const ArrivalStrategy& pb, std::size_t t) {
  return g.lambda_a * pa[t] + g.lambda_b * pb[t];
}

}  // namespace detail

struct WorkloadProfile {
  std::vector<Pmf> v;                   // law of V just before slot t
  std::vector<double> ev;               // E[V], telescoped
  std::vector<double> ev_direct;        // E[V], mean of the stored pmf
  std::vector<double> w;                // expected wait of a tagged arrival in slot t
};

// Workload seen under belief i's service law for the profile (p_a, p_b).
inline WorkloadProfile workload_profile(const SlotGame& g, const ArrivalStrategy& pa, const ArrivalStrategy& pb,
                                        Belief i, double simplex_tol = 1e-5) {
  validate(g);
  const std::size_t n = g.slots();
  check_strategy(pa, n, simplex_tol);
  check_strategy(pb, n, simplex_tol);

  const ServiceDist& x = g.x(i);
  const double budget = g.slot_budget();
  WorkloadProfile out;
  out.v.reserve(n);
  out.v.push_back(Pmf::point(0));
  out.ev.assign(n, 0.0);
  out.ev_direct.assign(n, 0.0);
  out.w.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const double rate = detail::slot_rate(g, pa, pb, t);
    out.ev_direct[t] = mean(out.v[t]);
    const double K = static_cast<double>(out.v[t].size());
    const double allowed = 10.0 * std::max(K, 1.0) * g.eps_tail + 1e-12 * (1.0 + out.ev[t]);
    require(std::abs(out.ev[t] - out.ev_direct[t]) <= allowed, ErrorKind::numeric_failure,
            "telescoped and direct mean workload disagree at slot " + std::to_string(t));
    out.w[t] = out.ev[t] + rate * x.mean / 2.0;
    if (t + 1 < n) {
      auto step = detail::advance(out.v[t], rate, x, g.tau, budget);
      out.ev[t + 1] = out.ev[t] + step.mean_increment;
      out.v.push_back(std::move(step.next));
    }
  }
  return out;
}

inline double expected_wait(const SlotGame& g, const ArrivalStrategy& pa, const ArrivalStrategy& pb, Belief i,
                            std::size_t t, double simplex_tol = 1e-5) {
  require(t < g.slots(), ErrorKind::invalid_parameter, "slot index out of range");
  return workload_profile(g, pa, pb, i, simplex_tol).w[t];
}

}  // namespace qarrival

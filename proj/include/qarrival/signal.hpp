#pragma once

#include <string>
#include <utility>

#include "qarrival/belief.hpp"
#include "qarrival/dists.hpp"
#include "qarrival/error.hpp"

namespace qarrival {

// Random server mode (a w.p. p) observed through a signal that is correct
// w.p. q; lambda is the mean total population.
struct SignalParams {
  double lambda = 0.0;
  double p = 0.5;
  double q = 1.0;
  ServiceDist x_a;
  ServiceDist x_b;
};

// What a customer holding signal i infers about the day.
struct PosteriorView {
  Belief signal = Belief::a;
  PerBelief<double> nu;   // mean population with signal a / b seen by this customer
  PerBelief<double> eta;  // posterior probability of server mode a / b
  ServiceDist z;          // posterior service-time mixture
  double zeta = 0.0;      // posterior mean service time
};

namespace detail {

inline void check_signal_ranges(double p, double q) {
  require(p >= 0.0 && p <= 1.0, ErrorKind::invalid_parameter,
          "mode probability p must lie in [0,1], got " + std::to_string(p));
  require(q > 0.5 && q <= 1.0, ErrorKind::invalid_parameter,
          "signal quality q must lie in (1/2,1], got " + std::to_string(q));
}

// Joint probability that two distinct customers observe signals (j, i).
inline double joint_signal(double p, double q, Belief j, Belief i) {
  auto hit = [q](Belief observed, Belief mode) { return observed == mode ? q : 1.0 - q; };
  return p * hit(j, Belief::a) * hit(i, Belief::a) + (1.0 - p) * hit(j, Belief::b) * hit(i, Belief::b);
}

}  // namespace detail

inline PerBelief<double> signal_marginals(double p, double q) {
  detail::check_signal_ranges(p, q);
  return {p * q + (1.0 - p) * (1.0 - q), p * (1.0 - q) + (1.0 - p) * q};
}

// Mean population sizes nu_i = lambda * (alpha_{ai}, alpha_{bi}) seen by a
// customer holding signal i.
inline PerBelief<PerBelief<double>> conditional_split(double p, double q, double lambda) {
  require(lambda >= 0.0, ErrorKind::invalid_parameter, "population mean must be nonnegative");
  const auto marginal = signal_marginals(p, q);
  PerBelief<PerBelief<double>> nu;
  for (Belief i : both_beliefs) {
    require(marginal[i] > 0.0, ErrorKind::invalid_parameter,
            std::string("signal ") + name(i) + " has probability zero");
    for (Belief j : both_beliefs) nu[i][j] = lambda * detail::joint_signal(p, q, j, i) / marginal[i];
  }
  return nu;
}

inline PerBelief<PosteriorView> posterior_views(const SignalParams& s) {
  require(s.x_a.mean > s.x_b.mean, ErrorKind::invalid_parameter,
          "mode a must be the slow mode (chi_a > chi_b)");
  const auto marginal = signal_marginals(s.p, s.q);
  const auto nu = conditional_split(s.p, s.q, s.lambda);
  PerBelief<PosteriorView> views;
  for (Belief i : both_beliefs) {
    PosteriorView& v = views[i];
    v.signal = i;
    v.nu = nu[i];
    const double hit_a = i == Belief::a ? s.q : 1.0 - s.q;
    v.eta.a = s.p * hit_a / marginal[i];
    v.eta.b = (1.0 - s.p) * (1.0 - hit_a) / marginal[i];
    v.z = mix(v.eta.a, s.x_a, v.eta.b, s.x_b);
    v.zeta = v.eta.a * s.x_a.mean + v.eta.b * s.x_b.mean;
  }
  return views;
}

}  // namespace qarrival

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qarrival/belief.hpp"
#include "qarrival/error.hpp"

namespace qarrival {

// Two fluid populations of volumes lambda_a, lambda_b that believe the queue
// drains at mu_a < mu_b; arrivals are admitted on [0, horizon].
struct FluidParams {
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  double mu_a = 0.0;
  double mu_b = 0.0;
  double horizon = 0.0;
};

enum class FluidCase { i, ii, iii, iv, v, vi };

inline const char* to_string(FluidCase c) {
  switch (c) {
    case FluidCase::i: return "i";
    case FluidCase::ii: return "ii";
    case FluidCase::iii: return "iii";
    case FluidCase::iv: return "iv";
    case FluidCase::v: return "v";
    case FluidCase::vi: return "vi";
  }
  return "?";
}

// Uniform arrival density on [start, end].
struct Segment {
  double start = 0.0;
  double end = 0.0;
  double density = 0.0;

  double mass() const { return (end - start) * density; }
};

struct FluidEquilibrium {
  FluidCase tag = FluidCase::i;
  double horizon = 0.0;
  PerBelief<double> atom;  // F_i(0)
  PerBelief<std::vector<Segment>> segments;
  double q0 = 0.0;          // queue ahead of a customer arriving at the opening
  bool non_unique = false;  // (v) and (vi) admit a continuum of equilibria
};

namespace detail {

inline void check_fluid(const FluidParams& f) {
  require(f.lambda_a > 0.0 && f.lambda_b > 0.0 && f.mu_a > 0.0 && f.mu_b > 0.0 && f.horizon > 0.0,
          ErrorKind::invalid_parameter, "fluid parameters must be positive");
  require(f.mu_a < f.mu_b, ErrorKind::invalid_parameter, "fluid model needs mu_a < mu_b");
}

inline bool case_v_applies(const FluidParams& f) {
  const double la = f.lambda_a, lb = f.lambda_b, ma = f.mu_a, mb = f.mu_b, T = f.horizon;
  const double upper = (la + lb) / ma;
  double lower = (la + 2.0 * lb) / (2.0 * ma);
  if (mb < 2.0 * ma) lower = std::max(lower, upper - lb * mb / (ma * (2.0 * ma - mb)));
  return lower < T && T < upper;
}

}  // namespace detail

// Interval endpoints (xi_1, ..., xi_4) separating cases (i)-(iv).
inline std::array<double, 4> thresholds(const FluidParams& f) {
  detail::check_fluid(f);
  return {(f.lambda_a + f.lambda_b) / (2.0 * f.mu_b), (f.lambda_a + 2.0 * f.lambda_b) / (2.0 * f.mu_b),
          f.lambda_a / (2.0 * f.mu_a) + f.lambda_b / f.mu_b, f.lambda_a / f.mu_a + f.lambda_b / f.mu_b};
}

// All equilibrium cases whose conditions contain the horizon. Cases (i)-(iii)
// are exclusive; (iv), (v) and (vi) may overlap.
inline std::vector<FluidCase> classify(const FluidParams& f) {
  const auto xi = thresholds(f);
  const double T = f.horizon;
  std::vector<FluidCase> out;
  if (T <= xi[0]) out.push_back(FluidCase::i);
  if (xi[0] < T && T < xi[1]) out.push_back(FluidCase::ii);
  if (xi[1] <= T && T <= xi[2]) out.push_back(FluidCase::iii);
  if (xi[2] < T && T <= xi[3]) out.push_back(FluidCase::iv);
  if (detail::case_v_applies(f)) out.push_back(FluidCase::v);
  if (T > xi[3]) out.push_back(FluidCase::vi);
  return out;
}

inline FluidEquilibrium solve_case(const FluidParams& f, FluidCase tag) {
  const auto cases = classify(f);
  require(std::find(cases.begin(), cases.end(), tag) != cases.end(), ErrorKind::invalid_case,
          std::string("case (") + to_string(tag) + ") does not apply at horizon " + std::to_string(f.horizon));

  const double la = f.lambda_a, lb = f.lambda_b, ma = f.mu_a, mb = f.mu_b, T = f.horizon;
  FluidEquilibrium eq;
  eq.tag = tag;
  eq.horizon = T;
  switch (tag) {
    case FluidCase::i:
      eq.atom = {1.0, 1.0};
      break;
    case FluidCase::ii: {
      const double fb0 = 2.0 * mb / lb * ((la + 2.0 * lb) / (2.0 * mb) - T);
      const double tb = (la + lb * fb0) / (2.0 * mb);
      eq.atom = {1.0, fb0};
      eq.segments.b.push_back({tb, T, mb / lb});
      break;
    }
    case FluidCase::iii:
      eq.atom = {1.0, 0.0};
      eq.segments.b.push_back({T - lb / mb, T, mb / lb});
      break;
    case FluidCase::iv: {
      const double fa0 = 2.0 * ma / la * (la / ma + lb / mb - T);
      const double ta = la * fa0 / (2.0 * ma);
      const double tb = T - lb / mb;
      eq.atom = {fa0, 0.0};
      eq.segments.a.push_back({ta, tb, ma / la});
      eq.segments.b.push_back({tb, T, mb / lb});
      break;
    }
    case FluidCase::v: {
      const double fa0 = 2.0 * (la + lb - ma * T) / la;
      const double ta = (la * fa0 + 2.0 * lb) / (2.0 * ma);
      const double tb = la * fa0 / mb;
      const double k = ma * mb / ((la + lb - ma * T) * (mb - 2.0 * ma) + lb * mb);
      eq.atom = {fa0, 0.0};
      eq.segments.a.push_back({ta, T, ma / la});
      eq.segments.b.push_back({tb, ta, k});
      eq.non_unique = true;
      break;
    }
    case FluidCase::vi: {
      // Canonical representative: a drains first, b right after, queue never forms.
      const double ta_end = la / ma;
      eq.atom = {0.0, 0.0};
      eq.segments.a.push_back({0.0, ta_end, ma / la});
      eq.segments.b.push_back({ta_end, ta_end + lb / mb, mb / lb});
      eq.non_unique = true;
      break;
    }
  }
  eq.q0 = (la * eq.atom.a + lb * eq.atom.b) / 2.0;
  return eq;
}

inline double cdf(const FluidEquilibrium& eq, Belief i, double t) {
  require(t >= 0.0 && t <= eq.horizon, ErrorKind::invalid_parameter,
          "cdf evaluated outside [0, horizon] at t = " + std::to_string(t));
  double F = eq.atom[i];
  for (const Segment& s : eq.segments[i]) {
    if (t > s.start) F += (std::min(t, s.end) - s.start) * s.density;
  }
  return std::min(F, 1.0);
}

struct FluidVerification {
  double max_violation = 0.0;
  PerBelief<double> level;  // queue length on each type's support
};

namespace detail {

// Queue length q_i(t) seen by a type-i customer under the reflected fluid
// dynamics; q(0) counts half of the opening atom.
class FluidQueue {
 public:
  FluidQueue(const FluidParams& f, const FluidEquilibrium& eq, double mu) : f_(f), eq_(eq), mu_(mu) {
    for (Belief i : both_beliefs)
      for (const Segment& s : eq.segments[i]) {
        breaks_.push_back(s.start);
        breaks_.push_back(s.end);
      }
    std::sort(breaks_.begin(), breaks_.end());
  }

  double operator()(double t) const {
    if (t <= 0.0) return eq_.q0;
    double lowest = std::min(0.0, net_input(0.0));
    for (double b : breaks_) {
      if (b >= t) break;
      if (b > 0.0) lowest = std::min(lowest, net_input(b));
    }
    lowest = std::min(lowest, net_input(t));
    return net_input(t) - lowest;
  }

 private:
  // Cumulative input minus potential output at t (right after the opening atom for t = 0).
  double net_input(double t) const {
    return f_.lambda_a * mass_by(Belief::a, t) + f_.lambda_b * mass_by(Belief::b, t) - mu_ * t;
  }

  double mass_by(Belief i, double t) const {
    double F = eq_.atom[i];
    for (const Segment& s : eq_.segments[i])
      if (t > s.start) F += (std::min(t, s.end) - s.start) * s.density;
    return F;
  }

  const FluidParams& f_;
  const FluidEquilibrium& eq_;
  double mu_;
  std::vector<double> breaks_;
};

inline bool in_support(const FluidEquilibrium& eq, Belief i, double t) {
  constexpr double edge = 1e-12;
  if (t == 0.0 && eq.atom[i] > 0.0) return true;
  for (const Segment& s : eq.segments[i])
    if (s.density > 0.0 && t >= s.start - edge && t <= s.end + edge) return true;
  return false;
}

}  // namespace detail

// Checks the equilibrium conditions on a uniform grid of [0, horizon]: each
// type's queue is constant on its support and no smaller anywhere else. In the
// (partially) degenerate cases the relevant queues must also be empty.
inline FluidVerification verify_fluid(const FluidParams& f, const FluidEquilibrium& eq, std::size_t grid_n) {
  require(grid_n >= 2, ErrorKind::invalid_parameter, "verification grid needs at least two points");
  FluidVerification out;
  const double T = eq.horizon;
  for (Belief i : both_beliefs) {
    const detail::FluidQueue queue(f, eq, i == Belief::a ? f.mu_a : f.mu_b);
    double level = std::numeric_limits<double>::quiet_NaN();
    if (eq.atom[i] > 0.0) {
      level = queue(0.0);
    } else {
      for (const Segment& s : eq.segments[i])
        if (s.density > 0.0 && (std::isnan(level) || s.start < T)) {
          level = queue(s.start);
          break;
        }
    }
    if (std::isnan(level)) level = 0.0;
    out.level[i] = level;

    double worst = 0.0;
    const bool must_be_empty = eq.tag == FluidCase::vi || (eq.tag == FluidCase::v && i == Belief::b);
    if (must_be_empty) worst = std::abs(level);
    for (std::size_t k = 0; k < grid_n; ++k) {
      const double t = T * static_cast<double>(k) / static_cast<double>(grid_n - 1);
      const double q = queue(t);
      worst = std::max(worst, detail::in_support(eq, i, t) ? std::abs(q - level) : level - q);
    }
    out.max_violation = std::max(out.max_violation, worst);
  }
  return out;
}

}  // namespace qarrival

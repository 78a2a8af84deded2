#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "qarrival/error.hpp"

namespace qarrival {

inline constexpr double default_eps_tail = 1e-12;

// Truncation target for service-time laws. Kept far below default_eps_tail
// because compound sums multiply it by the Poisson rate.
inline constexpr double service_eps_tail = 1e-18;

// Probability mass function on {0, 1, ..., size()-1}. Mass beyond the stored
// support was discarded and is bounded above by tail_bound.
struct Pmf {
  std::vector<double> mass;
  double tail_bound = 0.0;

  static Pmf point(std::size_t k) {
    Pmf p;
    p.mass.assign(k + 1, 0.0);
    p.mass[k] = 1.0;
    return p;
  }

  std::size_t size() const { return mass.size(); }

  double operator[](std::size_t k) const { return k < mass.size() ? mass[k] : 0.0; }

  double total() const {
    // Neumaier summation; the tail invariants are checked at the 1e-14 level.
    double sum = 0.0, comp = 0.0;
    for (double m : mass) {
      double t = sum + m;
      comp += std::abs(sum) >= std::abs(m) ? (sum - t) + m : (m - t) + sum;
      sum = t;
    }
    return sum + comp;
  }
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double cv = 0.0;
};

inline double mean(const Pmf& f) {
  double m = 0.0;
  for (std::size_t k = 1; k < f.mass.size(); ++k) m += static_cast<double>(k) * f.mass[k];
  return m;
}

inline Moments moments(const Pmf& f) {
  Moments out;
  out.mean = mean(f);
  for (std::size_t k = 0; k < f.mass.size(); ++k) {
    double d = static_cast<double>(k) - out.mean;
    out.variance += d * d * f.mass[k];
  }
  out.cv = out.mean > 0.0 ? std::sqrt(out.variance) / out.mean : 0.0;
  return out;
}

// Drops trailing entries whose cumulative mass does not exceed budget and adds
// the dropped mass to tail_bound. Exact trailing zeros are always dropped.
inline void trim_tail(Pmf& f, double budget) {
  double dropped = 0.0;
  std::size_t n = f.mass.size();
  while (n > 1) {
    double m = f.mass[n - 1];
    if (dropped + m > budget && m != 0.0) break;
    dropped += m;
    --n;
  }
  f.mass.resize(n);
  f.tail_bound += dropped;
}

inline Pmf convolve(const Pmf& f, const Pmf& g, double trim_budget = 0.0) {
  Pmf out;
  if (f.mass.empty() || g.mass.empty()) return out;
  out.mass.assign(f.size() + g.size() - 1, 0.0);
  const double* gp = g.mass.data();
  const std::size_t gn = g.size();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double fi = f.mass[i];
    if (fi == 0.0) continue;
    double* op = out.mass.data() + i;
    for (std::size_t j = 0; j < gn; ++j) op[j] += fi * gp[j];
  }
  out.tail_bound = f.tail_bound + g.tail_bound;
  trim_tail(out, trim_budget);
  return out;
}

enum class ServiceKind { deterministic, geometric, geometric_mixture, mixture };

inline const char* to_string(ServiceKind k) {
  switch (k) {
    case ServiceKind::deterministic: return "deterministic";
    case ServiceKind::geometric: return "geometric";
    case ServiceKind::geometric_mixture: return "geometric_mixture";
    case ServiceKind::mixture: return "mixture";
  }
  return "unknown";
}

// Integer-valued service-time law with support in {1, 2, ...}.
struct ServiceDist {
  ServiceKind kind = ServiceKind::deterministic;
  double mean = 1.0;
  double cv = 0.0;
  Pmf pmf;
};

inline ServiceDist make_deterministic(double chi) {
  require(chi >= 1.0 && std::floor(chi) == chi, ErrorKind::invalid_parameter,
          "deterministic service needs an integer mean >= 1, got " + std::to_string(chi));
  ServiceDist d;
  d.kind = ServiceKind::deterministic;
  d.mean = chi;
  d.cv = 0.0;
  d.pmf = Pmf::point(static_cast<std::size_t>(chi));
  return d;
}

namespace detail {

// Geometric law on {1,2,...} with mean chi, truncated where the exact tail
// (1 - 1/chi)^K drops below eps.
inline Pmf geometric_pmf(double chi, double eps) {
  const double success = 1.0 / chi;
  const double fail = 1.0 - success;
  Pmf p;
  if (fail <= 0.0) return Pmf::point(1);
  const auto K = static_cast<std::size_t>(std::ceil(std::log(eps) / std::log(fail)));
  p.mass.assign(K + 1, 0.0);
  double term = success;
  for (std::size_t k = 1; k <= K; ++k) {
    p.mass[k] = term;
    term *= fail;
  }
  p.tail_bound = std::pow(fail, static_cast<double>(K));
  return p;
}

inline Pmf mix_pmfs(double wf, const Pmf& f, double wg, const Pmf& g) {
  Pmf out;
  out.mass.assign(std::max(f.size(), g.size()), 0.0);
  for (std::size_t k = 0; k < f.size(); ++k) out.mass[k] += wf * f.mass[k];
  for (std::size_t k = 0; k < g.size(); ++k) out.mass[k] += wg * g.mass[k];
  out.tail_bound = wf * f.tail_bound + wg * g.tail_bound;
  return out;
}

}  // namespace detail

inline ServiceDist make_geometric(double chi) {
  require(chi >= 1.0, ErrorKind::invalid_parameter,
          "geometric service needs mean >= 1, got " + std::to_string(chi));
  ServiceDist d;
  d.kind = ServiceKind::geometric;
  d.mean = chi;
  d.cv = std::sqrt(1.0 - 1.0 / chi);
  d.pmf = detail::geometric_pmf(chi, service_eps_tail);
  return d;
}

// Two-component geometric mixture beta * Geom(1) + (1 - beta) * Geom(m2) with
// the first component fixed at mean 1 (a point mass at 1). Matching the mean
// and second moment gives E X^2 = 1 + (chi - 1)(2 m2 + 1), which is solved for
// m2 directly; beta then follows from the mean.
inline ServiceDist make_geometric_mixture(double chi, double cv_target) {
  require(chi > 1.0, ErrorKind::invalid_parameter, "geometric mixture needs mean > 1");
  const double cv_geo = std::sqrt(1.0 - 1.0 / chi);
  constexpr double boundary_tol = 1e-4;
  require(cv_target >= cv_geo - boundary_tol, ErrorKind::invalid_parameter,
          "cv target " + std::to_string(cv_target) + " below geometric cv " + std::to_string(cv_geo));
  if (cv_target <= cv_geo + boundary_tol) return make_geometric(chi);

  const double second_moment = chi * chi * (1.0 + cv_target * cv_target);
  const double m2 = ((second_moment - 1.0) / (chi - 1.0) - 1.0) / 2.0;
  const double beta = 1.0 - (chi - 1.0) / (m2 - 1.0);
  require(beta > 0.0 && beta < 1.0 && m2 > chi, ErrorKind::numeric_failure,
          "geometric mixture parameters out of range");

  ServiceDist d;
  d.kind = ServiceKind::geometric_mixture;
  d.mean = chi;
  d.cv = cv_target;
  d.pmf = detail::mix_pmfs(beta, Pmf::point(1), 1.0 - beta,
                           detail::geometric_pmf(m2, service_eps_tail));
  return d;
}

// Finite mixture w_f * f + w_g * g of two service laws (weights sum to one).
inline ServiceDist mix(double wf, const ServiceDist& f, double wg, const ServiceDist& g) {
  require(wf >= 0.0 && wg >= 0.0 && std::abs(wf + wg - 1.0) < 1e-12, ErrorKind::invalid_parameter,
          "mixture weights must be a probability vector");
  if (wg == 0.0) return f;
  if (wf == 0.0) return g;
  ServiceDist d;
  d.kind = ServiceKind::mixture;
  d.pmf = detail::mix_pmfs(wf, f.pmf, wg, g.pmf);
  d.mean = wf * f.mean + wg * g.mean;
  const double second = wf * f.mean * f.mean * (1.0 + f.cv * f.cv) +
                        wg * g.mean * g.mean * (1.0 + g.cv * g.cv);
  d.cv = std::sqrt(std::max(0.0, second / (d.mean * d.mean) - 1.0));
  return d;
}

namespace detail {

// Panjer recursion for the compound Poisson law with jump pmf x (x(0) = 0).
// Terms are computed past the requested cut until a whole block of them is
// negligible, so the discarded tail is a sum of computed
// terms plus a geometric extrapolation of what lies beyond.
inline Pmf panjer(double rate, const Pmf& x, double budget) {
  const std::size_t kx = x.size();
  std::vector<double> jx(kx, 0.0);
  double jump_mean = 0.0;
  for (std::size_t j = 1; j < kx; ++j) {
    jx[j] = static_cast<double>(j) * x.mass[j];
    jump_mean += jx[j];
  }
  const std::size_t block = std::clamp<std::size_t>(kx - 1, 1, 64);
  const double centre = rate * jump_mean;

  std::vector<double> h;
  h.reserve(static_cast<std::size_t>(2.0 * centre) + 4 * block + 16);
  h.push_back(std::exp(-rate));
  double last_block = h[0], prev_block = 0.0;
  double extrapolated = 0.0;
  for (std::size_t k = 1;; ++k) {
    const std::size_t jmax = std::min(k, kx - 1);
    double acc = 0.0;
    for (std::size_t j = 1; j <= jmax; ++j) acc += jx[j] * h[k - j];
    h.push_back(rate / static_cast<double>(k) * acc);

    if (k % block == 0) {
      prev_block = last_block;
      last_block = 0.0;
      for (std::size_t i = k - block + 1; i <= k; ++i) last_block += h[i];
      const bool past_centre = static_cast<double>(k) > 2.0 * centre + static_cast<double>(block);
      if (past_centre && last_block < budget * 1e-6 && last_block < prev_block) {
        const double r = prev_block > 0.0 ? last_block / prev_block : 0.0;
        extrapolated = r < 1.0 ? last_block * r / (1.0 - r) : last_block;
        break;
      }
    }
  }

  // Cut at the shortest support whose discarded mass stays inside the budget.
  const double missing_jumps = rate * x.tail_bound;
  double tail = extrapolated;
  std::size_t n = h.size();
  while (n > 1 && tail + h[n - 1] + missing_jumps <= budget) {
    tail += h[n - 1];
    --n;
  }
  Pmf out;
  out.mass.assign(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(n));
  out.tail_bound = tail + missing_jumps;
  return out;
}

}  // namespace detail

// Law of X_1 + ... + X_N with N ~ Poisson(rate) and X_k iid from x.
inline Pmf compound_poisson(double rate, const ServiceDist& x, double budget = default_eps_tail) {
  require(rate >= 0.0 && std::isfinite(rate), ErrorKind::invalid_parameter,
          "compound Poisson rate must be a finite nonnegative number");
  if (rate == 0.0) return Pmf::point(0);
  // exp(-rate) underflows for very large rates; split into two halves.
  constexpr double max_direct_rate = 500.0;
  if (rate > max_direct_rate) {
    Pmf half = compound_poisson(rate / 2.0, x, budget / 4.0);
    return convolve(half, half, budget / 2.0);
  }
  return detail::panjer(rate, x.pmf, budget);
}

}  // namespace qarrival

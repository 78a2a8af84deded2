#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qarrival/abm.hpp"
#include "qarrival/error.hpp"
#include "qarrival/fluid.hpp"
#include "qarrival/workload.hpp"

namespace qarrival {

// Arrival-time law on [0, horizon]: point masses plus uniform densities.
struct ArrivalLaw {
  std::vector<std::pair<double, double>> atoms;  // (time, probability)
  std::vector<Segment> segments;

  static ArrivalLaw from_strategy(const ArrivalStrategy& p, double tau) {
    ArrivalLaw law;
    const double m = p.mass();
    for (std::size_t t = 0; t < p.size(); ++t)
      if (p[t] > 0.0) law.atoms.emplace_back(static_cast<double>(t) * tau, p[t] / m);
    return law;
  }

  static ArrivalLaw from_fluid(const FluidEquilibrium& eq, Belief i) {
    ArrivalLaw law;
    if (eq.atom[i] > 0.0) law.atoms.emplace_back(0.0, eq.atom[i]);
    law.segments = eq.segments[i];
    return law;
  }

  double sample(Rng& rng) const {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (const auto& [time, prob] : atoms) {
      if (u < prob) return time;
      u -= prob;
    }
    for (const Segment& s : segments) {
      const double m = s.mass();
      if (u < m) return s.start + u / s.density;
      u -= m;
    }
    // Rounding left a sliver of probability; put it at the end of the support.
    if (!segments.empty()) return segments.back().end;
    return atoms.empty() ? 0.0 : atoms.back().first;
  }
};

enum class JobCoupling { shared, independent };

struct DominanceReport {
  bool dominance_holds = true;
  int paths_checked = 0;
  int violating_paths = 0;
  double max_violation = 0.0;  // largest V_b - V_a seen
  double max_abs_gap = 0.0;    // largest |V_a - V_b| seen
};

// Simulates single-server FCFS paths under both service beliefs with a common
// arrival stream. With shared coupling the job sizes are -log(U_k) / mu_i for
// one uniform U_k per job. V and Q are compared right after every arrival and
// departure epoch.
inline DominanceReport coupled_dominance(double lambda_a, double lambda_b, const ArrivalLaw& law_a,
                                         const ArrivalLaw& law_b, double mu_a, double mu_b, int n_paths, Rng& rng,
                                         JobCoupling coupling = JobCoupling::shared) {
  require(lambda_a >= 0.0 && lambda_b >= 0.0, ErrorKind::invalid_parameter, "population means must be nonnegative");
  require(mu_a > 0.0 && mu_a <= mu_b, ErrorKind::invalid_parameter, "need 0 < mu_a <= mu_b");
  require(n_paths >= 1, ErrorKind::invalid_parameter, "need at least one path");

  struct Job {
    double arrival;
    double order;
    double xa, xb;
  };
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto open_uniform = [&] {
    double u;
    do u = unif(rng);
    while (u <= 0.0);
    return u;
  };

  DominanceReport rep;
  std::vector<Job> jobs;
  std::vector<double> epochs, dep_a, dep_b;
  for (int path = 0; path < n_paths; ++path) {
    jobs.clear();
    const PerBelief<int> counts{std::poisson_distribution<int>(lambda_a)(rng),
                                std::poisson_distribution<int>(lambda_b)(rng)};
    for (Belief i : both_beliefs) {
      const ArrivalLaw& law = i == Belief::a ? law_a : law_b;
      for (int k = 0; k < counts[i]; ++k) {
        Job j;
        j.arrival = law.sample(rng);
        j.order = unif(rng);
        const double u = open_uniform();
        j.xb = -std::log(u) / mu_b;
        j.xa = coupling == JobCoupling::shared ? -std::log(u) / mu_a : -std::log(open_uniform()) / mu_a;
        jobs.push_back(j);
      }
    }
    std::sort(jobs.begin(), jobs.end(), [](const Job& x, const Job& y) {
      return x.arrival != y.arrival ? x.arrival < y.arrival : x.order < y.order;
    });

    const std::size_t n = jobs.size();
    dep_a.assign(n, 0.0);
    dep_b.assign(n, 0.0);
    epochs.clear();
    double last_a = 0.0, last_b = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      last_a = dep_a[k] = std::max(jobs[k].arrival, last_a) + jobs[k].xa;
      last_b = dep_b[k] = std::max(jobs[k].arrival, last_b) + jobs[k].xb;
      epochs.push_back(jobs[k].arrival);
      epochs.push_back(dep_a[k]);
      epochs.push_back(dep_b[k]);
    }
    std::sort(epochs.begin(), epochs.end());
    epochs.erase(std::unique(epochs.begin(), epochs.end()), epochs.end());

    // Departure times are nondecreasing under FCFS, so counts come from binary search.
    bool violated = false;
    std::size_t arrived = 0;
    for (double t : epochs) {
      while (arrived < n && jobs[arrived].arrival <= t) ++arrived;
      const auto gone_a = static_cast<std::size_t>(std::upper_bound(dep_a.begin(), dep_a.end(), t) - dep_a.begin());
      const auto gone_b = static_cast<std::size_t>(std::upper_bound(dep_b.begin(), dep_b.end(), t) - dep_b.begin());
      const double va = arrived > 0 ? std::max(0.0, dep_a[arrived - 1] - t) : 0.0;
      const double vb = arrived > 0 ? std::max(0.0, dep_b[arrived - 1] - t) : 0.0;
      const long qa = static_cast<long>(arrived) - static_cast<long>(std::min(gone_a, arrived));
      const long qb = static_cast<long>(arrived) - static_cast<long>(std::min(gone_b, arrived));
      rep.max_abs_gap = std::max(rep.max_abs_gap, std::abs(va - vb));
      if (va < vb || qa < qb) {
        violated = true;
        rep.max_violation = std::max(rep.max_violation, vb - va);
      }
    }
    ++rep.paths_checked;
    if (violated) ++rep.violating_paths;
  }
  rep.dominance_holds = rep.violating_paths == 0;
  return rep;
}

}  // namespace qarrival

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "qarrival/belief.hpp"
#include "qarrival/dists.hpp"
#include "qarrival/error.hpp"

namespace qarrival {

using Rng = std::mt19937_64;

struct AbmConfig {
  int pool = 200;        // N
  double lambda = 10.0;  // mean daily arrivals
  long days = 0;         // 0 picks 1000 * N / lambda, about 1000 visits per agent
  double p = 0.5;
  double q = 0.9;
  ServiceDist x_a;
  ServiceDist x_b;
  int tau = 3;
  int last_slot = 19;
  double c1 = 1.0;
  double c2 = 0.005;
  std::uint64_t seed = 1;
  int diagnostic_blocks = 10;

  long effective_days() const {
    return days > 0 ? days : static_cast<long>(std::llround(1000.0 * pool / lambda));
  }
  std::size_t slots() const { return static_cast<std::size_t>(last_slot) + 1; }
};

inline void validate(const AbmConfig& c) {
  require(c.pool >= 1, ErrorKind::invalid_parameter, "pool size must be >= 1");
  require(c.lambda > 0.0 && c.lambda <= c.pool, ErrorKind::invalid_parameter, "need 0 < lambda <= pool size");
  require(c.p >= 0.0 && c.p <= 1.0, ErrorKind::invalid_parameter, "p must lie in [0,1]");
  require(c.q > 0.5 && c.q <= 1.0, ErrorKind::invalid_parameter, "q must lie in (1/2,1]");
  require(c.c1 > 0.0 && c.c2 > 0.0, ErrorKind::invalid_parameter, "sigmoid parameters must be positive");
  require(c.tau >= 1 && c.last_slot >= 0, ErrorKind::invalid_parameter, "invalid slot structure");
  require(c.days >= 0 && c.diagnostic_blocks >= 1, ErrorKind::invalid_parameter, "invalid day count");
  require(!c.x_a.pmf.mass.empty() && !c.x_b.pmf.mass.empty(), ErrorKind::invalid_parameter,
          "service laws are missing");
}

// Probability of exploiting past experience after x earlier visits.
inline double theta(long x, double c1, double c2) {
  if (x <= 0) return 0.0;
  return std::exp(c1 / -std::expm1(c2 * static_cast<double>(x)));
}

struct AgentState {
  PerBelief<std::vector<double>> wbar;  // running mean wait per slot
  PerBelief<std::vector<long>> visits;
  PerBelief<long> arrivals;

  explicit AgentState(std::size_t slots = 0) {
    for (Belief i : both_beliefs) {
      wbar[i].assign(slots, 0.0);
      visits[i].assign(slots, 0);
    }
  }
};

struct SlotChoice {
  std::size_t slot = 0;
  bool explored = false;
};

inline SlotChoice choose_slot(const AgentState& agent, Belief i, double c1, double c2, Rng& rng) {
  const auto& w = agent.wbar[i];
  const std::size_t n = w.size();
  std::bernoulli_distribution exploit(theta(agent.arrivals[i], c1, c2));
  if (!exploit(rng)) return {std::uniform_int_distribution<std::size_t>(0, n - 1)(rng), true};
  const double best = *std::min_element(w.begin(), w.end());
  std::vector<std::size_t> ties;
  for (std::size_t t = 0; t < n; ++t)
    if (w[t] == best) ties.push_back(t);
  return {ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng)], false};
}

// Draws from a service pmf; the truncated tail is ignored.
class ServiceSampler {
 public:
  explicit ServiceSampler(const ServiceDist& x) : dist_(x.pmf.mass.begin(), x.pmf.mass.end()) {}
  long operator()(Rng& rng) { return static_cast<long>(dist_(rng)); }

 private:
  std::discrete_distribution<long> dist_;
};

// FCFS day: arrivals[k] = (agent id, slot). Same-slot arrivals are served in
// uniformly random order; each waits for the work ahead of it, and tau units
// of work drain per slot. Returns waits aligned with arrivals.
inline std::vector<double> simulate_day(const std::vector<std::pair<int, std::size_t>>& arrivals, std::size_t slots,
                                        ServiceSampler& service, int tau, Rng& rng) {
  std::vector<std::vector<std::size_t>> by_slot(slots);
  for (std::size_t k = 0; k < arrivals.size(); ++k) {
    require(arrivals[k].second < slots, ErrorKind::invalid_parameter, "arrival slot out of range");
    by_slot[arrivals[k].second].push_back(k);
  }
  std::vector<double> waits(arrivals.size(), 0.0);
  long work = 0;
  for (auto& cohort : by_slot) {
    std::shuffle(cohort.begin(), cohort.end(), rng);
    for (std::size_t k : cohort) {
      waits[k] = static_cast<double>(work);
      work += service(rng);
    }
    work = std::max(0L, work - tau);
  }
  return waits;
}

struct AbmResult {
  PerBelief<std::vector<double>> pbar;       // averaged arrival distribution
  PerBelief<double> wbar_pop = {0.0, 0.0};   // averaged mean wait
  PerBelief<std::vector<double>> slot_wait;  // arrival-weighted mean of the agents' running averages
  PerBelief<int> agents_seen = {0, 0};
  std::vector<double> exploration_fraction;  // per block of days
  long days = 0;
  long total_arrivals = 0;
  std::vector<long> daily_arrivals;
};

inline AbmResult run_abm(const AbmConfig& cfg) {
  validate(cfg);
  const std::size_t n = cfg.slots();
  const long days = cfg.effective_days();
  Rng rng(cfg.seed);
  std::vector<AgentState> agents(static_cast<std::size_t>(cfg.pool), AgentState(n));
  PerBelief<ServiceSampler> service{ServiceSampler(cfg.x_a), ServiceSampler(cfg.x_b)};
  std::bernoulli_distribution mode_is_a(cfg.p), joins(cfg.lambda / cfg.pool), signal_correct(cfg.q);

  AbmResult out;
  out.days = days;
  out.daily_arrivals.reserve(static_cast<std::size_t>(days));
  const int blocks = static_cast<int>(std::min<long>(cfg.diagnostic_blocks, days));
  std::vector<long> explored(static_cast<std::size_t>(blocks), 0), decided(static_cast<std::size_t>(blocks), 0);

  std::vector<std::pair<int, std::size_t>> arrivals;
  std::vector<Belief> beliefs;
  for (long d = 0; d < days; ++d) {
    const auto block = static_cast<std::size_t>(d * blocks / days);
    const Belief mode = mode_is_a(rng) ? Belief::a : Belief::b;
    arrivals.clear();
    beliefs.clear();
    for (int k = 0; k < cfg.pool; ++k) {
      if (!joins(rng)) continue;
      const Belief y = signal_correct(rng) ? mode : other(mode);
      const SlotChoice c = choose_slot(agents[static_cast<std::size_t>(k)], y, cfg.c1, cfg.c2, rng);
      arrivals.emplace_back(k, c.slot);
      beliefs.push_back(y);
      explored[block] += c.explored ? 1 : 0;
      ++decided[block];
    }
    const auto waits = simulate_day(arrivals, n, service[mode], cfg.tau, rng);
    for (std::size_t m = 0; m < arrivals.size(); ++m) {
      AgentState& a = agents[static_cast<std::size_t>(arrivals[m].first)];
      const Belief y = beliefs[m];
      const std::size_t t = arrivals[m].second;
      const long seen = ++a.visits[y][t];
      a.wbar[y][t] += (waits[m] - a.wbar[y][t]) / static_cast<double>(seen);
      ++a.arrivals[y];
    }
    out.daily_arrivals.push_back(static_cast<long>(arrivals.size()));
    out.total_arrivals += static_cast<long>(arrivals.size());
  }

  for (std::size_t b = 0; b < explored.size(); ++b)
    out.exploration_fraction.push_back(decided[b] > 0 ? static_cast<double>(explored[b]) / decided[b] : 0.0);

  // Agents that never held a belief have no arrival distribution for it and
  // are left out of that belief's average.
  for (Belief i : both_beliefs) {
    std::vector<double> psum(n, 0.0), weighted_wait(n, 0.0);
    int seen = 0;
    for (const AgentState& a : agents) {
      if (a.arrivals[i] == 0) continue;
      ++seen;
      for (std::size_t t = 0; t < n; ++t) {
        const double pk = static_cast<double>(a.visits[i][t]) / static_cast<double>(a.arrivals[i]);
        psum[t] += pk;
        weighted_wait[t] += pk * a.wbar[i][t];
      }
    }
    out.agents_seen[i] = seen;
    out.pbar[i].assign(n, 0.0);
    out.slot_wait[i].assign(n, 0.0);
    if (seen == 0) continue;
    double wsum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      out.pbar[i][t] = psum[t] / seen;
      out.slot_wait[i][t] = psum[t] > 0.0 ? weighted_wait[t] / psum[t] : 0.0;
      wsum += weighted_wait[t];
    }
    out.wbar_pop[i] = wsum / seen;
  }
  return out;
}

}  // namespace qarrival

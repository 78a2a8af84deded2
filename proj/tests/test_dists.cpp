#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qarrival/dists.hpp"

using namespace qarrival;

TEST(Dists, DeterministicIsPointMass) {
  const auto d = make_deterministic(4);
  EXPECT_EQ(d.pmf.size(), 5u);
  EXPECT_DOUBLE_EQ(d.pmf[4], 1.0);
  EXPECT_DOUBLE_EQ(d.cv, 0.0);
  EXPECT_THROW(make_deterministic(2.5), Error);
  EXPECT_THROW(make_deterministic(0), Error);
}

TEST(Dists, GeometricMomentsAndTail) {
  for (double chi : {1.0, 2.0, 4.0, 7.5}) {
    const auto g = make_geometric(chi);
    const auto m = moments(g.pmf);
    EXPECT_NEAR(m.mean, chi, 1e-12) << chi;
    EXPECT_NEAR(m.cv, std::sqrt(1.0 - 1.0 / chi), 1e-9) << chi;
    EXPECT_LE(g.pmf.tail_bound, service_eps_tail);
    EXPECT_NEAR(g.pmf.total() + g.pmf.tail_bound, 1.0, 1e-15);
  }
  EXPECT_THROW(make_geometric(0.5), Error);
}

TEST(Dists, GeometricCvValuesUsedInNumerics) {
  EXPECT_NEAR(make_geometric(4).cv, 0.8660254037844386, 1e-15);
  EXPECT_NEAR(make_geometric(2).cv, 0.7071067811865476, 1e-15);
}

TEST(Dists, GeometricMixtureMatchesTargets) {
  for (auto [chi, cv] : {std::pair{4.0, 1.7320508075688772}, std::pair{2.0, 1.4142135623730951},
                         std::pair{3.0, 1.0}, std::pair{10.0, 3.0}}) {
    const auto d = make_geometric_mixture(chi, cv);
    const auto m = moments(d.pmf);
    EXPECT_EQ(d.kind, ServiceKind::geometric_mixture);
    EXPECT_NEAR(m.mean, chi, 1e-9) << chi;
    EXPECT_NEAR(m.cv, cv, 1e-7) << chi;
    EXPECT_DOUBLE_EQ(d.pmf[0], 0.0);
  }
}

TEST(Dists, GeometricMixtureBoundary) {
  // At the geometric cv the mixture collapses onto the geometric law.
  const auto at = make_geometric_mixture(4.0, 0.866);
  EXPECT_EQ(at.kind, ServiceKind::geometric);
  EXPECT_THROW(make_geometric_mixture(4.0, 0.5), Error);
}

TEST(Dists, MixtureWeightsAndCv) {
  const auto a = make_deterministic(4), b = make_deterministic(2);
  const auto z = mix(0.9, a, 0.1, b);
  EXPECT_NEAR(z.mean, 3.8, 1e-15);
  EXPECT_NEAR(z.cv, moments(z.pmf).cv, 1e-12);
  EXPECT_THROW(mix(0.5, a, 0.6, b), Error);
  EXPECT_EQ(mix(1.0, a, 0.0, b).kind, ServiceKind::deterministic);
}

TEST(Dists, TrimTailKeepsBudget) {
  Pmf f;
  f.mass = {0.5, 0.3, 0.2 - 3e-13, 2e-13, 1e-13};
  trim_tail(f, 5e-13);
  EXPECT_EQ(f.size(), 3u);
  EXPECT_NEAR(f.tail_bound, 3e-13, 1e-25);
}

TEST(Dists, ConvolutionOfPointMasses) {
  const auto c = convolve(Pmf::point(2), Pmf::point(3));
  EXPECT_EQ(c.size(), 6u);
  EXPECT_DOUBLE_EQ(c[5], 1.0);
}

TEST(Dists, CompoundPoissonZeroRate) {
  const auto h = compound_poisson(0.0, make_geometric(3));
  EXPECT_EQ(h.size(), 1u);
  EXPECT_DOUBLE_EQ(h[0], 1.0);
}

TEST(Dists, CompoundPoissonMatchesPolyaAeppli) {
  for (double rate : {0.3, 2.0, 7.0, 40.0}) {
    for (double chi : {1.5, 4.0}) {
      const auto h = compound_poisson(rate, make_geometric(chi));
      double worst = 0.0;
      for (int k = 0; k < static_cast<int>(h.size()); ++k)
        worst = std::max(worst, std::abs(h[static_cast<std::size_t>(k)] - oracle::polya_aeppli(rate, 1.0 / chi, k)));
      EXPECT_LT(worst, 1e-12) << rate << " " << chi;
      EXPECT_LE(h.tail_bound, default_eps_tail);
      EXPECT_NEAR(h.total() + h.tail_bound, 1.0, 2e-12);
    }
  }
}

TEST(Dists, CompoundPoissonMatchesBruteForce) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> rate_dist(0.05, 5.0);
  for (int c = 0; c < 10; ++c) {
    const double rate = rate_dist(rng);
    const ServiceDist x = c % 3 == 0 ? make_deterministic(1 + c % 4)
                                     : (c % 3 == 1 ? make_geometric(1.5 + c) : make_geometric_mixture(3.0, 1.2));
    const auto h = compound_poisson(rate, x);
    const auto ref = oracle::compound_poisson_brute(rate, x.pmf.mass, h.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) worst = std::max(worst, std::abs(h[k] - ref[k]));
    EXPECT_LT(worst, 1e-10) << "case " << c;
  }
}

TEST(Dists, CompoundPoissonLargeRateSplits) {
  // Above the direct-rate limit exp(-rate) underflows; the halving path must
  // still produce a normalised law with the right mean.
  const auto x = make_deterministic(2);
  const auto h = compound_poisson(900.0, x);
  EXPECT_NEAR(h.total(), 1.0, 1e-10);
  EXPECT_NEAR(mean(h), 1800.0, 1e-6);
}

TEST(Dists, CompoundPoissonMeanAndVariance) {
  const auto x = make_geometric_mixture(4.0, 1.7320508075688772);
  const double rate = 12.5;
  const auto h = compound_poisson(rate, x);
  const auto m = moments(h);
  EXPECT_NEAR(m.mean, rate * 4.0, 1e-8);
  const double ex2 = 16.0 * (1.0 + 3.0);
  EXPECT_NEAR(m.variance, rate * ex2, 1e-6);
}

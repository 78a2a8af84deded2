#include <gtest/gtest.h>

#include "qarrival/coupling.hpp"

using namespace qarrival;

namespace {

ArrivalLaw uniform_law(double horizon) { return {{}, {Segment{0.0, horizon, 1.0 / horizon}}}; }

}  // namespace

TEST(Coupling, SharedUniformsGiveDominance) {
  Rng rng(1);
  const auto rep = coupled_dominance(5, 5, uniform_law(60), uniform_law(60), 0.25, 0.5, 1000, rng);
  EXPECT_TRUE(rep.dominance_holds);
  EXPECT_EQ(rep.paths_checked, 1000);
}

TEST(Coupling, AtomsAndFluidLaws) {
  const FluidParams f{1.0, 2.0, 1.0, 8.0, 1.0};
  const auto eq = solve_case(f, FluidCase::iv);
  Rng rng(2);
  const auto rep = coupled_dominance(50, 100, ArrivalLaw::from_fluid(eq, Belief::a),
                                     ArrivalLaw::from_fluid(eq, Belief::b), 50.0, 400.0, 300, rng);
  EXPECT_TRUE(rep.dominance_holds);

  ArrivalStrategy p{{0.5, 0.0, 0.25, 0.25}};
  const auto rep2 = coupled_dominance(5, 5, ArrivalLaw::from_strategy(p, 3), ArrivalLaw::from_strategy(p, 3), 0.25,
                                      0.5, 500, rng);
  EXPECT_TRUE(rep2.dominance_holds);
}

TEST(Coupling, EqualRatesCoincide) {
  Rng rng(3);
  const auto rep = coupled_dominance(5, 5, uniform_law(30), uniform_law(30), 0.5, 0.5, 300, rng);
  EXPECT_TRUE(rep.dominance_holds);
  EXPECT_EQ(rep.max_abs_gap, 0.0);
}

TEST(Coupling, IndependentJobsBreakDominance) {
  Rng rng(4);
  const auto rep = coupled_dominance(5, 5, uniform_law(60), uniform_law(60), 0.25, 0.5, 1000, rng,
                                     JobCoupling::independent);
  EXPECT_FALSE(rep.dominance_holds);
  EXPECT_GT(rep.violating_paths, 0);
}

TEST(Coupling, ArrivalLawSamplesFromStrategy) {
  ArrivalStrategy p{{0.0, 1.0, 0.0}};
  const auto law = ArrivalLaw::from_strategy(p, 2.5);
  Rng rng(5);
  for (int k = 0; k < 100; ++k) EXPECT_DOUBLE_EQ(law.sample(rng), 2.5);
}

TEST(Coupling, RejectsBadRates) {
  Rng rng(6);
  EXPECT_THROW(coupled_dominance(1, 1, uniform_law(1), uniform_law(1), 0.5, 0.25, 10, rng), Error);
}

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qtraj/trajectory.hpp"

using namespace qtraj;

namespace {

TrajectoryProblem free_problem(const Microstate& m, double E = 0.5, double hbar = 1.0) {
  return TrajectoryProblem{Potential(Free{}), E, hbar, 1.0, m, 0.0};
}

// Five-point derivative of t(x) in x.
double dt_dx(const TrajectoryProblem& p, double x, double h) {
  auto t = [&](double y) { return time_of_position(p, y); };
  return (t(x - 2 * h) - 8 * t(x - h) + 8 * t(x + h) - t(x + 2 * h)) / (12 * h);
}

}  // namespace

TEST(Trajectory, SymmetricMicrostateGivesClassicalFlight) {
  const auto p = free_problem({1.0, 1.0, 0.0});
  for (double x : {-3.0, 0.0, 0.7, 2.0, 4.5}) EXPECT_NEAR(time_of_position(p, x), x, 1e-9);
  EXPECT_NEAR(free_particle_time({3.0, 3.0, 0.0}, 1.7, 0.5, 1.0, 1.0), 1.7, 1e-15);
}

TEST(Trajectory, MatchesClosedFormForAsymmetricMicrostate) {
  const Microstate m{2.0, 1.0, 0.0};
  const auto p = free_problem(m);
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> X(0.0, 5.0);
  for (int i = 0; i < 20; ++i) {
    const double x = X(gen);
    EXPECT_NEAR(time_of_position(p, x), free_particle_time(m, x, 0.5, 1.0, 1.0), 1e-6) << x;
  }
  EXPECT_NEAR(time_of_position(p, 1.0), free_particle_time(m, 1.0, 0.5, 1.0, 1.0), 1e-6);
}

TEST(Trajectory, EpochIsAdditive) {
  const auto p = free_problem({2.0, 1.0, 0.3});
  EXPECT_EQ(time_of_position(p, 1.3, 5.0) - time_of_position(p, 1.3, 0.0), 5.0);
}

TEST(Trajectory, PositionOfTimeInvertsClassicalFlight) {
  const auto p = free_problem({1.0, 1.0, 0.0});
  EXPECT_NEAR(position_of_time(p, 2.0, {0.0, 10.0}), 2.0, 1e-8);
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> X(0.5, 9.5);
  for (int i = 0; i < 20; ++i) {
    const double x = X(gen);
    EXPECT_NEAR(position_of_time(p, time_of_position(p, x), {0.0, 10.0}), x, 1e-8);
  }
}

TEST(Trajectory, PositionOfTimeOnMonotoneSegment) {
  const auto p = free_problem({2.0, 1.0, 0.0});
  for (double x : {0.12, 0.2, 0.27}) {
    EXPECT_NEAR(position_of_time(p, time_of_position(p, x), {0.1, 0.3}), x, 1e-7);
  }
}

TEST(Trajectory, PositionOfTimeErrors) {
  const auto sym = free_problem({1.0, 1.0, 0.0});
  EXPECT_THROW(position_of_time(sym, 20.0, {0.0, 10.0}), InvalidArgument);
  EXPECT_THROW(position_of_time(sym, 1.0, {3.0, 1.0}), InvalidArgument);
  // For (2,1,0) t(x) turns back near x = 1.6: a wide bracket is not monotone.
  const auto asym = free_problem({2.0, 1.0, 0.0});
  EXPECT_THROW(position_of_time(asym, 1.0, {1.0, 2.5}), NumericalError);
}

TEST(Trajectory, ClassicalVelocityForSymmetricMicrostate) {
  const auto p = free_problem({1.0, 1.0, 0.0});
  for (double x : {-2.0, 0.0, 1.0, 3.5}) EXPECT_NEAR(mechanical_velocity(p, x), 1.0, 1e-7);
}

TEST(Trajectory, VelocityObeysChainRule) {
  const auto p = free_problem({2.0, 1.0, 0.0});
  std::mt19937 gen(21);
  std::uniform_real_distribution<double> X(0.0, 5.0);
  int checked = 0;
  while (checked < 20) {
    const double x = X(gen);
    double v = 0.0;
    try {
      v = mechanical_velocity(p, x);
    } catch (const NumericalError&) {
      continue;  // turning point
    }
    EXPECT_NEAR(v * dt_dx(p, x, 1e-2), 1.0, 1e-5) << x;
    ++checked;
  }
}

TEST(Trajectory, VelocityIsNotMomentumOverMass) {
  const Microstate m{2.0, 1.0, 0.0};
  const auto p = free_problem(m);
  const auto b = rescale_for_microstate(build_basis(p.potential, p.E, 1.0, 1.0, 0.0), m);
  const double v = mechanical_velocity(p, 0.0);
  EXPECT_GT(std::abs(v - conjugate_momentum(b, m, 0.0)), 1e-3);
}

TEST(Trajectory, ClosedFormPeriod) {
  const Microstate m{2.0, 1.0, 0.4};
  const double E = 0.8, hbar = 0.7, mass = 1.3;
  const double period = std::numbers::pi * hbar / std::sqrt(2.0 * mass * E);
  for (double x : {0.3, 1.1, 2.9}) {
    const double s1 = free_particle_time(m, x, E, hbar, mass) / x;
    const double s2 = free_particle_time(m, x + period, E, hbar, mass) / (x + period);
    EXPECT_NEAR(s1, s2, 1e-12);
  }
}

TEST(Trajectory, ClosedFormValidation) {
  EXPECT_THROW(free_particle_time({1.0, 1.0, 0.0}, 1.0, -1.0, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(free_particle_time({1.0, 1.0, 3.0}, 1.0, 0.5, 1.0, 1.0), InvalidArgument);
}

TEST(Trajectory, SamplesCarryAllFields) {
  const auto p = free_problem({1.0, 1.0, 0.0});
  const auto s = trajectory_samples(p, {0.5, 1.5}, 2.0);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[1].t, 3.5, 1e-9);
  EXPECT_NEAR(s[1].W1, 1.0, 1e-14);
  EXPECT_NEAR(s[1].v, 1.0, 1e-7);
}

TEST(Trajectory, OscillatorTimeIsFinite) {
  const TrajectoryProblem p{Potential(HarmonicOscillator{1.0}), 1.3, 1.0, 1.0, {1.0, 1.0, 0.0}, 0.0};
  const double t0 = time_of_position(p, 0.2);
  const double t1 = time_of_position(p, 0.4);
  EXPECT_TRUE(std::isfinite(t0));
  EXPECT_GT(t1, t0);
}

TEST(Trajectory, SweepConvergesOnlyForSymmetricMicrostate) {
  const std::vector<double> hbars{1.0, 0.5, 0.25, 0.125};
  const auto sym = classical_limit_sweep({1.0, 1.0, 0.0}, 0.5, 1.0, hbars, {0.1, 5.0});
  EXPECT_TRUE(sym.converged);
  for (double a : sym.envelope_amplitude) EXPECT_EQ(a, 0.0);

  const auto asym = classical_limit_sweep({2.0, 1.0, 0.0}, 0.5, 1.0, hbars, {0.1, 5.0});
  EXPECT_FALSE(asym.converged);
  ASSERT_EQ(asym.envelope_amplitude.size(), hbars.size());
  for (std::size_t i = 1; i < hbars.size(); ++i) {
    EXPECT_NEAR(asym.envelope_amplitude[i] / asym.envelope_amplitude[i - 1], 1.0, 1e-2);
  }

  EXPECT_FALSE(classical_limit_sweep({1.0, 1.0, 0.5}, 0.5, 1.0, hbars, {0.1, 5.0}).converged);
}

TEST(Trajectory, SweepValidation) {
  const Microstate m{1.0, 1.0, 0.0};
  EXPECT_THROW(classical_limit_sweep(m, 0.5, 1.0, {1.0, 2.0}, {0.1, 5.0}), InvalidArgument);
  EXPECT_THROW(classical_limit_sweep(m, 0.5, 1.0, {}, {0.1, 5.0}), InvalidArgument);
  EXPECT_THROW(classical_limit_sweep(m, 0.5, 1.0, {1.0}, {0.1, 0.2}), InvalidArgument);
}

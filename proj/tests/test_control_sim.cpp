#include <cmath>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "outreg/control.hpp"
#include "outreg/error.hpp"
#include "outreg/regulator.hpp"
#include "outreg/sim.hpp"
#include "test_support.hpp"

namespace outreg {
namespace {

using testing::m1;
using testing::mat;

TEST(Gain, ScalarUnstable) {
  const FeedbackGain g = stabilizing_gain(Plant::make(m1(1.0), m1(1.0), m1(1.0)));
  EXPECT_NEAR(g.X(0, 0), 1.0 + std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(g.K(0, 0), 1.0 + std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(g.spectral_abscissa, -std::sqrt(2.0), 1e-12);
}

TEST(Gain, ScalarStable) {
  const FeedbackGain g = stabilizing_gain(Plant::make(m1(-1.0), m1(1.0), m1(1.0)));
  EXPECT_NEAR(g.X(0, 0), std::sqrt(2.0) - 1.0, 1e-12);
  EXPECT_NEAR(g.K(0, 0), std::sqrt(2.0) - 1.0, 1e-12);
  EXPECT_NEAR(g.spectral_abscissa, -std::sqrt(2.0), 1e-12);
}

TEST(Gain, NotStabilizable) {
  try {
    stabilizing_gain(Plant::make(Eigen::MatrixXd::Identity(2, 2), mat({{1}, {0}}), mat({{1, 0}})));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotStabilizable);
  }
}

TEST(Gain, ImaginaryAxisHamiltonian) {
  // Undetectable oscillation through Qs = 0.
  const Plant p = Plant::make(testing::rotation_generator(1.0), mat({{0}, {1}}), mat({{1, 0}}));
  try {
    stabilizing_gain(p, Eigen::MatrixXd::Zero(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kImaginaryAxisEigenvalues);
  }
}

TEST(Gain, RandomPlantsStabilized) {
  std::mt19937_64 rng(41);
  int solved = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = testing::uniform_int(rng, 1, 6), m = testing::uniform_int(rng, 1, 3);
    const Plant p = Plant::make(testing::normal_matrix(rng, n, n), testing::normal_matrix(rng, n, m),
                                Eigen::MatrixXd::Ones(1, n));
    const FeedbackGain g = stabilizing_gain(p);
    EXPECT_LT(g.spectral_abscissa, -1e-9);
    EXPECT_LE(g.riccati_residual, 1e-8 * (1.0 + g.X.norm()));
    EXPECT_GE(min_symmetric_eigenvalue(g.X), -1e-10 * (1.0 + g.X.norm()));
    ++solved;
  }
  EXPECT_EQ(solved, 100);
}

TEST(Gain, RepeatedHamiltonianEigenvalues) {
  const Plant p = Plant::make(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3),
                              Eigen::MatrixXd::Identity(3, 3));
  const FeedbackGain g = stabilizing_gain(p);
  EXPECT_LE((g.X - (1.0 + std::sqrt(2.0)) * Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-10);
}

TEST(ClosedLoop, ScalarAugmented) {
  const Plant p = Plant::make(m1(-1.0), m1(1.0), m1(1.0));
  Exosystem exo;
  exo.Abar = m1(0.0);
  exo.Cbar = m1(1.0);
  const ClosedLoop cl = closed_loop(p, exo, Coupling::zero(1, 1, 1),
                                    FeedbackGain::from_matrix(p, m1(1.0)), m1(1.0), m1(1.0));
  EXPECT_EQ(cl.M, mat({{-2, 2}, {0, 0}}));
}

TEST(ClosedLoop, ZeroCouplingAndZeroGain) {
  const Plant p = Plant::make(m1(-1.0), m1(1.0), m1(1.0));
  Exosystem exo;
  exo.Abar = m1(0.0);
  exo.Cbar = m1(1.0);
  const ClosedLoop a = closed_loop(p, exo, Coupling::zero(1, 1, 1),
                                   FeedbackGain::from_matrix(p, m1(3.0)), m1(0.0), m1(0.0));
  EXPECT_EQ(a.M(0, 1), 0.0);
  const ClosedLoop b = closed_loop(p, exo, Coupling::zero(1, 1, 1),
                                   FeedbackGain::from_matrix(p, m1(0.0)), m1(1.0), m1(1.0));
  EXPECT_EQ(b.M(0, 0), -1.0);
}

TEST(ClosedLoop, RejectsDestabilizingGain) {
  const Plant p = Plant::make(m1(1.0), m1(1.0), m1(1.0));
  Exosystem exo;
  exo.Abar = m1(0.0);
  exo.Cbar = m1(1.0);
  try {
    closed_loop(p, exo, Coupling::zero(1, 1, 1), FeedbackGain::from_matrix(p, m1(0.5)), m1(0.0),
                m1(0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotStabilizing);
  }
}

TEST(ClosedLoop, RegulationInvariance) {
  std::mt19937_64 rng(42);
  int checked = 0;
  for (int t = 0; t < 60; ++t) {
    testing::RandomOptions o;
    o.feedthrough = t % 2 == 0;
    const ProblemSpec s = testing::random_problem(rng, o);
    const ClassicalSolution c = solve_classical(s);
    if (c.classification == Classification::kInconsistent) continue;
    const FeedbackGain g = stabilizing_gain(s.plant);
    const ClosedLoop cl = closed_loop(s.plant, s.exo, s.coupling, g, c.Pi, c.Gamma);
    EXPECT_LE(cl.invariance_residual, 1e-8 * (1.0 + c.Pi.norm()));
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

ClosedLoop scalar_loop(const ProblemSpec& s, const Eigen::MatrixXd& Pi, const Eigen::MatrixXd& Gamma) {
  return closed_loop(s.plant, s.exo, s.coupling, stabilizing_gain(s.plant), Pi, Gamma);
}

TEST(Simulate, StartsOnInvariantSubspace) {
  ProblemSpec s = testing::scalar_square();
  s.exo.Abar = testing::rotation_generator(1.0);
  s.exo.Cbar = mat({{1, 0}});
  s.coupling = Coupling::zero(1, 1, 2);
  const ClassicalSolution c = solve_classical(s);
  const ClosedLoop cl = scalar_loop(s, c.Pi, c.Gamma);
  const Eigen::VectorXd xb0 = (Eigen::VectorXd(2) << 1.0, 0.5).finished();
  const Trajectory tr = simulate(cl, c.Pi * xb0, xb0, {10.0, 1e-3, 10});
  EXPECT_LE(tr.e.cwiseAbs().maxCoeff(), 1e-8);
  // Control-law reconstruction.
  const Eigen::MatrixXd u = -cl.K * tr.x + (cl.K * c.Pi + c.Gamma) * tr.xbar;
  EXPECT_LE((u - tr.u).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(tr.t.back(), 10.0);
  EXPECT_EQ(tr.x.cols(), tr.samples());
  EXPECT_EQ(tr.e.cols(), tr.samples());
}

TEST(Simulate, ScalarConverges) {
  const ProblemSpec s = testing::scalar_square();
  const ClassicalSolution c = solve_classical(s);
  const Trajectory tr = simulate(scalar_loop(s, c.Pi, c.Gamma), m1(0.0).col(0),
                                 Eigen::VectorXd::Ones(1), {20.0, 1e-3, 100});
  EXPECT_LE(tr.e.col(tr.samples() - 1).norm(), 1e-6);
}

TEST(Simulate, UnderActuatedSteadyError) {
  const ProblemSpec s = testing::under_actuated();
  const ErrorOptimalSolution y = solve_error_optimal(s);
  const Trajectory tr = simulate(scalar_loop(s, y.Pi_y, y.Gamma_y), Eigen::VectorXd::Zero(1),
                                 Eigen::VectorXd::Ones(1), {20.0, 1e-3, 100});
  const Eigen::Index last = tr.samples() - 1;
  EXPECT_LE((tr.y.col(last) - Eigen::Vector2d(0.5, 0.5)).norm(), 1e-6);
  EXPECT_LE((tr.e.col(last) - Eigen::Vector2d(-0.5, 0.5)).norm(), 1e-6);
  const TrackingMetrics m = tracking_error_metrics(tr, 0.1);
  EXPECT_TRUE(std::isinf(m.settling_time));
}

TEST(Simulate, StepTooLarge) {
  const ProblemSpec s = testing::scalar_square();
  const ClassicalSolution c = solve_classical(s);
  const ClosedLoop cl = closed_loop(s.plant, s.exo, s.coupling,
                                    FeedbackGain::from_matrix(s.plant, m1(1000.0)), c.Pi, c.Gamma);
  try {
    simulate(cl, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), {1.0, 0.01, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStepTooLarge);
  }
  const Trajectory warn = simulate(cl, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), {1.0, 1e-3, 1});
  EXPECT_TRUE(warn.step_warning);
}

TEST(Simulate, FourthOrderConvergence) {
  // Scalar decay against the exact exponential.
  const Plant p = Plant::make(m1(0.0), m1(1.0), m1(1.0));
  Exosystem exo;
  exo.Abar = m1(0.0);
  exo.Cbar = m1(0.0);
  const ClosedLoop cl = closed_loop(p, exo, Coupling::zero(1, 1, 1),
                                    FeedbackGain::from_matrix(p, m1(2.0)), m1(0.0), m1(0.0));
  const double T = 2.0, exact = std::exp(-2.0 * T);
  auto err = [&](double dt) {
    const Trajectory tr = simulate(cl, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), {T, dt, 1});
    return std::abs(tr.x(0, tr.samples() - 1) - exact);
  };
  const double ratio = err(0.1) / err(0.05);
  EXPECT_GE(ratio, 12.0);
  EXPECT_LE(ratio, 20.0);
}

TEST(Costs, ZeroStationaryControl) {
  const ProblemSpec s = testing::over_actuated(mat({{1, 1}}), 0.0);
  const EnergyOptimalSolution e = solve_energy_optimal(s);
  const Trajectory tr = simulate(scalar_loop(s, e.Pi_u, e.Gamma_u), Eigen::VectorXd::Zero(1),
                                 Eigen::VectorXd::Ones(1), {5.0, 1e-3, 10});
  const SimReport r = finite_horizon_costs(tr, s.weights, CostBasis::kStationary);
  EXPECT_EQ(r.J_T_u, 0.0);
  EXPECT_LE(r.J_T_y, 1e-10 * r.horizon);
}

TEST(Costs, CosinePower) {
  // u_s = cos t through Gamma = [1, 0] on a unit oscillator.
  ProblemSpec s = testing::scalar_square();
  s.exo.Abar = testing::rotation_generator(1.0);
  s.exo.Cbar = mat({{0, 0}});
  s.coupling = Coupling::zero(1, 1, 2);
  const Eigen::MatrixXd Gamma = mat({{1, 0}});
  LinearMatrixSystem sys;  // Pi Abar = A Pi + B Gamma
  const int pi = sys.add_unknown("Pi", 1, 2);
  const int eq = sys.add_equation("state", s.plant.B * Gamma);
  sys.add_right(eq, pi, s.exo.Abar);
  sys.add_left(eq, s.plant.A, pi, -1.0);
  const Eigen::MatrixXd Pi = solve(sys).solution[0];
  const Trajectory tr = simulate(scalar_loop(s, Pi, Gamma), Eigen::VectorXd::Zero(1),
                                 (Eigen::VectorXd(2) << 1, 0).finished(), {100.0, 1e-2, 1});
  const SimReport r = finite_horizon_costs(tr, s.weights, CostBasis::kStationary);
  EXPECT_GE(r.power_u, 0.245);
  EXPECT_LE(r.power_u, 0.255);
}

TEST(Costs, EnergiesNondecreasing) {
  std::mt19937_64 rng(43);
  testing::RandomOptions o;
  o.actuation = testing::Actuation::kSquare;
  ProblemSpec s;
  ClassicalSolution c;
  do {
    s = testing::random_problem(rng, o);
    c = solve_classical(s);
  } while (c.classification == Classification::kInconsistent);
  const ClosedLoop cl = closed_loop(s.plant, s.exo, s.coupling, stabilizing_gain(s.plant), c.Pi, c.Gamma);
  double prev_u = 0.0, prev_y = 0.0;
  for (double T : {1.0, 2.0, 4.0, 8.0}) {
    const Trajectory tr = simulate(cl, Eigen::VectorXd::Zero(s.n()), Eigen::VectorXd::Ones(s.nbar()), {T, 1e-3, 5});
    const SimReport r = finite_horizon_costs(tr, s.weights, CostBasis::kActual);
    EXPECT_GE(r.J_T_u, prev_u);
    EXPECT_GE(r.J_T_y, prev_y);
    EXPECT_GE(r.power_u, 0.0);
    prev_u = r.J_T_u;
    prev_y = r.J_T_y;
  }
}

TEST(Metrics, SettlingTime) {
  Trajectory tr;
  tr.t = {0, 1, 2, 3};
  tr.e = Eigen::MatrixXd::Zero(1, 4);
  EXPECT_EQ(tracking_error_metrics(tr, 1e-6).settling_time, 0.0);
  tr.e << 1.0, 0.1, 0.01, 0.001;
  const TrackingMetrics m = tracking_error_metrics(tr, 0.05);
  EXPECT_EQ(m.settling_time, 2.0);
  EXPECT_DOUBLE_EQ(m.sup_after_settling, 0.01);
  EXPECT_DOUBLE_EQ(m.terminal_norm, 0.001);
  tr.e << 0.5, 0.5, 0.5, 0.5;
  EXPECT_TRUE(std::isinf(tracking_error_metrics(tr, 0.1).settling_time));
}

}  // namespace
}  // namespace outreg

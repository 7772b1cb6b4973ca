#include <cmath>

#include <gtest/gtest.h>

#include "outreg/analysis.hpp"
#include "outreg/error.hpp"
#include "test_support.hpp"

namespace outreg {
namespace {

using testing::m1;
using testing::mat;

Exosystem exo_of(const Eigen::MatrixXd& abar) {
  Exosystem e;
  e.Abar = abar;
  e.Cbar = Eigen::MatrixXd::Zero(1, abar.rows());
  return e;
}

Eigen::MatrixXd two_oscillators() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  a.topLeftCorner(2, 2) = testing::rotation_generator(1.0);
  a.bottomRightCorner(2, 2) = testing::rotation_generator(2.0);
  return a;
}

// Independent reference: plain trapezoid over exact samples of
// cos t and cos 2t, which the block-diagonal generator produces.
double trapezoid_cos_power(double T, int steps) {
  const double h = T / steps;
  double acc = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double t = k * h;
    const double s = std::cos(t) + std::cos(2 * t);
    acc += (k == 0 || k == steps ? 0.5 : 1.0) * s * s;
  }
  return acc * h / T;
}

TEST(Power, Constant) {
  const PowerReport r = stationary_power_analytic(m1(1.0), m1(1.0), exo_of(m1(0.0)),
                                                  Eigen::VectorXd::Ones(1));
  EXPECT_NEAR(r.value, 1.0, 1e-14);
  EXPECT_EQ(r.method, PowerMethod::kAnalytic);
}

TEST(Power, Cosine) {
  const PowerReport r = stationary_power_analytic(mat({{1, 0}}), m1(1.0),
                                                  exo_of(testing::rotation_generator(1.0)),
                                                  (Eigen::VectorXd(2) << 1, 0).finished());
  EXPECT_NEAR(r.value, 0.5, 1e-14);
  Complex sum = 0.0;
  for (const auto& c : r.contributions) sum += c.contribution;
  EXPECT_NEAR(sum.real(), r.value, 1e-12 * std::abs(r.value));
}

TEST(Power, TwoFrequencies) {
  const Exosystem e = exo_of(two_oscillators());
  const Eigen::MatrixXd M = mat({{1, 0, 1, 0}});
  const Eigen::VectorXd x0 = (Eigen::VectorXd(4) << 1, 0, 1, 0).finished();
  const PowerReport r = stationary_power_analytic(M, m1(1.0), e, x0);
  EXPECT_NEAR(r.value, 1.0, 1e-13);
  EXPECT_NEAR(trapezoid_cos_power(1e4, 400000), r.value, 1e-3);
  const PowerReport n = stationary_power_numeric(M, m1(1.0), e, x0, 1e4, 400000);
  EXPECT_NEAR(n.value, r.value, 1e-3);
  EXPECT_EQ(n.method, PowerMethod::kNumeric);
}

TEST(Power, Errors) {
  try {
    stationary_power_analytic(m1(1.0), m1(1.0), exo_of(m1(-1.0)), Eigen::VectorXd::Ones(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSpectrumViolation);
  }
  try {
    stationary_power_analytic(mat({{1, 0}}), m1(1.0), exo_of(mat({{0, 1}, {0, 0}})),
                              Eigen::VectorXd::Ones(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotSemisimple);
  }
}

TEST(Power, NonnegativeForPsdWeights) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 100; ++t) {
    Exosystem e = exo_of(testing::random_exo_generator(rng, 4));
    const Eigen::Index nb = e.Abar.rows();
    const Eigen::Index q = testing::uniform_int(rng, 1, 3);
    const PowerReport r = stationary_power_analytic(
        testing::normal_matrix(rng, q, nb), testing::random_psd(rng, q, testing::uniform_int(rng, 1, int(q))),
        e, testing::normal_matrix(rng, nb, 1));
    EXPECT_GE(r.value, -1e-12);
    Complex sum = 0.0;
    for (const auto& c : r.contributions) sum += c.contribution;
    EXPECT_NEAR(sum.real(), r.value, 1e-12 * (1.0 + std::abs(r.value)));
  }
}

TEST(PowerDifference, EnergyExample) {
  const ProblemSpec spec = testing::over_actuated(mat({{1, 1}}), -1.0);
  const Variation v{m1(0.0), mat({{1}, {-1}})};
  EXPECT_NEAR(power_difference(spec, OptimalityKind::kEnergy, v, Eigen::VectorXd::Ones(1)), 1.0, 1e-14);
  const Variation scaled{m1(0.0), 3.0 * v.dGamma};
  EXPECT_NEAR(power_difference(spec, OptimalityKind::kEnergy, scaled, Eigen::VectorXd::Ones(1)),
              9.0, 9.0 * 1e-12);
}

TEST(PowerDifference, ErrorKindZeroOutputVariation) {
  // A = 0, B = 1, C = 0: dPi free with C dPi = 0.
  ProblemSpec spec = testing::over_actuated(m1(1.0), 0.0);
  spec.plant.C = m1(0.0);
  const Variation v{m1(1.0), m1(0.0)};
  EXPECT_EQ(power_difference(spec, OptimalityKind::kError, v, Eigen::VectorXd::Ones(1)), 0.0);
}

TEST(PowerDifference, InfeasibleVariation) {
  const ProblemSpec spec = testing::over_actuated(mat({{1, 1}}), -1.0);
  try {
    power_difference(spec, OptimalityKind::kEnergy, {m1(0.0), mat({{1}, {0}})}, Eigen::VectorXd::Ones(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleVariation);
  }
}

TEST(PowerDifference, ExactlyQuadraticUnderScaling) {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 30; ++t) {
    testing::RandomOptions o;
    o.feedthrough = t % 2 == 0;
    const ProblemSpec spec = testing::random_problem(rng, o);
    const VariationBasis b = variation_basis(spec, VariationMode::kUnconstrained);
    if (b.basis.empty()) continue;
    const Eigen::VectorXd x0 = exciting_initial_state(spec.exo);
    const double base = power_difference(spec, OptimalityKind::kError, b.basis[0], x0);
    const Variation s{2.5 * b.basis[0].dPi, 2.5 * b.basis[0].dGamma};
    const double scaled = power_difference(spec, OptimalityKind::kError, s, x0);
    EXPECT_LE(std::abs(scaled - 6.25 * base), 1e-12 * std::abs(6.25 * base) + 1e-15);
  }
}

TEST(Probe, OverActuatedLine) {
  const ProblemSpec spec = testing::over_actuated(mat({{1, 1}}), -1.0);
  const EnergyOptimalSolution s = solve_energy_optimal(spec);
  const ProbeReport r = optimality_probe(spec, OptimalityKind::kEnergy, s.Pi_u, s.Gamma_u, 100, 1);
  EXPECT_EQ(r.trials, 100);
  EXPECT_EQ(r.basis_dimension, 1);
  EXPECT_TRUE(r.uniqueness_condition);
  EXPECT_TRUE(r.strictly_positive);
  // Unit coefficient on the normalized line [1, -1]/sqrt(2): dP = 1/2.
  EXPECT_NEAR(r.min_delta, 0.5, 1e-12);
  EXPECT_LE(r.max_first_variation, 1e-12);
}

TEST(Probe, SquareIsVacuous) {
  const ProblemSpec spec = testing::scalar_square();
  const EnergyOptimalSolution s = solve_energy_optimal(spec);
  const ProbeReport r = optimality_probe(spec, OptimalityKind::kEnergy, s.Pi_u, s.Gamma_u, 100, 1);
  EXPECT_EQ(r.basis_dimension, 0);
  EXPECT_EQ(r.trials, 0);
}

TEST(Probe, CorruptedCandidate) {
  const ProblemSpec spec = testing::over_actuated(mat({{1, 2}}), -1.0);
  const EnergyOptimalSolution s = solve_energy_optimal(spec);
  const double gap = candidate_power_gap(spec, OptimalityKind::kEnergy, m1(1.0), mat({{1}, {0}}),
                                         s.Pi_u, s.Gamma_u, Eigen::VectorXd::Ones(1));
  EXPECT_NEAR(gap, 0.4, 1e-12);
}

TEST(Probe, DetectsNonOptimalBase) {
  // Probing around a feasible but non-optimal allocation finds a descent.
  const ProblemSpec spec = testing::over_actuated(mat({{1, 2}}), -1.0);
  try {
    optimality_probe(spec, OptimalityKind::kEnergy, m1(1.0), mat({{1}, {0}}), 100, 3);
    FAIL();
  } catch (const ProbeFailed& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProbeFailed);
    EXPECT_LT(e.delta(), -1e-9);
    EXPECT_LE(variation_residual(spec, e.variation(), VariationMode::kConstrained), 1e-10);
  }
}

TEST(Probe, ErrorKindUnderActuated) {
  const ProblemSpec spec = testing::under_actuated();
  const ErrorOptimalSolution s = solve_error_optimal(spec);
  const ProbeReport r = optimality_probe(spec, OptimalityKind::kError, s.Pi_y, s.Gamma_y, 50, 2);
  EXPECT_EQ(r.trials, 50);
  EXPECT_GT(r.min_delta, 0.0);
}

TEST(Convergence, ScalarRho) {
  const ProblemSpec spec = testing::scalar_square();
  const ConvergenceReport r =
      convergence_study(spec, ConvergenceMode::kRhoToInfinity, {1e2, 1e3, 1e4, 1e5, 1e6});
  for (std::size_t k = 0; k < r.grid.size(); ++k) {
    EXPECT_NEAR(r.pi_errors[k], 1.0 / (1.0 + r.grid[k]), 1e-10);
  }
  EXPECT_NEAR(r.pi_slope, -1.0, 0.02);
  EXPECT_NEAR(r.gamma_slope, -1.0, 0.02);
  const ConvergenceReport ten = convergence_study(spec, ConvergenceMode::kRhoToInfinity, {10.0, 20.0});
  EXPECT_NEAR(ten.pi_errors[0], 1.0 / 11.0, 1e-12);
}

TEST(Convergence, ScalarEps) {
  const ProblemSpec spec = testing::scalar_square();
  const ConvergenceReport r =
      convergence_study(spec, ConvergenceMode::kEpsToZero, {1e-2, 1e-3, 1e-4, 1e-5, 1e-6});
  for (std::size_t k = 0; k < r.grid.size(); ++k) {
    EXPECT_NEAR(r.pi_errors[k], r.grid[k] / (1.0 + r.grid[k]), 1e-10);
  }
  EXPECT_NEAR(r.pi_slope, -1.0, 0.02);
}

TEST(Convergence, SerialAndParallelAgree) {
  std::mt19937_64 rng(33);
  testing::RandomOptions o;
  o.actuation = testing::Actuation::kOver;
  o.strict = true;
  for (int t = 0; t < 10; ++t) {
    const ProblemSpec spec = testing::random_problem(rng, o);
    try {
      const std::vector<double> grid = {1e2, 1e3, 1e4};
      const auto a = convergence_study(spec, ConvergenceMode::kRhoToInfinity, grid, kernels::Exec::kSerial);
      const auto b = convergence_study(spec, ConvergenceMode::kRhoToInfinity, grid, kernels::Exec::kParallel);
      EXPECT_EQ(a.pi_errors, b.pi_errors);
      EXPECT_EQ(a.gamma_errors, b.gamma_errors);
    } catch (const Error&) {
    }
  }
}

TEST(Convergence, Preconditions) {
  const ProblemSpec spec = testing::scalar_square();
  EXPECT_THROW(convergence_study(spec, ConvergenceMode::kRhoToInfinity, {1.0, 1.0}), Error);
  EXPECT_THROW(convergence_study(spec, ConvergenceMode::kRhoToInfinity, {1.0, 3.0, 2.0}), Error);
  EXPECT_THROW(convergence_study(spec, ConvergenceMode::kRhoToInfinity, {-1.0, 3.0}), Error);
  ProblemSpec qx = spec;
  qx.weights.Qx = m1(1.0);
  EXPECT_THROW(convergence_study(qx, ConvergenceMode::kEpsToZero, {1e-2, 1e-3}), Error);
  // Non-unique energy optimum.
  ProblemSpec nonunique = testing::over_actuated(mat({{1, 1}}), -1.0);
  nonunique.plant.C = m1(0.0);
  nonunique.exo.Cbar = m1(0.0);
  EXPECT_THROW(convergence_study(nonunique, ConvergenceMode::kRhoToInfinity, {1e2, 1e3}), Error);
}

TEST(Convergence, UnresolvableGridPointIsRefused) {
  // Here the error-optimal limit is singular; at rho = 1e14 the rank test
  // can no longer separate eps / rho from zero.
  const ProblemSpec spec = testing::over_actuated(mat({{1, 2}}), -1.0);
  try {
    convergence_study(spec, ConvergenceMode::kRhoToInfinity, {1e2, 1e14}, kernels::Exec::kSerial);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumericalFailure);
  }
}

TEST(Convergence, SlopeFitSkipsFloor) {
  EXPECT_NEAR(fit_loglog_slope({1, 10, 100, 1000}, {1, 0.1, 0.01, 1e-14}), -1.0, 1e-12);
  EXPECT_TRUE(std::isnan(fit_loglog_slope({1, 10}, {1, 1e-13})));
}

TEST(Oracle, EnergyExamples) {
  const OraclePair a = kkt_oracle(testing::over_actuated(mat({{1, 2}}), -1.0), OptimalityKind::kEnergy);
  EXPECT_LE((a.Gamma - mat({{0.2}, {0.4}})).norm(), 1e-12);
  EXPECT_NEAR(a.Pi(0, 0), 1.0, 1e-12);
  ProblemSpec w = testing::over_actuated(mat({{1, 1}}), -1.0);
  w.weights.R = mat({{1, 0}, {0, 4}});
  EXPECT_LE((kkt_oracle(w, OptimalityKind::kEnergy).Gamma - mat({{0.8}, {0.2}})).norm(), 1e-12);
}

TEST(Oracle, ErrorExample) {
  const OraclePair o = kkt_oracle(testing::under_actuated(), OptimalityKind::kError);
  EXPECT_NEAR(o.Pi(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(o.Gamma(0, 0), 0.0, 1e-12);
}

TEST(Oracle, InconsistentConstraints) {
  Exosystem exo;
  exo.Abar = Eigen::MatrixXd::Zero(2, 2);
  exo.Cbar = Eigen::MatrixXd::Identity(2, 2);
  const ProblemSpec s = ProblemSpec::make(Plant::make(m1(0.0), m1(1.0), mat({{1}, {1}})), exo);
  try {
    kkt_oracle(s, OptimalityKind::kEnergy);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInconsistent);
  }
}

TEST(Oracle, OscillatorRecombinationIsReal) {
  std::mt19937_64 rng(34);
  testing::RandomOptions o;
  o.actuation = testing::Actuation::kOver;
  o.conjugate_exo = true;
  int compared = 0;
  for (int t = 0; t < 30; ++t) {
    const ProblemSpec spec = testing::random_problem(rng, o);
    const OracleComparison c = compare_with_oracle(spec, OptimalityKind::kEnergy);
    if (c.classification == Classification::kInconsistent) continue;
    ++compared;
    EXPECT_TRUE(c.agrees) << c.pi_difference << " " << c.gamma_difference;
    EXPECT_LE(c.oracle.max_imaginary, 1e-8);
  }
  EXPECT_GT(compared, 10);
}

TEST(Polynomial, ForcedCoefficients) {
  const PolynomialCounterexample r = polynomial_counterexample_check();
  EXPECT_NEAR(r.gamma1, 0.5, 1e-12);
  EXPECT_NEAR(r.gamma2, -0.125, 1e-12);
  EXPECT_TRUE(r.next_coefficient_is_linear);
  EXPECT_EQ(r.linear_power, 2);
  EXPECT_GT(std::abs(r.linear_slope), 1e-6);
  EXPECT_TRUE(r.exosystem_rejected);
}

}  // namespace
}  // namespace outreg

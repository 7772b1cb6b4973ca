#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "outreg/error.hpp"
#include "outreg/regulator.hpp"
#include "test_support.hpp"

namespace outreg {
namespace {

using testing::m1;
using testing::mat;

TEST(Classical, ScalarConstant) {
  const ClassicalSolution s = solve_classical(testing::scalar_square());
  EXPECT_EQ(s.classification, Classification::kUnique);
  EXPECT_NEAR(s.Pi(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(s.Gamma(0, 0), 1.0, 1e-12);
}

TEST(Classical, ScalarOscillator) {
  ProblemSpec s = testing::scalar_square();
  s.exo.Abar = testing::rotation_generator(1.0);
  s.exo.Cbar = mat({{1, 0}});
  s.coupling = Coupling::zero(1, 1, 2);
  const ClassicalSolution r = solve_classical(s);
  EXPECT_EQ(r.classification, Classification::kUnique);
  EXPECT_LE((r.Pi - mat({{1, 0}})).norm(), 1e-12);
  EXPECT_LE((r.Gamma - mat({{1, 1}})).norm(), 1e-12);
}

TEST(Classical, TwoReferencesOneDirection) {
  Exosystem exo;
  exo.Abar = Eigen::MatrixXd::Zero(2, 2);
  exo.Cbar = Eigen::MatrixXd::Identity(2, 2);
  const ProblemSpec s = ProblemSpec::make(Plant::make(m1(0.0), m1(1.0), mat({{1}, {1}})), exo);
  EXPECT_EQ(solve_classical(s).classification, Classification::kInconsistent);
  EXPECT_EQ(solve_energy_optimal(s).classification, Classification::kInconsistent);
}

TEST(EnergyOptimal, MinimumNormAllocation) {
  // gamma1 + 2 gamma2 = 1 with R = I: gamma = [1, 2] / 5, Pic = -1/5.
  const EnergyOptimalSolution s = solve_energy_optimal(testing::over_actuated(mat({{1, 2}}), -1.0));
  EXPECT_EQ(s.classification, Classification::kUnique);
  EXPECT_NEAR(s.Pi_u(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(s.Pic_u(0, 0), -0.2, 1e-12);
  EXPECT_NEAR(s.Gamma_u(0, 0), 0.2, 1e-12);
  EXPECT_NEAR(s.Gamma_u(1, 0), 0.4, 1e-12);
}

TEST(EnergyOptimal, EqualInputs) {
  const EnergyOptimalSolution s = solve_energy_optimal(testing::over_actuated(mat({{1, 1}}), -1.0));
  EXPECT_NEAR(s.Pi_u(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(s.Pic_u(0, 0), -0.5, 1e-12);
  EXPECT_LE((s.Gamma_u - mat({{0.5}, {0.5}})).norm(), 1e-12);
}

TEST(EnergyOptimal, NoDisturbanceNoControl) {
  const EnergyOptimalSolution s = solve_energy_optimal(testing::over_actuated(mat({{1, 1}}), 0.0));
  EXPECT_NEAR(s.Pi_u(0, 0), 1.0, 1e-12);
  EXPECT_LE(s.Gamma_u.norm(), 1e-12);
}

TEST(EnergyOptimal, WeightedAllocation) {
  ProblemSpec spec = testing::over_actuated(mat({{1, 1}}), -1.0);
  spec.weights.R = mat({{1, 0}, {0, 4}});
  const EnergyOptimalSolution s = solve_energy_optimal(spec);
  EXPECT_LE((s.Gamma_u - mat({{0.8}, {0.2}})).norm(), 1e-12);
  EXPECT_NEAR(s.Pic_u(0, 0), -0.8, 1e-12);
}

TEST(EnergyOptimal, GainIdentity) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 30; ++t) {
    testing::RandomOptions o;
    o.actuation = testing::Actuation::kOver;
    o.feedthrough = t % 2 == 0;
    o.random_weights = true;
    const ProblemSpec spec = testing::random_problem(rng, o);
    const EnergyOptimalSolution s = solve_energy_optimal(spec);
    if (s.classification == Classification::kInconsistent) continue;
    EXPECT_LE((s.Gamma_u - energy_optimal_gain(spec, s.Pic_u, s.Gammac_u)).norm(),
              1e-12 * (1.0 + s.Gamma_u.norm()));
  }
}

TEST(EnergyOptimal, RequiresImaginarySpectrum) {
  ProblemSpec s = testing::scalar_square();
  s.exo.Abar = m1(-1.0);
  try {
    solve_energy_optimal(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSpectrumViolation);
  }
}

TEST(ErrorOptimal, LeastSquaresTracking) {
  const ErrorOptimalSolution s = solve_error_optimal(testing::under_actuated());
  EXPECT_EQ(s.classification, Classification::kUnique);
  EXPECT_NEAR(s.Pi_y(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(s.Gamma_y(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(s.Pic_y(0, 0), 0.0, 1e-12);
}

TEST(ErrorOptimal, WeightedTracking) {
  ProblemSpec spec = testing::under_actuated();
  spec.weights.Q = mat({{3, 0}, {0, 1}});
  EXPECT_NEAR(solve_error_optimal(spec).Pi_y(0, 0), 0.75, 1e-12);
}

TEST(ErrorOptimal, SquareReducesToClassical) {
  const ErrorOptimalSolution s = solve_error_optimal(testing::scalar_square());
  EXPECT_NEAR(s.Pi_y(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(s.Gamma_y(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(s.Pic_y(0, 0), 0.0, 1e-12);
}

TEST(Lqt, ScalarClosedForm) {
  const ProblemSpec spec = testing::scalar_square();
  const LqtSolution s = solve_lqt(spec, 1.0, 1.0);
  EXPECT_NEAR(s.Pi(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(s.Pic(0, 0), -0.5, 1e-12);
  EXPECT_NEAR(s.Gamma(0, 0), 0.5, 1e-12);
  for (double rho : {0.1, 2.0, 10.0, 1e3}) {
    EXPECT_NEAR(solve_lqt(spec, 1.0, rho).Pi(0, 0), rho / (1.0 + rho), 1e-12);
  }
  for (double eps : {1e-3, 0.5, 3.0}) {
    EXPECT_NEAR(solve_lqt(spec, eps, 1.0).Pi(0, 0), 1.0 / (1.0 + eps), 1e-12);
  }
}

TEST(Lqt, AccurateAsRhoGrows) {
  // rho * ||Pi(1, rho) - Pi^u|| tends to a constant; a solver losing digits
  // to conditioning shows up as drift between rho = 1e5 and 1e7.
  std::mt19937_64 rng(404);
  int checked = 0;
  while (checked < 5) {
    testing::RandomOptions o;
    o.actuation = testing::Actuation::kOver;
    o.strict = true;
    const ProblemSpec s = testing::random_problem(rng, o);
    if (!check_stabilizability(s.plant).holds || !check_detectability(s.plant).holds) continue;
    const EnergyOptimalSolution e = solve_energy_optimal(s);
    if (e.classification != Classification::kUnique) continue;
    ++checked;
    const double a = 1e5 * (solve_lqt(s, 1.0, 1e5).Pi - e.Pi_u).norm();
    const double b = 1e7 * (solve_lqt(s, 1.0, 1e7).Pi - e.Pi_u).norm();
    EXPECT_NEAR(b, a, 1e-3 * a + 1e-9);
  }
}

TEST(Lqt, RefusesUndetectable) {
  ProblemSpec spec = testing::scalar_square();
  spec.plant.A = m1(1.0);
  spec.plant.C = m1(0.0);
  try {
    solve_lqt(spec, 1.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotDetectable);
  }
}

TEST(Lqt, RefusesNonPositiveWeights) {
  EXPECT_THROW(solve_lqt(testing::scalar_square(), 0.0, 1.0), Error);
  EXPECT_THROW(solve_lqt(testing::scalar_square(), 1.0, -1.0), Error);
}

TEST(VariationBasis, Examples) {
  const VariationBasis c =
      variation_basis(testing::over_actuated(mat({{1, 1}}), -1.0), VariationMode::kConstrained);
  ASSERT_EQ(c.basis.size(), 1u);
  EXPECT_NEAR(c.basis[0].dPi.norm(), 0.0, 1e-14);
  const double s = c.basis[0].dGamma(0, 0) > 0 ? 1.0 : -1.0;
  EXPECT_LE((s * c.basis[0].dGamma - mat({{1}, {-1}}) / std::sqrt(2.0)).norm(), 1e-12);

  const VariationBasis u = variation_basis(
      testing::over_actuated(m1(1.0), 0.0), VariationMode::kUnconstrained);
  ASSERT_EQ(u.basis.size(), 1u);
  EXPECT_NEAR(std::abs(u.basis[0].dPi(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(u.basis[0].dGamma(0, 0), 0.0, 1e-14);

  EXPECT_TRUE(variation_basis(testing::scalar_square(), VariationMode::kConstrained).basis.empty());
}

TEST(VariationBasis, OrthonormalAndFeasible) {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 40; ++t) {
    testing::RandomOptions o;
    o.feedthrough = t % 3 == 0;
    const ProblemSpec spec = testing::random_problem(rng, o);
    for (auto mode : {VariationMode::kConstrained, VariationMode::kUnconstrained}) {
      const VariationBasis b = variation_basis(spec, mode);
      for (std::size_t i = 0; i < b.basis.size(); ++i) {
        EXPECT_LE(variation_residual(spec, b.basis[i], mode), 1e-10);
        for (std::size_t j = 0; j < b.basis.size(); ++j) {
          const double dot = vec(b.basis[i].dPi).dot(vec(b.basis[j].dPi)) +
                             vec(b.basis[i].dGamma).dot(vec(b.basis[j].dGamma));
          EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-10);
        }
      }
    }
  }
}

TEST(Regulator, ClassificationsMatchConditionCheckers) {
  std::mt19937_64 rng(23);
  int energy_checked = 0, error_checked = 0;
  for (int t = 0; t < 120; ++t) {
    testing::RandomOptions o;
    o.feedthrough = t % 4 == 0;
    o.manufactured = t % 2 == 0;
    const ProblemSpec spec = testing::random_problem(rng, o);
    const EnergyOptimalSolution e = solve_energy_optimal(spec);
    const ClassicalSolution c = solve_classical(spec);
    EXPECT_EQ(c.classification == Classification::kInconsistent,
              e.classification == Classification::kInconsistent);
    if (e.classification != Classification::kInconsistent) {
      ++energy_checked;
      EXPECT_EQ(e.classification == Classification::kUnique,
                check_obsv_condition(spec.plant, spec.exo).holds);
      EXPECT_LE(testing::energy_residual(spec, e), 1e-8);
      // The output constraint holds exactly.
      const auto& p = spec.plant;
      EXPECT_LE((p.C * e.Pi_u + p.D * e.Gamma_u + spec.coupling.Dd - spec.exo.Cbar).norm(),
                1e-8 * (1.0 + spec.exo.Cbar.norm()));
      // Constrained variations keep the classical equations satisfied.
      for (const auto& v : variation_basis(spec, VariationMode::kConstrained).basis) {
        EXPECT_LE(testing::classical_residual(spec, e.Pi_u + v.dPi, e.Gamma_u + v.dGamma), 1e-8);
      }
    }
    const ErrorOptimalSolution y = solve_error_optimal(spec);
    if (y.classification != Classification::kInconsistent) {
      ++error_checked;
      EXPECT_EQ(y.classification == Classification::kUnique,
                check_nonresonance(spec.plant, spec.exo, ActuationMode::kUnder).holds);
      EXPECT_LE(testing::error_residual(spec, y), 1e-8);
    }
  }
  EXPECT_GT(energy_checked, 30);
  EXPECT_GT(error_checked, 30);
}

TEST(Regulator, SquareUniqueCaseCollapses) {
  std::mt19937_64 rng(24);
  int checked = 0;
  for (int t = 0; t < 60; ++t) {
    testing::RandomOptions o;
    o.actuation = testing::Actuation::kSquare;
    o.feedthrough = t % 3 == 0;
    const ProblemSpec spec = testing::random_problem(rng, o);
    const ClassicalSolution c = solve_classical(spec);
    if (c.classification == Classification::kInconsistent) continue;
    if (!variation_basis(spec, VariationMode::kConstrained).basis.empty()) continue;
    const EnergyOptimalSolution e = solve_energy_optimal(spec);
    const ErrorOptimalSolution y = solve_error_optimal(spec);
    EXPECT_LE((e.Pi_u - c.Pi).norm(), 1e-8 * (1.0 + c.Pi.norm()));
    EXPECT_LE((e.Gamma_u - c.Gamma).norm(), 1e-8 * (1.0 + c.Gamma.norm()));
    EXPECT_LE((y.Pi_y - c.Pi).norm(), 1e-8 * (1.0 + c.Pi.norm()));
    EXPECT_LE((y.Gamma_y - c.Gamma).norm(), 1e-8 * (1.0 + c.Gamma.norm()));
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(Regulator, StatePenaltyAndLqtResiduals) {
  std::mt19937_64 rng(25);
  for (int t = 0; t < 40; ++t) {
    testing::RandomOptions o;
    o.state_penalty = true;
    o.feedthrough = t % 2 == 1;
    o.random_weights = true;
    const ProblemSpec spec = testing::random_problem(rng, o);
    const EnergyOptimalSolution e = solve_energy_optimal(spec);
    if (e.classification != Classification::kInconsistent) {
      EXPECT_LE(testing::energy_residual(spec, e), 1e-8);
    }
    try {
      const LqtSolution l = solve_lqt(spec, 0.7, 3.0);
      EXPECT_EQ(l.classification, Classification::kUnique);
      EXPECT_LE(testing::lqt_residual(spec, l), 1e-8);
    } catch (const Error& err) {
      EXPECT_TRUE(err.code() == ErrorCode::kNotDetectable ||
                  err.code() == ErrorCode::kNotStabilizable);
    }
  }
}

}  // namespace
}  // namespace outreg

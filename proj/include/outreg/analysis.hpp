#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "outreg/error.hpp"
#include "outreg/kernels.hpp"
#include "outreg/model.hpp"
#include "outreg/regulator.hpp"

namespace outreg {

// ---------------------------------------------------------------------------
// Stationary power of quadratic forms of exosystem signals.

enum class PowerMethod { kAnalytic, kNumeric };

struct PowerContribution {
  Complex lambda_i;
  Complex lambda_j;
  Complex contribution;
};

struct PowerReport {
  double value = 0.0;
  std::vector<PowerContribution> contributions;
  PowerMethod method = PowerMethod::kAnalytic;
};

/// lim (1/T) int_0^T (M xbar)^T S (M xbar) dt, exact by eigen-expansion:
/// with xbar(t) = sum_i c_i v_i e^{lambda_i t}, only pairs with
/// lambda_i + lambda_j = 0 survive the average.
/// Throws Error(kSpectrumViolation) for eigenvalues off the imaginary axis,
/// Error(kNotSemisimple) for defective Abar.
PowerReport stationary_power_analytic(const Eigen::Ref<const Eigen::MatrixXd>& M,
                                      const Eigen::Ref<const Eigen::MatrixXd>& S,
                                      const Exosystem& exo,
                                      const Eigen::Ref<const Eigen::VectorXd>& xbar0);

/// Finite-horizon time average over [0, horizon] by Simpson quadrature.
PowerReport stationary_power_numeric(const Eigen::Ref<const Eigen::MatrixXd>& M,
                                     const Eigen::Ref<const Eigen::MatrixXd>& S,
                                     const Exosystem& exo,
                                     const Eigen::Ref<const Eigen::VectorXd>& xbar0,
                                     double horizon, long steps,
                                     kernels::Exec exec = kernels::Exec::kParallel);

/// Real initial exostate whose eigenbasis coordinates are all ones, so every
/// exosystem mode is excited.
Eigen::VectorXd exciting_initial_state(const Exosystem& exo);

// ---------------------------------------------------------------------------
// Optimality certification.

enum class OptimalityKind { kEnergy, kError };

/// Power of the stationary cost of the admissible solution (Pi xbar, Gamma xbar):
///   energy: 1/2 P(Gamma xbar, R) + 1/2 P(Pi xbar, Qx)
///   error:  1/2 P((C Pi + D Gamma + Dd - Cbar) xbar, Q)
double stationary_cost_power(const ProblemSpec& spec, OptimalityKind kind,
                             const Eigen::MatrixXd& Pi, const Eigen::MatrixXd& Gamma,
                             const Eigen::Ref<const Eigen::VectorXd>& xbar0);

/// Second-variation power 1/2 P(dGamma xbar, R) (+ Qx term) for energy, or
/// 1/2 P((C dPi + D dGamma) xbar, Q) for error. Throws
/// Error(kInfeasibleVariation) when the variation violates its homogeneous
/// equations (constrained ones for energy).
double power_difference(const ProblemSpec& spec, OptimalityKind kind, const Variation& variation,
                        const Eigen::Ref<const Eigen::VectorXd>& xbar0);

/// P(candidate) - P(optimum) for two admissible pairs.
double candidate_power_gap(const ProblemSpec& spec, OptimalityKind kind,
                           const Eigen::MatrixXd& Pi_candidate,
                           const Eigen::MatrixXd& Gamma_candidate,
                           const Eigen::MatrixXd& Pi_optimum,
                           const Eigen::MatrixXd& Gamma_optimum,
                           const Eigen::Ref<const Eigen::VectorXd>& xbar0);

inline constexpr double kProbeNegativeTol = 1e-9;
inline constexpr double kProbePositiveTol = 1e-10;

struct ProbeReport {
  int trials = 0;
  int basis_dimension = 0;
  bool uniqueness_condition = false;
  double min_delta = kInfiniteMargin;       // over direct power differences
  double max_first_variation = 0.0;         // |direct - second variation|
  bool all_nonnegative = true;
  bool strictly_positive = true;
};

/// Thrown by optimality_probe with the variation that broke the bound.
class ProbeFailed : public Error {
 public:
  ProbeFailed(const std::string& what, Variation variation, double delta)
      : Error(ErrorCode::kProbeFailed, what), variation_(std::move(variation)), delta_(delta) {}
  const Variation& variation() const { return variation_; }
  double delta() const { return delta_; }

 private:
  Variation variation_;
  double delta_;
};

/// Samples `trials` random unit combinations of the variation basis
/// (constrained for energy, unconstrained for error), perturbs the base pair
/// and measures the change of the stationary cost power. Every difference
/// must be >= -kProbeNegativeTol; when the uniqueness condition holds, every
/// difference must be >= kProbePositiveTol.
ProbeReport optimality_probe(const ProblemSpec& spec, OptimalityKind kind,
                             const Eigen::MatrixXd& Pi, const Eigen::MatrixXd& Gamma,
                             int trials, std::uint64_t seed,
                             std::optional<Eigen::VectorXd> xbar0 = std::nullopt);

// ---------------------------------------------------------------------------
// Convergence of the tracking solution towards the optimal regulators.

enum class ConvergenceMode { kRhoToInfinity, kEpsToZero };

struct ConvergenceReport {
  ConvergenceMode mode = ConvergenceMode::kRhoToInfinity;
  std::vector<double> grid;
  std::vector<double> pi_errors;
  std::vector<double> gamma_errors;
  /// Least-squares slopes of log error against log penalty strength
  /// (rho, or 1/eps), so both studies approach -1. NaN when fewer than two
  /// points lie above the solver floor.
  double pi_slope = 0.0;
  double gamma_slope = 0.0;
};

inline constexpr double kSolverFloor = 1e-11;

/// Slope of log(errors) over log(abscissa), skipping errors below kSolverFloor.
double fit_loglog_slope(const std::vector<double>& abscissa, const std::vector<double>& errors);

ConvergenceReport convergence_study(const ProblemSpec& spec, ConvergenceMode mode,
                                    const std::vector<double>& grid,
                                    kernels::Exec exec = kernels::Exec::kParallel);

// ---------------------------------------------------------------------------
// Independent per-eigenvalue oracle.

struct OraclePair {
  Eigen::MatrixXd Pi;
  Eigen::MatrixXd Gamma;
  double max_imaginary = 0.0;  // largest imaginary part discarded on recombination
};

/// Solves, for each exosystem eigenpair (lambda_i, v_i), the finite
/// dimensional equality-constrained quadratic program in the columns
/// (pi_i, gamma_i) = (Pi v_i, Gamma v_i) through its KKT system, then
/// recombines Pi = Re([pi_i] V^{-1}). Throws Error(kInconsistent) when the
/// constraints admit no solution.
OraclePair kkt_oracle(const ProblemSpec& spec, OptimalityKind kind);

/// ||X - Y||_F / max(1, ||Y||_F).
double relative_difference(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

struct OracleComparison {
  Classification classification = Classification::kUnique;  // of the solver
  OraclePair oracle;
  Eigen::MatrixXd Pi;  // solver output
  Eigen::MatrixXd Gamma;
  double pi_difference = 0.0;
  double gamma_difference = 0.0;
  /// Compared quantity when the solver is Underdetermined: cost power for
  /// energy, C Pi + D Gamma for error.
  double invariant_difference = 0.0;
  bool agrees = false;
};

/// Runs the matching solver and kkt_oracle. Unique solutions must agree
/// entrywise; underdetermined ones only in the quantity fixed by optimality.
/// An Inconsistent solver result is returned without calling the oracle.
OracleComparison compare_with_oracle(const ProblemSpec& spec, OptimalityKind kind,
                                     double tol = 1e-8);

// ---------------------------------------------------------------------------
// Polynomial reference without a stationary optimum.

struct PolynomialCounterexample {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  bool next_coefficient_is_linear = false;
  int linear_power = -1;       // power of T whose coefficient is affine in gamma3
  double linear_slope = 0.0;   // d(coefficient)/d(gamma3)
  bool exosystem_rejected = false;
};

/// dx/dt = x - u tracking the first component of xbar = [t^2/2, t, 1]. The
/// finite-horizon cost is expanded exactly as a polynomial in T and its
/// coefficients are minimized from the highest power downwards.
PolynomialCounterexample polynomial_counterexample_check();

}  // namespace outreg

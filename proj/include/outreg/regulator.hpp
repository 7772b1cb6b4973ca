#pragma once

#include <vector>

#include <Eigen/Dense>

#include "outreg/matrixeq.hpp"
#include "outreg/model.hpp"

namespace outreg {

/// A stationary variation (dPi, dGamma): dPi Abar = A dPi + B dGamma.
struct Variation {
  Eigen::MatrixXd dPi;
  Eigen::MatrixXd dGamma;
};

/// Pi Abar = A Pi + B Gamma + Ed,  Cbar = C Pi + D Gamma + Dd.
struct ClassicalSolution {
  Eigen::MatrixXd Pi;
  Eigen::MatrixXd Gamma;
  Classification classification = Classification::kUnique;
  std::vector<Variation> nullspace;
  double residual = 0.0;
};

/// Energy-optimal regulator equations, with state penalty Qx and feedthrough D:
///   Pic Abar = -Qx Pi - A^T Pic + C^T Gammac
///   Pi  Abar =  A Pi + B Gamma + Ed
///   Cbar     =  C Pi + D Gamma + Dd
/// with Gamma = R^{-1} (-B^T Pic + D^T Gammac).
///
/// `classification` refers to the pair (Pi, Gamma) that defines the control;
/// the costate pair (Pic, Gammac) may be non-unique even when the control is,
/// which `triple_classification` records.
struct EnergyOptimalSolution {
  Eigen::MatrixXd Pi_u;
  Eigen::MatrixXd Pic_u;
  Eigen::MatrixXd Gammac_u;
  Eigen::MatrixXd Gamma_u;
  Classification classification = Classification::kUnique;
  Classification triple_classification = Classification::kUnique;
  /// Orthonormal basis of the (dPi, dGamma) directions along which optimal
  /// solutions are not unique.
  std::vector<Variation> nullspace;
  double residual = 0.0;
};

/// Error-optimal regulator equations with feedthrough D, e = C Pi + D Gamma + Dd - Cbar:
///   Pi  Abar = A Pi + B Gamma + Ed
///   Pic Abar = -A^T Pic - C^T Q e
///   0        = -B^T Pic - D^T Q e
struct ErrorOptimalSolution {
  Eigen::MatrixXd Pi_y;
  Eigen::MatrixXd Pic_y;
  Eigen::MatrixXd Gamma_y;
  Classification classification = Classification::kUnique;
  std::vector<Variation> nullspace;
  double residual = 0.0;
};

/// Stationary linear-quadratic tracking with cost weights rho Q and eps R:
///   Pi  Abar = A Pi + B Gamma + Ed
///   Pic Abar = -A^T Pic - Qx Pi - C^T rho Q e
///   0        = eps R Gamma + B^T Pic + D^T rho Q e
struct LqtSolution {
  Eigen::MatrixXd Pi;
  Eigen::MatrixXd Pic;
  Eigen::MatrixXd Gamma;
  double eps = 1.0;
  double rho = 1.0;
  Classification classification = Classification::kUnique;
  double residual = 0.0;
};

enum class VariationMode { kConstrained, kUnconstrained };

struct VariationBasis {
  VariationMode mode = VariationMode::kConstrained;
  std::vector<Variation> basis;
};

// The equation sets as LinearMatrixSystem instances. Unknown order:
//   classical: Pi, Gamma          energy: Pi, Pic, Gammac
//   error:     Pi, Pic, Gamma     lqt:    Pi, Pic, Gamma
LinearMatrixSystem classical_system(const ProblemSpec& spec);
LinearMatrixSystem energy_optimal_system(const ProblemSpec& spec);
LinearMatrixSystem error_optimal_system(const ProblemSpec& spec);
LinearMatrixSystem lqt_system(const ProblemSpec& spec, double eps, double rho);
LinearMatrixSystem variation_system(const ProblemSpec& spec, VariationMode mode);

ClassicalSolution solve_classical(const ProblemSpec& spec);
EnergyOptimalSolution solve_energy_optimal(const ProblemSpec& spec);
ErrorOptimalSolution solve_error_optimal(const ProblemSpec& spec);

/// Throws Error(kNotDetectable) if (C, A) is not detectable,
/// Error(kNotStabilizable) if (A, B) is not stabilizable.
LqtSolution solve_lqt(const ProblemSpec& spec, double eps, double rho);

VariationBasis variation_basis(const ProblemSpec& spec, VariationMode mode);

/// Gamma = R^{-1} (-B^T Pic + D^T Gammac).
Eigen::MatrixXd energy_optimal_gain(const ProblemSpec& spec, const Eigen::MatrixXd& Pic,
                                    const Eigen::MatrixXd& Gammac);

/// Residual of the homogeneous variation equations (plus C dPi + D dGamma = 0
/// for constrained mode), relative to 1 + ||(dPi, dGamma)||.
double variation_residual(const ProblemSpec& spec, const Variation& v, VariationMode mode);

}  // namespace outreg

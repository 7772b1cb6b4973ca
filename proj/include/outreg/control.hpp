#pragma once

#include <optional>

#include <Eigen/Dense>

#include "outreg/model.hpp"

namespace outreg {

struct FeedbackGain {
  Eigen::MatrixXd K;  // m x n
  Eigen::MatrixXd X;  // Riccati solution, empty for user-supplied gains
  double spectral_abscissa = 0.0;  // max Re eig(A - B K)
  double riccati_residual = 0.0;

  /// Wraps a given gain; throws Error(kDimensionMismatch) on bad shape.
  static FeedbackGain from_matrix(const Plant& plant, Eigen::MatrixXd K);
};

/// LQR gain K = Rs^{-1} B^T X from the stabilizing solution of
///   A^T X + X A - X B Rs^{-1} B^T X + Qs = 0,
/// taken from the stable invariant subspace of the Hamiltonian matrix.
/// Qs and Rs default to identities.
FeedbackGain stabilizing_gain(const Plant& plant,
                              std::optional<Eigen::MatrixXd> Qs = std::nullopt,
                              std::optional<Eigen::MatrixXd> Rs = std::nullopt);

/// Residual norm of the Riccati equation at X.
double riccati_residual(const Plant& plant, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Qs,
                        const Eigen::MatrixXd& Rs);

/// Closed loop under u = -K x + (K Pi + Gamma) xbar on the state [x; xbar]:
///   d/dt [x; xbar] = [[A - B K, B (K Pi + Gamma) + Ed], [0, Abar]] [x; xbar]
///   y    = (C - D K) x + (D (K Pi + Gamma) + Dd) xbar
///   ybar = Cbar xbar
struct ClosedLoop {
  Eigen::MatrixXd M;           // (n + nbar) x (n + nbar)
  Eigen::MatrixXd K;           // m x n
  Eigen::MatrixXd feedforward; // K Pi + Gamma, m x nbar
  Eigen::MatrixXd Pi;
  Eigen::MatrixXd Gamma;
  Eigen::MatrixXd Cy;          // C - D K
  Eigen::MatrixXd Dy;          // D (K Pi + Gamma) + Dd
  Eigen::MatrixXd Cbar;
  double spectral_abscissa = 0.0;  // of A - B K
  /// || (A - B K) Pi + B (K Pi + Gamma) + Ed - Pi Abar ||_F; zero up to
  /// rounding when (Pi, Gamma) satisfies the state regulator equation.
  double invariance_residual = 0.0;

  int n() const { return static_cast<int>(K.cols()); }
  int m() const { return static_cast<int>(K.rows()); }
  int nbar() const { return static_cast<int>(M.rows()) - n(); }
  int p() const { return static_cast<int>(Cy.rows()); }

  Eigen::VectorXd control(const Eigen::VectorXd& x, const Eigen::VectorXd& xbar) const {
    return -K * x + feedforward * xbar;
  }
  Eigen::VectorXd output(const Eigen::VectorXd& x, const Eigen::VectorXd& xbar) const {
    return Cy * x + Dy * xbar;
  }
};

/// Throws Error(kNotStabilizing) unless A - B K is Hurwitz.
ClosedLoop closed_loop(const Plant& plant, const Exosystem& exo, const Coupling& coupling,
                       const FeedbackGain& gain, const Eigen::MatrixXd& Pi,
                       const Eigen::MatrixXd& Gamma);

}  // namespace outreg

#include "outreg/control.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/Jacobi>
#include <Eigen/LU>

#include "outreg/error.hpp"

namespace outreg {

namespace {

void expect(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kDimensionMismatch, what);
}

// Moves the diagonal entries with negative real part to the leading
// positions of a complex Schur form T = U^H H U, by adjacent swaps.
void reorder_stable_first(Eigen::MatrixXcd& T, Eigen::MatrixXcd& U) {
  const Eigen::Index n = T.rows();
  for (Eigen::Index pass = 0; pass < n; ++pass) {
    bool swapped = false;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      if (T(k, k).real() < 0.0 || T(k + 1, k + 1).real() >= 0.0) continue;
      // First column of the rotation is the eigenvector of the 2x2 block
      // belonging to T(k+1, k+1).
      Eigen::JacobiRotation<Complex> g;
      g.makeGivens(T(k, k + 1), T(k + 1, k + 1) - T(k, k));
      T.applyOnTheLeft(k, k + 1, g.adjoint());
      T.applyOnTheRight(k, k + 1, g);
      U.applyOnTheRight(k, k + 1, g);
      T(k + 1, k) = 0.0;
      swapped = true;
    }
    if (!swapped) break;
  }
}

}  // namespace

FeedbackGain FeedbackGain::from_matrix(const Plant& plant, Eigen::MatrixXd K) {
  expect(K.rows() == plant.m() && K.cols() == plant.n(), "K must be m x n");
  FeedbackGain g;
  g.K = std::move(K);
  g.spectral_abscissa = outreg::spectral_abscissa(plant.A - plant.B * g.K);
  return g;
}

double riccati_residual(const Plant& plant, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Qs,
                        const Eigen::MatrixXd& Rs) {
  const Eigen::MatrixXd& A = plant.A;
  const Eigen::MatrixXd& B = plant.B;
  const Eigen::MatrixXd res =
      A.transpose() * X + X * A - X * B * Rs.llt().solve(B.transpose() * X) + Qs;
  return res.norm();
}

FeedbackGain stabilizing_gain(const Plant& plant, std::optional<Eigen::MatrixXd> Qs,
                              std::optional<Eigen::MatrixXd> Rs) {
  validate_plant(plant);
  const int n = plant.n(), m = plant.m();
  const Eigen::MatrixXd Q = Qs ? *Qs : Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd R = Rs ? *Rs : Eigen::MatrixXd::Identity(m, m);
  expect(Q.rows() == n && Q.cols() == n, "Qs must be n x n");
  expect(R.rows() == m && R.cols() == m, "Rs must be m x m");
  if (!(min_symmetric_eigenvalue(R) > 0.0) || (R - R.transpose()).norm() > 1e-12 * (1 + R.norm())) {
    throw Error(ErrorCode::kInvalidWeights, "Rs must be symmetric positive definite");
  }
  if (!check_stabilizability(plant).holds) {
    throw Error(ErrorCode::kNotStabilizable, "(A, B) is not stabilizable");
  }

  Eigen::MatrixXd H(2 * n, 2 * n);
  H << plant.A, -plant.B * R.llt().solve(plant.B.transpose()), -Q, -plant.A.transpose();

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(H.cast<Complex>());
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumericalFailure, "Schur decomposition of the Hamiltonian failed");
  }
  Eigen::MatrixXcd T = schur.matrixT();
  Eigen::MatrixXcd U = schur.matrixU();

  const double tol = 1e-9 * (1.0 + H.norm());
  for (Eigen::Index k = 0; k < T.rows(); ++k) {
    if (std::abs(T(k, k).real()) <= tol) {
      throw Error(ErrorCode::kImaginaryAxisEigenvalues,
                  "Hamiltonian matrix has eigenvalues on the imaginary axis");
    }
  }
  reorder_stable_first(T, U);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(T(k, k).real() < 0.0)) {
      throw Error(ErrorCode::kNumericalFailure, "stable invariant subspace has wrong dimension");
    }
  }

  const Eigen::MatrixXcd X1 = U.topLeftCorner(n, n);
  const Eigen::MatrixXcd X2 = U.bottomLeftCorner(n, n);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(X1);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kNumericalFailure, "stable subspace is not a graph over x");
  }
  // X = X2 X1^{-1}, via X1^T X^T = X2^T.
  const Eigen::MatrixXcd Xc = X1.transpose().fullPivLu().solve(X2.transpose()).transpose();
  Eigen::MatrixXd X = Xc.real();
  X = 0.5 * (X + X.transpose()).eval();

  FeedbackGain g;
  g.X = X;
  g.K = R.llt().solve(plant.B.transpose() * X);
  g.spectral_abscissa = outreg::spectral_abscissa(plant.A - plant.B * g.K);
  g.riccati_residual = riccati_residual(plant, X, Q, R);
  if (!(g.spectral_abscissa < -1e-9)) {
    throw Error(ErrorCode::kNumericalFailure, "Riccati gain does not stabilize");
  }
  return g;
}

ClosedLoop closed_loop(const Plant& plant, const Exosystem& exo, const Coupling& coupling,
                       const FeedbackGain& gain, const Eigen::MatrixXd& Pi,
                       const Eigen::MatrixXd& Gamma) {
  const int n = plant.n(), m = plant.m(), nbar = exo.nbar();
  expect(gain.K.rows() == m && gain.K.cols() == n, "K must be m x n");
  expect(Pi.rows() == n && Pi.cols() == nbar, "Pi must be n x nbar");
  expect(Gamma.rows() == m && Gamma.cols() == nbar, "Gamma must be m x nbar");
  expect(coupling.Ed.rows() == n && coupling.Ed.cols() == nbar, "Ed must be n x nbar");
  expect(coupling.Dd.rows() == plant.p() && coupling.Dd.cols() == nbar, "Dd must be p x nbar");

  ClosedLoop cl;
  cl.K = gain.K;
  cl.Pi = Pi;
  cl.Gamma = Gamma;
  const Eigen::MatrixXd Acl = plant.A - plant.B * gain.K;
  cl.spectral_abscissa = outreg::spectral_abscissa(Acl);
  if (!(cl.spectral_abscissa < 0.0)) {
    std::ostringstream os;
    os << "A - B K has spectral abscissa " << cl.spectral_abscissa;
    throw Error(ErrorCode::kNotStabilizing, os.str());
  }
  cl.feedforward = gain.K * Pi + Gamma;
  const Eigen::MatrixXd coupling_block = plant.B * cl.feedforward + coupling.Ed;

  cl.M = Eigen::MatrixXd::Zero(n + nbar, n + nbar);
  cl.M.topLeftCorner(n, n) = Acl;
  cl.M.topRightCorner(n, nbar) = coupling_block;
  cl.M.bottomRightCorner(nbar, nbar) = exo.Abar;

  cl.Cy = plant.C - plant.D * gain.K;
  cl.Dy = plant.D * cl.feedforward + coupling.Dd;
  cl.Cbar = exo.Cbar;
  cl.invariance_residual = (Acl * Pi + coupling_block - Pi * exo.Abar).norm();
  return cl;
}

}  // namespace outreg

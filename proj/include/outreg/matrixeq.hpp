#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "outreg/kernels.hpp"
#include "outreg/linalg.hpp"
#include "outreg/model.hpp"

namespace outreg {

/// Coupled linear equations in several unknown matrices,
///   sum_k  scale_k * L_k X_{u(k)} R_k  =  rhs       (one per block equation),
/// solved through column-stacked vectorization:
///   vec(L X R) = (R^T kron L) vec(X).
class LinearMatrixSystem {
 public:
  struct Unknown {
    std::string name;
    int rows = 0;
    int cols = 0;
  };

  /// An empty `left` or `right` stands for the identity.
  struct Term {
    Eigen::MatrixXd left;
    int unknown = 0;
    Eigen::MatrixXd right;
    double scale = 1.0;
  };

  struct Equation {
    std::string name;
    std::vector<Term> terms;
    Eigen::MatrixXd rhs;
  };

  int add_unknown(std::string name, int rows, int cols);
  int add_equation(std::string name, Eigen::MatrixXd rhs);
  void add_term(int equation, Eigen::MatrixXd left, int unknown, Eigen::MatrixXd right,
                double scale = 1.0);

  /// left * X
  void add_left(int equation, const Eigen::MatrixXd& left, int unknown, double scale = 1.0) {
    add_term(equation, left, unknown, Eigen::MatrixXd(), scale);
  }
  /// X * right
  void add_right(int equation, int unknown, const Eigen::MatrixXd& right, double scale = 1.0) {
    add_term(equation, Eigen::MatrixXd(), unknown, right, scale);
  }

  const std::vector<Unknown>& unknowns() const { return unknowns_; }
  const std::vector<Equation>& equations() const { return equations_; }

  Eigen::Index unknown_count() const;
  Eigen::Index equation_count() const;
  Eigen::Index offset(int unknown) const;

  /// Throws Error(kDimensionMismatch) when a term does not compose.
  void validate() const;

  /// Evaluates every block equation's left-hand side minus its constant.
  std::vector<Eigen::MatrixXd> evaluate_residuals(
      const std::vector<Eigen::MatrixXd>& values) const;

  /// || stacked residual ||_2 / (1 + || stacked rhs ||_2), computed block by
  /// block without the vectorized matrix.
  double relative_residual(const std::vector<Eigen::MatrixXd>& values) const;

  std::vector<Eigen::MatrixXd> split(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd stack(const std::vector<Eigen::MatrixXd>& values) const;

 private:
  std::vector<Unknown> unknowns_;
  std::vector<Equation> equations_;
};

struct AssembledSystem {
  Eigen::MatrixXd M;
  Eigen::VectorXd b;
};

AssembledSystem assemble(const LinearMatrixSystem& system,
                         kernels::Exec exec = kernels::Exec::kParallel);

enum class Classification { kUnique, kUnderdetermined, kInconsistent };

const char* to_string(Classification c);

/// Inconsistent iff ||M x - b|| > kConsistencyTol * (1 + ||b||) for the
/// least-squares solution x.
inline constexpr double kConsistencyTol = 1e-8;

struct SolveOutcome {
  Classification classification = Classification::kUnique;
  /// One matrix per unknown; minimum norm when underdetermined.
  std::vector<Eigen::MatrixXd> solution;
  /// Orthonormal (in vectorized form) basis of the homogeneous solutions,
  /// one tuple of matrices per basis element.
  std::vector<std::vector<Eigen::MatrixXd>> nullspace;
  Eigen::VectorXd x;
  Eigen::MatrixXd null_vectors;
  double residual = 0.0;           // ||M x - b||
  double relative_residual = 0.0;  // residual / (1 + ||b||)
  int rank = 0;
  Eigen::Index unknowns = 0;
};

/// Dense SVD of the assembled matrix, rank by the shared relative
/// threshold, minimum-norm solution by the truncated pseudoinverse.
SolveOutcome solve(const LinearMatrixSystem& system);
SolveOutcome solve_assembled(const LinearMatrixSystem& system, const AssembledSystem& assembled);

/// Kronecker-sum operator (Abar^T (+) A) acting on vec(X) for A X + X Abar.
Eigen::MatrixXd sylvester_operator(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                   const Eigen::Ref<const Eigen::MatrixXd>& Abar);

struct PerturbationBound {
  double bound = 0.0;
  double actual = 0.0;
  bool holds = false;
};

/// Compares || (M + eps Delta)^{-1} b - M^{-1} b ||_2 against
///   eps ||M^{-1}|| ||Delta|| ||x|| / (1 - eps ||M^{-1} Delta||).
/// Throws Error(kPreconditionViolated) if M is singular or
/// eps >= 1 / ||M^{-1} Delta||.
PerturbationBound verify_perturbation_bound(const Eigen::Ref<const Eigen::MatrixXd>& M,
                                            const Eigen::Ref<const Eigen::MatrixXd>& Delta,
                                            const Eigen::Ref<const Eigen::VectorXd>& b,
                                            double eps);

/// Abar = V diag(values) V^{-1}. Real eigenvalues come first with real
/// eigenvectors, then complex eigenvalues with positive imaginary part each
/// followed by its conjugate (conjugate eigenvector columns).
struct ExoEigenbasis {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd V;
  Eigen::MatrixXcd Vinv;
};

/// Throws Error(kNotSemisimple) when the eigenvectors do not span.
ExoEigenbasis exosystem_eigenbasis(const Exosystem& exo);

}  // namespace outreg

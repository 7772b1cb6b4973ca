#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "outreg/linalg.hpp"

namespace outreg {

/// Plant  dx/dt = A x + B u + Ed xbar,  y = C x + D u + Dd xbar.
struct Plant {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::MatrixXd D;  // p x m, zero when omitted

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int p() const { return static_cast<int>(C.rows()); }

  /// Fills D with zeros of the right shape.
  static Plant make(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c,
                    std::optional<Eigen::MatrixXd> d = std::nullopt);
};

/// Autonomous signal generator  dxbar/dt = Abar xbar,  ybar = Cbar xbar.
struct Exosystem {
  Eigen::MatrixXd Abar;
  Eigen::MatrixXd Cbar;
  std::optional<Eigen::VectorXd> xbar0;

  int nbar() const { return static_cast<int>(Abar.rows()); }
};

struct Coupling {
  Eigen::MatrixXd Ed;  // n x nbar
  Eigen::MatrixXd Dd;  // p x nbar

  static Coupling zero(int n, int p, int nbar);
};

struct Weights {
  Eigen::MatrixXd Q;   // p x p, SPD
  Eigen::MatrixXd R;   // m x m, SPD
  Eigen::MatrixXd Qx;  // n x n, PSD
  double rho = 1.0;
  double epsilon = 1.0;

  /// Q = I, R = I, Qx = 0, rho = epsilon = 1.
  static Weights identity(int n, int m, int p);
};

struct ProblemSpec {
  Plant plant;
  Exosystem exo;
  Coupling coupling;
  Weights weights;
  std::optional<Eigen::VectorXd> x0;

  int n() const { return plant.n(); }
  int m() const { return plant.m(); }
  int p() const { return plant.p(); }
  int nbar() const { return exo.nbar(); }

  /// Builds a spec with zero coupling and identity weights.
  static ProblemSpec make(Plant plant, Exosystem exo);
};

/// Throws Error(kDimensionMismatch | kNonFiniteEntry) naming the offending
/// matrices.
void validate_dimensions(const ProblemSpec& spec);
void validate_plant(const Plant& plant);
void validate_exosystem(const Exosystem& exo);

/// Q and R symmetric positive definite, Qx symmetric positive semidefinite.
/// Throws Error(kInvalidWeights).
void validate_weights(const Weights& w);

inline constexpr double kInfiniteMargin = std::numeric_limits<double>::infinity();

/// Outcome of a mode-by-mode PBH test. `margin` is the smallest scaled
/// singular value over the tested eigenvalues; holds == (margin > kRankRelTol).
struct PbhResult {
  bool holds = true;
  double margin = kInfiniteMargin;
};

/// (A, B) stabilizable: rank [lambda I - A, B] = n for every Re(lambda) >= 0.
PbhResult check_stabilizability(const Plant& plant);

/// (C, A) detectable: rank [lambda I - A^T, C^T] = n for every Re(lambda) >= 0.
PbhResult check_detectability(const Plant& plant);

struct ExoEigenRecord {
  Complex value;
  double abs_real = 0.0;
  int algebraic = 0;
  int geometric = 0;
};

struct ExoSpectrumResult {
  bool holds = true;
  double imag_axis_tol = 0.0;
  std::vector<ExoEigenRecord> records;
};

/// Every eigenvalue on the imaginary axis and semisimple.
ExoSpectrumResult check_exosystem_spectrum(const Exosystem& exo);

/// Rosenbrock system matrix [[sI - A, -B], [C, D]].
Eigen::MatrixXcd rosenbrock_matrix(const Plant& plant, Complex s);

enum class ActuationMode { kOver, kUnder };

struct NonresonanceRecord {
  Complex value;
  int rank = 0;
  int required = 0;
  double margin = 0.0;  // scaled sigma at index required-1
};

struct NonresonanceResult {
  bool holds = true;
  std::vector<NonresonanceRecord> records;
};

/// kOver: Rosenbrock rank n+p at every exosystem eigenvalue;
/// kUnder: rank n+m.
NonresonanceResult check_nonresonance(const Plant& plant, const Exosystem& exo,
                                      ActuationMode mode);

/// rank [lambda I - A^T, C^T] = n at every exosystem eigenvalue. This is the
/// uniqueness condition of the energy-optimal regulator.
PbhResult check_obsv_condition(const Plant& plant, const Exosystem& exo);

struct ConditionReport {
  PbhResult stabilizable;
  ExoSpectrumResult exo_spectrum;
  NonresonanceResult nonres_over;
  NonresonanceResult nonres_under;
  PbhResult obsv_condition;
  PbhResult detectable;
  int input_rank = 0;
  bool input_full_rank = true;
};

ConditionReport check_conditions(const ProblemSpec& spec);

}  // namespace outreg

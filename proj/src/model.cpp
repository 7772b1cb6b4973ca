#include "outreg/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/SVD>

#include "outreg/error.hpp"

namespace outreg {

namespace {

std::string shape(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void expect_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                  const char* name, const char* against) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " is " << shape(m) << " but " << against << " requires " << rows
       << "x" << cols;
    throw Error(ErrorCode::kDimensionMismatch, os.str());
  }
}

void expect_finite(const Eigen::MatrixXd& m, const char* name) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kNonFiniteEntry, std::string(name) + " has a non-finite entry");
  }
}

double norm2(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

bool is_unstable_mode(Complex lambda, double tol) { return lambda.real() >= -tol; }

// Smallest scaled singular value of [lambda I - A, B] at index n-1 over all
// (closed) right-half-plane eigenvalues of A.
PbhResult pbh_unstable_modes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  PbhResult result;
  const Eigen::Index n = a.rows();
  const double tol = 1e-9 * (1.0 + norm2(a));
  for (const auto& cluster : distinct_eigenvalues(a)) {
    if (!is_unstable_mode(cluster.value, tol)) continue;
    Eigen::MatrixXcd pbh(n, n + b.cols());
    pbh.leftCols(n) = cluster.value * Eigen::MatrixXcd::Identity(n, n) - a.cast<Complex>();
    pbh.rightCols(b.cols()) = b.cast<Complex>();
    const RankInfo info = numerical_rank(pbh);
    result.margin = std::min(result.margin, info.relative(static_cast<int>(n) - 1));
  }
  result.holds = result.margin > kRankRelTol;
  return result;
}

}  // namespace

Plant Plant::make(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c,
                  std::optional<Eigen::MatrixXd> d) {
  Plant plant;
  const Eigen::Index p = c.rows();
  const Eigen::Index m = b.cols();
  plant.A = std::move(a);
  plant.B = std::move(b);
  plant.C = std::move(c);
  plant.D = d ? std::move(*d) : Eigen::MatrixXd::Zero(p, m);
  return plant;
}

Coupling Coupling::zero(int n, int p, int nbar) {
  return {Eigen::MatrixXd::Zero(n, nbar), Eigen::MatrixXd::Zero(p, nbar)};
}

Weights Weights::identity(int n, int m, int p) {
  Weights w;
  w.Q = Eigen::MatrixXd::Identity(p, p);
  w.R = Eigen::MatrixXd::Identity(m, m);
  w.Qx = Eigen::MatrixXd::Zero(n, n);
  return w;
}

ProblemSpec ProblemSpec::make(Plant plant, Exosystem exo) {
  ProblemSpec spec;
  const int n = plant.n();
  const int m = plant.m();
  const int p = plant.p();
  const int nbar = exo.nbar();
  spec.plant = std::move(plant);
  spec.exo = std::move(exo);
  spec.coupling = Coupling::zero(n, p, nbar);
  spec.weights = Weights::identity(n, m, p);
  return spec;
}

void validate_plant(const Plant& plant) {
  const Eigen::Index n = plant.A.rows();
  if (n < 1) throw Error(ErrorCode::kDimensionMismatch, "A must have at least one row");
  expect_shape(plant.A, n, n, "A", "a square state matrix");
  if (plant.B.cols() < 1) throw Error(ErrorCode::kDimensionMismatch, "B must have at least one column");
  if (plant.C.rows() < 1) throw Error(ErrorCode::kDimensionMismatch, "C must have at least one row");
  expect_shape(plant.B, n, plant.B.cols(), "B", "A");
  expect_shape(plant.C, plant.C.rows(), n, "C", "A");
  expect_shape(plant.D, plant.C.rows(), plant.B.cols(), "D", "C and B");
  expect_finite(plant.A, "A");
  expect_finite(plant.B, "B");
  expect_finite(plant.C, "C");
  expect_finite(plant.D, "D");
}

void validate_exosystem(const Exosystem& exo) {
  const Eigen::Index nbar = exo.Abar.rows();
  if (nbar < 1) throw Error(ErrorCode::kDimensionMismatch, "Abar must have at least one row");
  expect_shape(exo.Abar, nbar, nbar, "Abar", "a square exosystem matrix");
  expect_shape(exo.Cbar, exo.Cbar.rows(), nbar, "Cbar", "Abar");
  expect_finite(exo.Abar, "Abar");
  expect_finite(exo.Cbar, "Cbar");
  if (exo.xbar0) {
    expect_shape(*exo.xbar0, nbar, 1, "xbar0", "Abar");
    expect_finite(*exo.xbar0, "xbar0");
  }
}

void validate_dimensions(const ProblemSpec& spec) {
  validate_plant(spec.plant);
  validate_exosystem(spec.exo);
  const Eigen::Index n = spec.n(), m = spec.m(), p = spec.p(), nbar = spec.nbar();
  expect_shape(spec.exo.Cbar, p, nbar, "Cbar", "C (output count)");
  expect_shape(spec.coupling.Ed, n, nbar, "Ed", "A and Abar");
  expect_shape(spec.coupling.Dd, p, nbar, "Dd", "C and Abar");
  expect_shape(spec.weights.Q, p, p, "Q", "C");
  expect_shape(spec.weights.R, m, m, "R", "B");
  expect_shape(spec.weights.Qx, n, n, "Qx", "A");
  expect_finite(spec.coupling.Ed, "Ed");
  expect_finite(spec.coupling.Dd, "Dd");
  expect_finite(spec.weights.Q, "Q");
  expect_finite(spec.weights.R, "R");
  expect_finite(spec.weights.Qx, "Qx");
  if (!std::isfinite(spec.weights.rho) || !std::isfinite(spec.weights.epsilon)) {
    throw Error(ErrorCode::kNonFiniteEntry, "rho and epsilon must be finite");
  }
  if (spec.x0) {
    expect_shape(*spec.x0, n, 1, "x0", "A");
    expect_finite(*spec.x0, "x0");
  }
}

void validate_weights(const Weights& w) {
  auto symmetric = [](const Eigen::MatrixXd& m) {
    return (m - m.transpose()).norm() <= 1e-12 * (1.0 + m.norm());
  };
  const double tol = 1e-12;
  if (!symmetric(w.Q) || min_symmetric_eigenvalue(w.Q) <= tol * (1.0 + w.Q.norm())) {
    throw Error(ErrorCode::kInvalidWeights, "Q must be symmetric positive definite");
  }
  if (!symmetric(w.R) || min_symmetric_eigenvalue(w.R) <= tol * (1.0 + w.R.norm())) {
    throw Error(ErrorCode::kInvalidWeights, "R must be symmetric positive definite");
  }
  if (w.Qx.size() > 0 &&
      (!symmetric(w.Qx) || min_symmetric_eigenvalue(w.Qx) < -tol * (1.0 + w.Qx.norm()))) {
    throw Error(ErrorCode::kInvalidWeights, "Qx must be symmetric positive semidefinite");
  }
  if (!(w.rho > 0.0) || !(w.epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidWeights, "rho and epsilon must be positive");
  }
}

PbhResult check_stabilizability(const Plant& plant) {
  return pbh_unstable_modes(plant.A, plant.B);
}

PbhResult check_detectability(const Plant& plant) {
  return pbh_unstable_modes(plant.A.transpose(), plant.C.transpose());
}

ExoSpectrumResult check_exosystem_spectrum(const Exosystem& exo) {
  ExoSpectrumResult result;
  const Eigen::Index nbar = exo.Abar.rows();
  result.imag_axis_tol = 1e-9 * (1.0 + norm2(exo.Abar));
  for (const auto& cluster : distinct_eigenvalues(exo.Abar)) {
    ExoEigenRecord rec;
    rec.value = cluster.value;
    rec.abs_real = std::abs(cluster.value.real());
    rec.algebraic = cluster.multiplicity;
    const Eigen::MatrixXcd shifted =
        cluster.value * Eigen::MatrixXcd::Identity(nbar, nbar) - exo.Abar.cast<Complex>();
    rec.geometric = static_cast<int>(nbar) - numerical_rank(shifted).rank;
    if (rec.abs_real > result.imag_axis_tol || rec.geometric != rec.algebraic) {
      result.holds = false;
    }
    result.records.push_back(rec);
  }
  return result;
}

Eigen::MatrixXcd rosenbrock_matrix(const Plant& plant, Complex s) {
  const Eigen::Index n = plant.n(), m = plant.m(), p = plant.p();
  Eigen::MatrixXcd r(n + p, n + m);
  r.topLeftCorner(n, n) = s * Eigen::MatrixXcd::Identity(n, n) - plant.A.cast<Complex>();
  r.topRightCorner(n, m) = -plant.B.cast<Complex>();
  r.bottomLeftCorner(p, n) = plant.C.cast<Complex>();
  r.bottomRightCorner(p, m) = plant.D.cast<Complex>();
  return r;
}

NonresonanceResult check_nonresonance(const Plant& plant, const Exosystem& exo,
                                      ActuationMode mode) {
  NonresonanceResult result;
  const int required =
      plant.n() + (mode == ActuationMode::kOver ? plant.p() : plant.m());
  for (const auto& cluster : distinct_eigenvalues(exo.Abar)) {
    const RankInfo info = numerical_rank(rosenbrock_matrix(plant, cluster.value));
    NonresonanceRecord rec{cluster.value, info.rank, required, info.relative(required - 1)};
    if (rec.rank != required) result.holds = false;
    result.records.push_back(rec);
  }
  return result;
}

PbhResult check_obsv_condition(const Plant& plant, const Exosystem& exo) {
  PbhResult result;
  const Eigen::Index n = plant.n();
  const Eigen::Index p = plant.p();
  for (const auto& cluster : distinct_eigenvalues(exo.Abar)) {
    Eigen::MatrixXcd mat(n, n + p);
    mat.leftCols(n) = cluster.value * Eigen::MatrixXcd::Identity(n, n) -
                      plant.A.transpose().cast<Complex>();
    mat.rightCols(p) = plant.C.transpose().cast<Complex>();
    result.margin = std::min(result.margin, numerical_rank(mat).relative(static_cast<int>(n) - 1));
  }
  result.holds = result.margin > kRankRelTol;
  return result;
}

ConditionReport check_conditions(const ProblemSpec& spec) {
  validate_dimensions(spec);
  ConditionReport report;
  report.stabilizable = check_stabilizability(spec.plant);
  report.exo_spectrum = check_exosystem_spectrum(spec.exo);
  report.nonres_over = check_nonresonance(spec.plant, spec.exo, ActuationMode::kOver);
  report.nonres_under = check_nonresonance(spec.plant, spec.exo, ActuationMode::kUnder);
  report.obsv_condition = check_obsv_condition(spec.plant, spec.exo);
  report.detectable = check_detectability(spec.plant);
  report.input_rank = numerical_rank(spec.plant.B).rank;
  report.input_full_rank = report.input_rank == spec.m();
  return report;
}

}  // namespace outreg

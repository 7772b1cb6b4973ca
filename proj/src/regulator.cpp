#include "outreg/regulator.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "outreg/error.hpp"

namespace outreg {

namespace {

Eigen::MatrixXd r_inverse(const Weights& w) {
  return w.R.llt().solve(Eigen::MatrixXd::Identity(w.R.rows(), w.R.cols()));
}

void require_exo_spectrum(const ProblemSpec& spec) {
  if (!check_exosystem_spectrum(spec.exo).holds) {
    throw Error(ErrorCode::kSpectrumViolation,
                "exosystem eigenvalues must be semisimple and on the imaginary axis");
  }
}

std::vector<Variation> to_variations(const std::vector<std::vector<Eigen::MatrixXd>>& basis,
                                     int pi_index, int gamma_index) {
  std::vector<Variation> out;
  out.reserve(basis.size());
  for (const auto& tuple : basis) {
    out.push_back({tuple[static_cast<std::size_t>(pi_index)],
                   tuple[static_cast<std::size_t>(gamma_index)]});
  }
  return out;
}

// Orthonormal basis for the span of the given (dPi, dGamma) directions.
// `noise` is the magnitude below which a direction counts as zero.
std::vector<Variation> orthonormal_span(const std::vector<Variation>& dirs, int n, int m,
                                        int nbar, double noise) {
  if (dirs.empty()) return {};
  const Eigen::Index rows = static_cast<Eigen::Index>(n + m) * nbar;
  Eigen::MatrixXd stacked(rows, static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    stacked.col(static_cast<Eigen::Index>(k)) << vec(dirs[k].dPi), vec(dirs[k].dGamma);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinU);
  std::vector<Variation> out;
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
    if (svd.singularValues()(k) <= noise) break;
    const Eigen::VectorXd u = svd.matrixU().col(k);
    out.push_back({unvec(u.head(static_cast<Eigen::Index>(n) * nbar), n, nbar),
                   unvec(u.tail(static_cast<Eigen::Index>(m) * nbar), m, nbar)});
  }
  return out;
}

}  // namespace

Eigen::MatrixXd energy_optimal_gain(const ProblemSpec& spec, const Eigen::MatrixXd& Pic,
                                    const Eigen::MatrixXd& Gammac) {
  const auto& p = spec.plant;
  return spec.weights.R.llt().solve(-p.B.transpose() * Pic + p.D.transpose() * Gammac);
}

LinearMatrixSystem classical_system(const ProblemSpec& spec) {
  const auto& p = spec.plant;
  const int n = spec.n(), m = spec.m(), nbar = spec.nbar();
  LinearMatrixSystem sys;
  const int pi = sys.add_unknown("Pi", n, nbar);
  const int gamma = sys.add_unknown("Gamma", m, nbar);

  const int state = sys.add_equation("state", spec.coupling.Ed);
  sys.add_right(state, pi, spec.exo.Abar);
  sys.add_left(state, p.A, pi, -1.0);
  sys.add_left(state, p.B, gamma, -1.0);

  const int output = sys.add_equation("output", spec.exo.Cbar - spec.coupling.Dd);
  sys.add_left(output, p.C, pi);
  sys.add_left(output, p.D, gamma);
  return sys;
}

LinearMatrixSystem energy_optimal_system(const ProblemSpec& spec) {
  const auto& p = spec.plant;
  const int n = spec.n(), pp = spec.p(), nbar = spec.nbar();
  const Eigen::MatrixXd Rinv = r_inverse(spec.weights);
  const Eigen::MatrixXd BRB = p.B * Rinv * p.B.transpose();
  const Eigen::MatrixXd BRD = p.B * Rinv * p.D.transpose();
  const Eigen::MatrixXd DRB = p.D * Rinv * p.B.transpose();
  const Eigen::MatrixXd DRD = p.D * Rinv * p.D.transpose();

  LinearMatrixSystem sys;
  const int pi = sys.add_unknown("Pi_u", n, nbar);
  const int pic = sys.add_unknown("Pic_u", n, nbar);
  const int gc = sys.add_unknown("Gammac_u", pp, nbar);

  const int costate = sys.add_equation("costate", Eigen::MatrixXd::Zero(n, nbar));
  sys.add_right(costate, pic, spec.exo.Abar);
  sys.add_left(costate, spec.weights.Qx, pi);
  sys.add_left(costate, p.A.transpose(), pic);
  sys.add_left(costate, p.C.transpose(), gc, -1.0);

  const int state = sys.add_equation("state", spec.coupling.Ed);
  sys.add_right(state, pi, spec.exo.Abar);
  sys.add_left(state, p.A, pi, -1.0);
  sys.add_left(state, BRB, pic);
  sys.add_left(state, BRD, gc, -1.0);

  const int output = sys.add_equation("output", spec.exo.Cbar - spec.coupling.Dd);
  sys.add_left(output, p.C, pi);
  sys.add_left(output, DRB, pic, -1.0);
  sys.add_left(output, DRD, gc);
  return sys;
}

LinearMatrixSystem error_optimal_system(const ProblemSpec& spec) {
  const auto& p = spec.plant;
  const auto& Q = spec.weights.Q;
  const int n = spec.n(), m = spec.m(), nbar = spec.nbar();
  const Eigen::MatrixXd target = spec.exo.Cbar - spec.coupling.Dd;

  LinearMatrixSystem sys;
  const int pi = sys.add_unknown("Pi_y", n, nbar);
  const int pic = sys.add_unknown("Pic_y", n, nbar);
  const int gamma = sys.add_unknown("Gamma_y", m, nbar);

  const int state = sys.add_equation("state", spec.coupling.Ed);
  sys.add_right(state, pi, spec.exo.Abar);
  sys.add_left(state, p.A, pi, -1.0);
  sys.add_left(state, p.B, gamma, -1.0);

  const int costate = sys.add_equation("costate", p.C.transpose() * Q * target);
  sys.add_right(costate, pic, spec.exo.Abar);
  sys.add_left(costate, p.A.transpose(), pic);
  sys.add_left(costate, p.C.transpose() * Q * p.C, pi);
  sys.add_left(costate, p.C.transpose() * Q * p.D, gamma);

  const int stationarity = sys.add_equation("stationarity", p.D.transpose() * Q * target);
  sys.add_left(stationarity, p.B.transpose(), pic);
  sys.add_left(stationarity, p.D.transpose() * Q * p.C, pi);
  sys.add_left(stationarity, p.D.transpose() * Q * p.D, gamma);
  return sys;
}

LinearMatrixSystem lqt_system(const ProblemSpec& spec, double eps, double rho) {
  const auto& p = spec.plant;
  const Eigen::MatrixXd Q = rho * spec.weights.Q;
  const int n = spec.n(), m = spec.m(), nbar = spec.nbar();
  const Eigen::MatrixXd target = spec.exo.Cbar - spec.coupling.Dd;

  LinearMatrixSystem sys;
  const int pi = sys.add_unknown("Pi", n, nbar);
  const int pic = sys.add_unknown("Pic", n, nbar);
  const int gamma = sys.add_unknown("Gamma", m, nbar);

  const int state = sys.add_equation("state", spec.coupling.Ed);
  sys.add_right(state, pi, spec.exo.Abar);
  sys.add_left(state, p.A, pi, -1.0);
  sys.add_left(state, p.B, gamma, -1.0);

  const int costate = sys.add_equation("costate", p.C.transpose() * Q * target);
  sys.add_right(costate, pic, spec.exo.Abar);
  sys.add_left(costate, p.A.transpose(), pic);
  sys.add_left(costate, spec.weights.Qx + p.C.transpose() * Q * p.C, pi);
  sys.add_left(costate, p.C.transpose() * Q * p.D, gamma);

  const int stationarity = sys.add_equation("stationarity", p.D.transpose() * Q * target);
  sys.add_left(stationarity, eps * spec.weights.R + p.D.transpose() * Q * p.D, gamma);
  sys.add_left(stationarity, p.B.transpose(), pic);
  sys.add_left(stationarity, p.D.transpose() * Q * p.C, pi);
  return sys;
}

LinearMatrixSystem variation_system(const ProblemSpec& spec, VariationMode mode) {
  const auto& p = spec.plant;
  const int n = spec.n(), m = spec.m(), pp = spec.p(), nbar = spec.nbar();
  LinearMatrixSystem sys;
  const int dpi = sys.add_unknown("dPi", n, nbar);
  const int dgamma = sys.add_unknown("dGamma", m, nbar);

  const int state = sys.add_equation("state", Eigen::MatrixXd::Zero(n, nbar));
  sys.add_right(state, dpi, spec.exo.Abar);
  sys.add_left(state, p.A, dpi, -1.0);
  sys.add_left(state, p.B, dgamma, -1.0);

  if (mode == VariationMode::kConstrained) {
    const int output = sys.add_equation("output", Eigen::MatrixXd::Zero(pp, nbar));
    sys.add_left(output, p.C, dpi);
    sys.add_left(output, p.D, dgamma);
  }
  return sys;
}

ClassicalSolution solve_classical(const ProblemSpec& spec) {
  validate_dimensions(spec);
  const LinearMatrixSystem sys = classical_system(spec);
  const SolveOutcome outcome = solve(sys);
  ClassicalSolution sol;
  sol.Pi = outcome.solution[0];
  sol.Gamma = outcome.solution[1];
  sol.classification = outcome.classification;
  sol.nullspace = to_variations(outcome.nullspace, 0, 1);
  sol.residual = sys.relative_residual(outcome.solution);
  return sol;
}

EnergyOptimalSolution solve_energy_optimal(const ProblemSpec& spec) {
  validate_dimensions(spec);
  validate_weights(spec.weights);
  require_exo_spectrum(spec);
  const LinearMatrixSystem sys = energy_optimal_system(spec);
  const SolveOutcome outcome = solve(sys);

  EnergyOptimalSolution sol;
  sol.Pi_u = outcome.solution[0];
  sol.Pic_u = outcome.solution[1];
  sol.Gammac_u = outcome.solution[2];
  sol.Gamma_u = energy_optimal_gain(spec, sol.Pic_u, sol.Gammac_u);
  sol.triple_classification = outcome.classification;
  sol.residual = sys.relative_residual(outcome.solution);

  std::vector<Variation> projected;
  for (const auto& t : outcome.nullspace) {
    projected.push_back({t[0], energy_optimal_gain(spec, t[1], t[2])});
  }
  const Eigen::MatrixXd Rinv = r_inverse(spec.weights);
  const double map_norm = 1.0 + (Rinv * spec.plant.B.transpose()).norm() +
                          (Rinv * spec.plant.D.transpose()).norm();
  sol.nullspace = orthonormal_span(projected, spec.n(), spec.m(), spec.nbar(), 1e-8 * map_norm);

  if (outcome.classification == Classification::kInconsistent) {
    sol.classification = Classification::kInconsistent;
  } else {
    sol.classification =
        sol.nullspace.empty() ? Classification::kUnique : Classification::kUnderdetermined;
  }
  return sol;
}

ErrorOptimalSolution solve_error_optimal(const ProblemSpec& spec) {
  validate_dimensions(spec);
  validate_weights(spec.weights);
  require_exo_spectrum(spec);
  const LinearMatrixSystem sys = error_optimal_system(spec);
  const SolveOutcome outcome = solve(sys);

  ErrorOptimalSolution sol;
  sol.Pi_y = outcome.solution[0];
  sol.Pic_y = outcome.solution[1];
  sol.Gamma_y = outcome.solution[2];
  sol.classification = outcome.classification;
  sol.nullspace = to_variations(outcome.nullspace, 0, 2);
  sol.residual = sys.relative_residual(outcome.solution);
  return sol;
}

namespace {

// The same conditions as lqt_system, divided by rho and written in the
// costate Pic / rho with the error E = C Pi + D Gamma + Dd - Cbar and F = Q E
// as extra unknowns. Every coefficient is then a data entry rather than a
// rounded product such as C^T Q C, which matters as eps / rho -> 0 where the
// system approaches the singular error-optimal one.
LinearMatrixSystem lqt_augmented_system(const ProblemSpec& spec, double eps, double rho) {
  const auto& p = spec.plant;
  const int n = spec.n(), m = spec.m(), pp = spec.p(), nbar = spec.nbar();

  LinearMatrixSystem sys;
  const int pi = sys.add_unknown("Pi", n, nbar);
  const int lambda = sys.add_unknown("Pic/rho", n, nbar);
  const int gamma = sys.add_unknown("Gamma", m, nbar);
  const int err = sys.add_unknown("E", pp, nbar);
  const int weighted = sys.add_unknown("QE", pp, nbar);

  const int state = sys.add_equation("state", spec.coupling.Ed);
  sys.add_right(state, pi, spec.exo.Abar);
  sys.add_left(state, p.A, pi, -1.0);
  sys.add_left(state, p.B, gamma, -1.0);

  const int output = sys.add_equation("output", spec.exo.Cbar - spec.coupling.Dd);
  sys.add_left(output, p.C, pi);
  sys.add_left(output, p.D, gamma);
  sys.add_left(output, Eigen::MatrixXd::Identity(pp, pp), err, -1.0);

  const int weight = sys.add_equation("weight", Eigen::MatrixXd::Zero(pp, nbar));
  sys.add_left(weight, spec.weights.Q, err);
  sys.add_left(weight, Eigen::MatrixXd::Identity(pp, pp), weighted, -1.0);

  const int costate = sys.add_equation("costate", Eigen::MatrixXd::Zero(n, nbar));
  sys.add_right(costate, lambda, spec.exo.Abar);
  sys.add_left(costate, p.A.transpose(), lambda);
  sys.add_left(costate, spec.weights.Qx / rho, pi);
  sys.add_left(costate, p.C.transpose(), weighted);

  const int stationarity = sys.add_equation("stationarity", Eigen::MatrixXd::Zero(m, nbar));
  sys.add_left(stationarity, (eps / rho) * spec.weights.R, gamma);
  sys.add_left(stationarity, p.B.transpose(), lambda);
  sys.add_left(stationarity, p.D.transpose(), weighted);
  return sys;
}

}  // namespace

LqtSolution solve_lqt(const ProblemSpec& spec, double eps, double rho) {
  validate_dimensions(spec);
  if (!(eps > 0.0) || !(rho > 0.0)) {
    throw Error(ErrorCode::kPreconditionViolated, "eps and rho must be positive");
  }
  validate_weights(spec.weights);
  require_exo_spectrum(spec);
  if (!check_stabilizability(spec.plant).holds) {
    throw Error(ErrorCode::kNotStabilizable, "(A, B) is not stabilizable");
  }
  if (!check_detectability(spec.plant).holds) {
    throw Error(ErrorCode::kNotDetectable, "(C, A) is not detectable");
  }
  const SolveOutcome outcome = solve(lqt_augmented_system(spec, eps, rho));
  LqtSolution sol;
  sol.Pi = outcome.solution[0];
  sol.Pic = rho * outcome.solution[1];
  sol.Gamma = outcome.solution[2];
  sol.eps = eps;
  sol.rho = rho;
  sol.classification = outcome.classification;
  sol.residual = lqt_system(spec, eps, rho).relative_residual({sol.Pi, sol.Pic, sol.Gamma});
  return sol;
}

VariationBasis variation_basis(const ProblemSpec& spec, VariationMode mode) {
  validate_dimensions(spec);
  const LinearMatrixSystem sys = variation_system(spec, mode);
  const SolveOutcome outcome = solve(sys);
  return {mode, to_variations(outcome.nullspace, 0, 1)};
}

double variation_residual(const ProblemSpec& spec, const Variation& v, VariationMode mode) {
  const auto& p = spec.plant;
  double res2 = (v.dPi * spec.exo.Abar - p.A * v.dPi - p.B * v.dGamma).squaredNorm();
  if (mode == VariationMode::kConstrained) {
    res2 += (p.C * v.dPi + p.D * v.dGamma).squaredNorm();
  }
  const double size = std::sqrt(v.dPi.squaredNorm() + v.dGamma.squaredNorm());
  return std::sqrt(res2) / (1.0 + size);
}

}  // namespace outreg

#include "outreg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace outreg {

namespace {

double norm2(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

void require_imaginary_spectrum(const Exosystem& exo) {
  const ExoSpectrumResult spectrum = check_exosystem_spectrum(exo);
  for (const auto& r : spectrum.records) {
    if (r.abs_real > spectrum.imag_axis_tol) {
      std::ostringstream os;
      os << "exosystem eigenvalue " << r.value.real() << (r.value.imag() < 0 ? "" : "+")
         << r.value.imag() << "i is off the imaginary axis";
      throw Error(ErrorCode::kSpectrumViolation, os.str());
    }
  }
}

Eigen::MatrixXd block_diag(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

double analytic_value(const Eigen::MatrixXd& M, const Eigen::MatrixXd& S, const Exosystem& exo,
                      const Eigen::VectorXd& xbar0) {
  return stationary_power_analytic(M, S, exo, xbar0).value;
}

bool uniqueness_condition(const ProblemSpec& spec, OptimalityKind kind) {
  if (kind == OptimalityKind::kEnergy) return check_obsv_condition(spec.plant, spec.exo).holds;
  return check_nonresonance(spec.plant, spec.exo, ActuationMode::kUnder).holds;
}

VariationMode mode_for(OptimalityKind kind) {
  return kind == OptimalityKind::kEnergy ? VariationMode::kConstrained
                                         : VariationMode::kUnconstrained;
}

}  // namespace

PowerReport stationary_power_analytic(const Eigen::Ref<const Eigen::MatrixXd>& M,
                                      const Eigen::Ref<const Eigen::MatrixXd>& S,
                                      const Exosystem& exo,
                                      const Eigen::Ref<const Eigen::VectorXd>& xbar0) {
  if (M.cols() != exo.nbar() || xbar0.size() != exo.nbar() || S.rows() != M.rows() ||
      S.cols() != M.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "power: M, S and xbar0 do not compose");
  }
  require_imaginary_spectrum(exo);
  const ExoEigenbasis eb = exosystem_eigenbasis(exo);

  const Eigen::VectorXcd c = eb.Vinv * xbar0.cast<Complex>();
  const Eigen::MatrixXcd W = M.cast<Complex>() * eb.V;  // columns M v_i
  const Eigen::MatrixXcd SW = S.cast<Complex>() * W;
  const double tol = 1e-9 * (1.0 + norm2(exo.Abar));

  PowerReport report;
  Complex total = 0.0;
  const Eigen::Index k = eb.values.size();
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (std::abs(eb.values(i) + eb.values(j)) > tol) continue;
      // Unconjugated bilinear form: the partner of v_i is conj(v_i).
      const Complex term = c(i) * c(j) * (W.col(i).transpose() * SW.col(j))(0, 0);
      report.contributions.push_back({eb.values(i), eb.values(j), term});
      total += term;
    }
  }
  report.value = total.real();
  report.method = PowerMethod::kAnalytic;
  return report;
}

PowerReport stationary_power_numeric(const Eigen::Ref<const Eigen::MatrixXd>& M,
                                     const Eigen::Ref<const Eigen::MatrixXd>& S,
                                     const Exosystem& exo,
                                     const Eigen::Ref<const Eigen::VectorXd>& xbar0,
                                     double horizon, long steps, kernels::Exec exec) {
  if (M.cols() != exo.nbar() || xbar0.size() != exo.nbar() || S.rows() != M.rows() ||
      S.cols() != M.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "power: M, S and xbar0 do not compose");
  }
  if (!(horizon > 0.0) || steps < 2) {
    throw Error(ErrorCode::kPreconditionViolated, "power: horizon and steps must be positive");
  }
  PowerReport report;
  report.method = PowerMethod::kNumeric;
  report.value = kernels::time_average_quadratic(exo.Abar, xbar0, M, S, horizon, steps, exec);
  return report;
}

Eigen::VectorXd exciting_initial_state(const Exosystem& exo) {
  const ExoEigenbasis eb = exosystem_eigenbasis(exo);
  return (eb.V * Eigen::VectorXcd::Ones(eb.values.size())).real();
}

double stationary_cost_power(const ProblemSpec& spec, OptimalityKind kind,
                             const Eigen::MatrixXd& Pi, const Eigen::MatrixXd& Gamma,
                             const Eigen::Ref<const Eigen::VectorXd>& xbar0) {
  const auto& p = spec.plant;
  const auto& w = spec.weights;
  if (kind == OptimalityKind::kEnergy) {
    return 0.5 * analytic_value(stack_rows(Pi, Gamma), block_diag(w.Qx, w.R), spec.exo, xbar0);
  }
  const Eigen::MatrixXd e = p.C * Pi + p.D * Gamma + spec.coupling.Dd - spec.exo.Cbar;
  return 0.5 * analytic_value(e, w.Q, spec.exo, xbar0);
}

double power_difference(const ProblemSpec& spec, OptimalityKind kind, const Variation& variation,
                        const Eigen::Ref<const Eigen::VectorXd>& xbar0) {
  const VariationMode mode = mode_for(kind);
  const double residual = variation_residual(spec, variation, mode);
  if (!(residual <= 1e-8)) {
    std::ostringstream os;
    os << "variation violates its homogeneous equations (relative residual " << residual << ")";
    throw Error(ErrorCode::kInfeasibleVariation, os.str());
  }
  const auto& p = spec.plant;
  const auto& w = spec.weights;
  if (kind == OptimalityKind::kEnergy) {
    return 0.5 * analytic_value(stack_rows(variation.dPi, variation.dGamma),
                                block_diag(w.Qx, w.R), spec.exo, xbar0);
  }
  return 0.5 * analytic_value(p.C * variation.dPi + p.D * variation.dGamma, w.Q, spec.exo, xbar0);
}

double candidate_power_gap(const ProblemSpec& spec, OptimalityKind kind,
                           const Eigen::MatrixXd& Pi_candidate,
                           const Eigen::MatrixXd& Gamma_candidate,
                           const Eigen::MatrixXd& Pi_optimum,
                           const Eigen::MatrixXd& Gamma_optimum,
                           const Eigen::Ref<const Eigen::VectorXd>& xbar0) {
  return stationary_cost_power(spec, kind, Pi_candidate, Gamma_candidate, xbar0) -
         stationary_cost_power(spec, kind, Pi_optimum, Gamma_optimum, xbar0);
}

ProbeReport optimality_probe(const ProblemSpec& spec, OptimalityKind kind,
                             const Eigen::MatrixXd& Pi, const Eigen::MatrixXd& Gamma,
                             int trials, std::uint64_t seed,
                             std::optional<Eigen::VectorXd> xbar0) {
  if (trials < 0) throw Error(ErrorCode::kPreconditionViolated, "probe: negative trial count");
  const Eigen::VectorXd x0 = xbar0 ? *xbar0 : exciting_initial_state(spec.exo);
  const VariationBasis vb = variation_basis(spec, mode_for(kind));

  ProbeReport report;
  report.basis_dimension = static_cast<int>(vb.basis.size());
  report.uniqueness_condition = uniqueness_condition(spec, kind);
  if (vb.basis.empty()) return report;

  const double base = stationary_cost_power(spec, kind, Pi, Gamma, x0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t dim = vb.basis.size();

  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd coeff(static_cast<Eigen::Index>(dim));
    for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff(k) = normal(rng);
    coeff /= coeff.norm();

    Variation v{Eigen::MatrixXd::Zero(Pi.rows(), Pi.cols()),
                Eigen::MatrixXd::Zero(Gamma.rows(), Gamma.cols())};
    for (std::size_t k = 0; k < dim; ++k) {
      v.dPi += coeff(static_cast<Eigen::Index>(k)) * vb.basis[k].dPi;
      v.dGamma += coeff(static_cast<Eigen::Index>(k)) * vb.basis[k].dGamma;
    }

    const double direct = stationary_cost_power(spec, kind, Pi + v.dPi, Gamma + v.dGamma, x0) - base;
    const double second = power_difference(spec, kind, v, x0);
    ++report.trials;
    report.min_delta = std::min(report.min_delta, direct);
    report.max_first_variation = std::max(report.max_first_variation, std::abs(direct - second));

    if (direct < -kProbeNegativeTol) {
      report.all_nonnegative = false;
      std::ostringstream os;
      os << "cost power decreased by " << -direct << " along a feasible variation (trial " << t
         << ")";
      throw ProbeFailed(os.str(), v, direct);
    }
    if (direct < kProbePositiveTol) {
      report.strictly_positive = false;
      if (report.uniqueness_condition) {
        std::ostringstream os;
        os << "uniqueness condition holds but a variation changed the cost power by only "
           << direct << " (trial " << t << ")";
        throw ProbeFailed(os.str(), v, direct);
      }
    }
  }
  return report;
}

double fit_loglog_slope(const std::vector<double>& abscissa, const std::vector<double>& errors) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t k = 0; k < abscissa.size() && k < errors.size(); ++k) {
    if (!(errors[k] >= kSolverFloor) || !(abscissa[k] > 0.0)) continue;
    const double x = std::log(abscissa[k]);
    const double y = std::log(errors[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  const double denom = count * sxx - sx * sx;
  if (count < 2 || denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (count * sxy - sx * sy) / denom;
}

ConvergenceReport convergence_study(const ProblemSpec& spec, ConvergenceMode mode,
                                    const std::vector<double>& grid, kernels::Exec exec) {
  if (grid.size() < 2) {
    throw Error(ErrorCode::kPreconditionViolated, "sweep: grid needs at least two points");
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > 0.0) || !std::isfinite(grid[k])) {
      throw Error(ErrorCode::kPreconditionViolated, "sweep: grid values must be positive");
    }
  }
  bool increasing = true, decreasing = true;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    increasing = increasing && grid[k] > grid[k - 1];
    decreasing = decreasing && grid[k] < grid[k - 1];
  }
  if (!increasing && !decreasing) {
    throw Error(ErrorCode::kPreconditionViolated, "sweep: grid must be strictly monotone");
  }

  Eigen::MatrixXd Pi_ref, Gamma_ref;
  if (mode == ConvergenceMode::kRhoToInfinity) {
    const EnergyOptimalSolution ref = solve_energy_optimal(spec);
    if (ref.classification != Classification::kUnique) {
      throw Error(ErrorCode::kPreconditionViolated,
                  std::string("sweep: energy-optimal solution is ") + to_string(ref.classification));
    }
    Pi_ref = ref.Pi_u;
    Gamma_ref = ref.Gamma_u;
  } else {
    if (spec.weights.Qx.size() > 0 && spec.weights.Qx.cwiseAbs().maxCoeff() > 0.0) {
      throw Error(ErrorCode::kPreconditionViolated, "sweep: eps study requires Qx = 0");
    }
    const ErrorOptimalSolution ref = solve_error_optimal(spec);
    if (ref.classification != Classification::kUnique) {
      throw Error(ErrorCode::kPreconditionViolated,
                  std::string("sweep: error-optimal solution is ") + to_string(ref.classification));
    }
    Pi_ref = ref.Pi_y;
    Gamma_ref = ref.Gamma_y;
  }

  ConvergenceReport report;
  report.mode = mode;
  report.grid = grid;
  const long count = static_cast<long>(grid.size());
  report.pi_errors.assign(grid.size(), 0.0);
  report.gamma_errors.assign(grid.size(), 0.0);

  auto point = [&](long k) {
    const double g = grid[static_cast<std::size_t>(k)];
    const LqtSolution lqt = mode == ConvergenceMode::kRhoToInfinity
                                ? solve_lqt(spec, spec.weights.epsilon, g)
                                : solve_lqt(spec, g, spec.weights.rho);
    if (lqt.classification != Classification::kUnique) {
      // eps / rho has dropped below what the rank test can resolve.
      throw Error(ErrorCode::kNumericalFailure,
                  "sweep: tracking solution at grid value " + std::to_string(g) + " is " +
                      to_string(lqt.classification));
    }
    report.pi_errors[static_cast<std::size_t>(k)] = (lqt.Pi - Pi_ref).norm();
    report.gamma_errors[static_cast<std::size_t>(k)] = (lqt.Gamma - Gamma_ref).norm();
  };

  if (exec == kernels::Exec::kSerial) {
    for (long k = 0; k < count; ++k) point(k);
  } else {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < count; ++k) {
      try {
        point(k);
      } catch (...) {
#pragma omp critical(outreg_sweep_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<double> abscissa(grid);
  if (mode == ConvergenceMode::kEpsToZero) {
    for (double& a : abscissa) a = 1.0 / a;
  }
  report.pi_slope = fit_loglog_slope(abscissa, report.pi_errors);
  report.gamma_slope = fit_loglog_slope(abscissa, report.gamma_errors);
  return report;
}

OraclePair kkt_oracle(const ProblemSpec& spec, OptimalityKind kind) {
  validate_dimensions(spec);
  validate_weights(spec.weights);
  require_imaginary_spectrum(spec.exo);
  const ExoEigenbasis eb = exosystem_eigenbasis(spec.exo);

  const auto& p = spec.plant;
  const auto& w = spec.weights;
  const int n = spec.n(), m = spec.m(), pp = spec.p(), nbar = spec.nbar();
  const Eigen::MatrixXcd Ed = spec.coupling.Ed.cast<Complex>();
  const Eigen::MatrixXcd target = (spec.exo.Cbar - spec.coupling.Dd).cast<Complex>();

  Eigen::MatrixXcd Zpi(n, nbar), Zgamma(m, nbar);
  for (int i = 0; i < nbar; ++i) {
    const Complex lambda = eb.values(i);
    const Eigen::VectorXcd v = eb.V.col(i);
    const Eigen::MatrixXcd ros = rosenbrock_matrix(p, lambda);

    Eigen::MatrixXcd kkt;
    Eigen::VectorXcd rhs;
    if (kind == OptimalityKind::kEnergy) {
      // min z^H blkdiag(Qx, R) z  s.t.  Rosenbrock(lambda) z = [Ed v; target v]
      const Eigen::Index nz = n + m, nc = n + pp;
      const Eigen::MatrixXcd H = block_diag(w.Qx, w.R).cast<Complex>();
      kkt = Eigen::MatrixXcd::Zero(nz + nc, nz + nc);
      kkt.topLeftCorner(nz, nz) = H;
      kkt.topRightCorner(nz, nc) = ros.adjoint();
      kkt.bottomLeftCorner(nc, nz) = ros;
      rhs = Eigen::VectorXcd::Zero(nz + nc);
      rhs.segment(nz, n) = Ed * v;
      rhs.tail(pp) = target * v;
    } else {
      // min (F z - r)^H Q (F z - r)  s.t.  [lambda I - A, -B] z = Ed v
      const Eigen::Index nz = n + m;
      const Eigen::MatrixXcd G = ros.topRows(n);
      const Eigen::MatrixXcd F = ros.bottomRows(pp);
      const Eigen::MatrixXcd Q = w.Q.cast<Complex>();
      const Eigen::VectorXcd r = target * v;
      kkt = Eigen::MatrixXcd::Zero(nz + n, nz + n);
      kkt.topLeftCorner(nz, nz) = F.adjoint() * Q * F;
      kkt.topRightCorner(nz, n) = G.adjoint();
      kkt.bottomLeftCorner(n, nz) = G;
      rhs.resize(nz + n);
      rhs.head(nz) = F.adjoint() * Q * r;
      rhs.tail(n) = Ed * v;
    }

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(kkt);
    cod.setThreshold(kRankRelTol * static_cast<double>(kkt.rows()));
    const Eigen::VectorXcd sol = cod.solve(rhs);
    const double res = (kkt * sol - rhs).norm();
    if (res > kConsistencyTol * (1.0 + rhs.norm())) {
      std::ostringstream os;
      os << "optimality conditions are inconsistent at eigenvalue " << lambda.real()
         << (lambda.imag() < 0 ? "" : "+") << lambda.imag() << "i";
      throw Error(ErrorCode::kInconsistent, os.str());
    }
    Zpi.col(i) = sol.head(n);
    Zgamma.col(i) = sol.segment(n, m);
  }

  const Eigen::MatrixXcd Pi = Zpi * eb.Vinv;
  const Eigen::MatrixXcd Gamma = Zgamma * eb.Vinv;
  OraclePair out;
  out.Pi = Pi.real();
  out.Gamma = Gamma.real();
  out.max_imaginary = std::max(Pi.size() ? Pi.imag().cwiseAbs().maxCoeff() : 0.0,
                               Gamma.size() ? Gamma.imag().cwiseAbs().maxCoeff() : 0.0);
  return out;
}

double relative_difference(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  return (X - Y).norm() / std::max(1.0, Y.norm());
}

OracleComparison compare_with_oracle(const ProblemSpec& spec, OptimalityKind kind, double tol) {
  OracleComparison out;
  if (kind == OptimalityKind::kEnergy) {
    const EnergyOptimalSolution s = solve_energy_optimal(spec);
    out.classification = s.classification;
    out.Pi = s.Pi_u;
    out.Gamma = s.Gamma_u;
  } else {
    const ErrorOptimalSolution s = solve_error_optimal(spec);
    out.classification = s.classification;
    out.Pi = s.Pi_y;
    out.Gamma = s.Gamma_y;
  }
  if (out.classification == Classification::kInconsistent) return out;

  out.oracle = kkt_oracle(spec, kind);
  out.pi_difference = relative_difference(out.oracle.Pi, out.Pi);
  out.gamma_difference = relative_difference(out.oracle.Gamma, out.Gamma);
  if (kind == OptimalityKind::kEnergy) {
    const Eigen::VectorXd x0 = exciting_initial_state(spec.exo);
    const double ps = stationary_cost_power(spec, kind, out.Pi, out.Gamma, x0);
    const double po = stationary_cost_power(spec, kind, out.oracle.Pi, out.oracle.Gamma, x0);
    out.invariant_difference = std::abs(ps - po) / std::max(1.0, std::abs(ps));
  } else {
    const auto& p = spec.plant;
    out.invariant_difference = relative_difference(p.C * out.oracle.Pi + p.D * out.oracle.Gamma,
                                                   p.C * out.Pi + p.D * out.Gamma);
  }
  out.agrees = out.classification == Classification::kUnique
                   ? out.pi_difference <= tol && out.gamma_difference <= tol
                   : out.invariant_difference <= tol;
  return out;
}

namespace {

// Polynomial in t whose coefficients are affine forms over z = (1, g1, g2, g3).
using AffinePoly = std::vector<Eigen::Vector4d>;
// Polynomial in t whose coefficients are quadratic forms z^T Q z.
using QuadPoly = std::vector<Eigen::Matrix4d>;

QuadPoly square(const AffinePoly& a) {
  QuadPoly out(a.size() * 2 - 1, Eigen::Matrix4d::Zero());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) out[i + j] += a[i] * a[j].transpose();
  }
  for (auto& q : out) q = 0.5 * (q + q.transpose()).eval();
  return out;
}

}  // namespace

PolynomialCounterexample polynomial_counterexample_check() {
  PolynomialCounterexample out;

  Exosystem exo;
  exo.Abar = Eigen::MatrixXd::Zero(3, 3);
  exo.Abar(0, 1) = 1.0;
  exo.Abar(1, 2) = 1.0;
  exo.Cbar = Eigen::MatrixXd::Zero(1, 3);
  exo.Cbar(0, 0) = 1.0;
  out.exosystem_rejected = !check_exosystem_spectrum(exo).holds;

  const Plant plant = Plant::make(Eigen::MatrixXd::Ones(1, 1), -Eigen::MatrixXd::Ones(1, 1),
                                  Eigen::MatrixXd::Ones(1, 1));
  ProblemSpec spec = ProblemSpec::make(plant, exo);

  // Pi is linear in Gamma = (g1, g2, g3): Pi Abar = A Pi + B Gamma.
  std::vector<Eigen::RowVector3d> pi_of(3);
  for (int k = 0; k < 3; ++k) {
    LinearMatrixSystem sys;
    const int pi = sys.add_unknown("Pi", 1, 3);
    Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(1, 3);
    unit(0, k) = 1.0;
    const int eq = sys.add_equation("state", plant.B * unit);
    sys.add_right(eq, pi, exo.Abar);
    sys.add_left(eq, plant.A, pi, -1.0);
    const SolveOutcome sol = solve(sys);
    if (sol.classification != Classification::kUnique) {
      throw Error(ErrorCode::kNumericalFailure, "polynomial reference: Pi is not determined");
    }
    pi_of[static_cast<std::size_t>(k)] = sol.solution[0].row(0);
  }

  // xbar = [t^2/2, t, 1] as coefficient lists in t.
  const std::vector<std::vector<double>> xbar = {{0.0, 0.0, 0.5}, {0.0, 1.0}, {1.0}};
  AffinePoly x(3, Eigen::Vector4d::Zero()), u(3, Eigen::Vector4d::Zero()),
      err(3, Eigen::Vector4d::Zero());
  for (int j = 0; j < 3; ++j) {
    for (std::size_t d = 0; d < xbar[static_cast<std::size_t>(j)].size(); ++d) {
      const double c = xbar[static_cast<std::size_t>(j)][d];
      for (int k = 0; k < 3; ++k) {
        x[d](k + 1) += pi_of[static_cast<std::size_t>(k)](j) * c;
      }
      u[d](j + 1) += c;
    }
  }
  err = x;
  err[2](0) -= 0.5;

  const QuadPoly e2 = square(err);
  const QuadPoly u2 = square(u);
  // J_T = int_0^T (e^2 + u^2) dt, coefficient of T^(d+1).
  std::vector<Eigen::Matrix4d> cost(e2.size() + 1, Eigen::Matrix4d::Zero());
  for (std::size_t d = 0; d < e2.size(); ++d) cost[d + 1] = (e2[d] + u2[d]) / double(d + 1);

  Eigen::Vector4d z = Eigen::Vector4d::Zero();
  z(0) = 1.0;
  std::vector<bool> fixed = {true, false, false, false};
  constexpr double kTol = 1e-9;

  for (int power = static_cast<int>(cost.size()) - 1; power >= 1; --power) {
    const Eigen::Matrix4d& Q = cost[static_cast<std::size_t>(power)];
    std::vector<int> free_idx;
    for (int k = 1; k < 4; ++k) {
      if (!fixed[static_cast<std::size_t>(k)]) free_idx.push_back(k);
    }
    if (free_idx.empty()) break;

    // Value = c + 2 g^T y + y^T H y over the free parameters y.
    const Eigen::Index nf = static_cast<Eigen::Index>(free_idx.size());
    Eigen::MatrixXd H(nf, nf);
    Eigen::VectorXd g(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      g(a) = 0.0;
      for (int k = 0; k < 4; ++k) {
        if (fixed[static_cast<std::size_t>(k)]) g(a) += Q(free_idx[a], k) * z(k);
      }
      for (Eigen::Index b = 0; b < nf; ++b) H(a, b) = Q(free_idx[a], free_idx[b]);
    }

    std::vector<Eigen::Index> quadratic, linear_only;
    for (Eigen::Index a = 0; a < nf; ++a) {
      if (H.row(a).cwiseAbs().maxCoeff() > kTol) {
        quadratic.push_back(a);
      } else if (std::abs(g(a)) > kTol) {
        linear_only.push_back(a);
      }
    }
    if (!linear_only.empty()) {
      out.next_coefficient_is_linear = true;
      out.linear_power = power;
      out.linear_slope = 2.0 * g(linear_only.front());
      break;
    }
    if (quadratic.empty()) continue;  // independent of the free parameters

    const Eigen::Index nq = static_cast<Eigen::Index>(quadratic.size());
    Eigen::MatrixXd Hq(nq, nq);
    Eigen::VectorXd gq(nq);
    for (Eigen::Index a = 0; a < nq; ++a) {
      gq(a) = g(quadratic[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < nq; ++b) {
        Hq(a, b) = H(quadratic[static_cast<std::size_t>(a)], quadratic[static_cast<std::size_t>(b)]);
      }
    }
    if (!(min_symmetric_eigenvalue(Hq) > kTol)) {
      throw Error(ErrorCode::kNumericalFailure,
                  "polynomial reference: leading coefficient has no unique minimizer");
    }
    const Eigen::VectorXd y = Hq.llt().solve(-gq);
    for (Eigen::Index a = 0; a < nq; ++a) {
      const int k = free_idx[static_cast<std::size_t>(quadratic[static_cast<std::size_t>(a)])];
      z(k) = y(a);
      fixed[static_cast<std::size_t>(k)] = true;
    }
  }

  out.gamma1 = z(1);
  out.gamma2 = z(2);
  return out;
}

}  // namespace outreg

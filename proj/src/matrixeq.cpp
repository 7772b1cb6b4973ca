#include "outreg/matrixeq.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "outreg/error.hpp"

namespace outreg {

int LinearMatrixSystem::add_unknown(std::string name, int rows, int cols) {
  unknowns_.push_back({std::move(name), rows, cols});
  return static_cast<int>(unknowns_.size()) - 1;
}

int LinearMatrixSystem::add_equation(std::string name, Eigen::MatrixXd rhs) {
  equations_.push_back({std::move(name), {}, std::move(rhs)});
  return static_cast<int>(equations_.size()) - 1;
}

void LinearMatrixSystem::add_term(int equation, Eigen::MatrixXd left, int unknown,
                                  Eigen::MatrixXd right, double scale) {
  equations_.at(static_cast<std::size_t>(equation))
      .terms.push_back({std::move(left), unknown, std::move(right), scale});
}

Eigen::Index LinearMatrixSystem::unknown_count() const {
  Eigen::Index total = 0;
  for (const auto& u : unknowns_) total += static_cast<Eigen::Index>(u.rows) * u.cols;
  return total;
}

Eigen::Index LinearMatrixSystem::equation_count() const {
  Eigen::Index total = 0;
  for (const auto& e : equations_) total += e.rhs.size();
  return total;
}

Eigen::Index LinearMatrixSystem::offset(int unknown) const {
  Eigen::Index off = 0;
  for (int i = 0; i < unknown; ++i) off += static_cast<Eigen::Index>(unknowns_[i].rows) * unknowns_[i].cols;
  return off;
}

void LinearMatrixSystem::validate() const {
  for (const auto& eq : equations_) {
    for (const auto& t : eq.terms) {
      if (t.unknown < 0 || t.unknown >= static_cast<int>(unknowns_.size())) {
        throw Error(ErrorCode::kDimensionMismatch, "equation '" + eq.name + "' references an unknown that does not exist");
      }
      const Unknown& u = unknowns_[static_cast<std::size_t>(t.unknown)];
      const Eigen::Index out_rows = t.left.size() == 0 ? u.rows : t.left.rows();
      const Eigen::Index out_cols = t.right.size() == 0 ? u.cols : t.right.cols();
      const bool inner_ok = (t.left.size() == 0 || t.left.cols() == u.rows) &&
                            (t.right.size() == 0 || t.right.rows() == u.cols);
      if (!inner_ok || out_rows != eq.rhs.rows() || out_cols != eq.rhs.cols()) {
        std::ostringstream os;
        os << "term on '" << u.name << "' in equation '" << eq.name
           << "' does not compose to the " << eq.rhs.rows() << "x" << eq.rhs.cols()
           << " constant";
        throw Error(ErrorCode::kDimensionMismatch, os.str());
      }
    }
  }
}

std::vector<Eigen::MatrixXd> LinearMatrixSystem::evaluate_residuals(
    const std::vector<Eigen::MatrixXd>& values) const {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(equations_.size());
  for (const auto& eq : equations_) {
    Eigen::MatrixXd acc = -eq.rhs;
    for (const auto& t : eq.terms) {
      const Eigen::MatrixXd& x = values.at(static_cast<std::size_t>(t.unknown));
      Eigen::MatrixXd lx = t.left.size() == 0 ? x : Eigen::MatrixXd(t.left * x);
      if (t.right.size() == 0) {
        acc += t.scale * lx;
      } else {
        acc += t.scale * lx * t.right;
      }
    }
    out.push_back(std::move(acc));
  }
  return out;
}

double LinearMatrixSystem::relative_residual(const std::vector<Eigen::MatrixXd>& values) const {
  double res2 = 0.0;
  double rhs2 = 0.0;
  const auto residuals = evaluate_residuals(values);
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    res2 += residuals[i].squaredNorm();
    rhs2 += equations_[i].rhs.squaredNorm();
  }
  return std::sqrt(res2) / (1.0 + std::sqrt(rhs2));
}

std::vector<Eigen::MatrixXd> LinearMatrixSystem::split(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  std::vector<Eigen::MatrixXd> out;
  Eigen::Index off = 0;
  for (const auto& u : unknowns_) {
    const Eigen::Index size = static_cast<Eigen::Index>(u.rows) * u.cols;
    out.push_back(unvec(x.segment(off, size), u.rows, u.cols));
    off += size;
  }
  return out;
}

Eigen::VectorXd LinearMatrixSystem::stack(const std::vector<Eigen::MatrixXd>& values) const {
  Eigen::VectorXd x(unknown_count());
  Eigen::Index off = 0;
  for (std::size_t i = 0; i < unknowns_.size(); ++i) {
    x.segment(off, values.at(i).size()) = vec(values[i]);
    off += values[i].size();
  }
  return x;
}

AssembledSystem assemble(const LinearMatrixSystem& system, kernels::Exec exec) {
  system.validate();
  AssembledSystem out;
  out.M = Eigen::MatrixXd::Zero(system.equation_count(), system.unknown_count());
  out.b.resize(system.equation_count());
  Eigen::Index row0 = 0;
  for (const auto& eq : system.equations()) {
    out.b.segment(row0, eq.rhs.size()) = vec(eq.rhs);
    for (const auto& t : eq.terms) {
      const auto& u = system.unknowns()[static_cast<std::size_t>(t.unknown)];
      const Eigen::MatrixXd left =
          t.left.size() == 0 ? Eigen::MatrixXd::Identity(u.rows, u.rows) : t.left;
      const Eigen::MatrixXd right =
          t.right.size() == 0 ? Eigen::MatrixXd::Identity(u.cols, u.cols) : t.right;
      kernels::accumulate_kron(out.M, row0, system.offset(t.unknown), left, right, t.scale, exec);
    }
    row0 += eq.rhs.size();
  }
  return out;
}

const char* to_string(Classification c) {
  switch (c) {
    case Classification::kUnique: return "Unique";
    case Classification::kUnderdetermined: return "Underdetermined";
    case Classification::kInconsistent: return "Inconsistent";
  }
  return "Unknown";
}

SolveOutcome solve(const LinearMatrixSystem& system) {
  return solve_assembled(system, assemble(system));
}

SolveOutcome solve_assembled(const LinearMatrixSystem& system, const AssembledSystem& assembled) {
  const Eigen::MatrixXd& M = assembled.M;
  const Eigen::VectorXd& b = assembled.b;
  SolveOutcome out;
  out.unknowns = M.cols();

  Eigen::MatrixXd V;
  if (M.rows() == 0) {
    out.x = Eigen::VectorXd::Zero(M.cols());
    V = Eigen::MatrixXd::Identity(M.cols(), M.cols());
    out.rank = 0;
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success) {
      throw Error(ErrorCode::kNumericalFailure, "singular value decomposition did not converge");
    }
    const Eigen::VectorXd& sigma = svd.singularValues();
    const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
    const double tau =
        static_cast<double>(std::max(M.rows(), M.cols())) * sigma_max * kRankRelTol;
    int rank = 0;
    while (rank < sigma.size() && sigma(rank) > tau) ++rank;
    out.rank = rank;
    V = svd.matrixV();
    const auto apply_pinv = [&](const Eigen::VectorXd& rhs) -> Eigen::VectorXd {
      const Eigen::VectorXd coeffs =
          (svd.matrixU().leftCols(rank).transpose() * rhs).cwiseQuotient(sigma.head(rank));
      return V.leftCols(rank) * coeffs;
    };
    out.x = apply_pinv(b);
    // Full column rank: refine with residuals in extended precision, which
    // recovers forward accuracy on ill-conditioned but nonsingular systems.
    if (rank == M.cols() && M.rows() == M.cols()) {
      const Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> Ml = M.cast<long double>();
      const Eigen::Matrix<long double, Eigen::Dynamic, 1> bl = b.cast<long double>();
      for (int step = 0; step < 3; ++step) {
        const Eigen::VectorXd r = (bl - Ml * out.x.cast<long double>()).cast<double>();
        const Eigen::VectorXd dx = apply_pinv(r);
        out.x += dx;
        if (dx.norm() <= 1e-17 * out.x.norm()) break;
      }
    }
  }

  out.residual = M.rows() == 0 ? 0.0 : (M * out.x - b).norm();
  out.relative_residual = out.residual / (1.0 + b.norm());
  out.null_vectors = V.rightCols(M.cols() - out.rank);
  out.solution = system.split(out.x);
  for (Eigen::Index k = 0; k < out.null_vectors.cols(); ++k) {
    out.nullspace.push_back(system.split(out.null_vectors.col(k)));
  }

  if (out.relative_residual > kConsistencyTol) {
    out.classification = Classification::kInconsistent;
  } else if (out.rank < M.cols()) {
    out.classification = Classification::kUnderdetermined;
  } else {
    out.classification = Classification::kUnique;
  }
  return out;
}

Eigen::MatrixXd sylvester_operator(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                   const Eigen::Ref<const Eigen::MatrixXd>& Abar) {
  LinearMatrixSystem sys;
  const int x = sys.add_unknown("X", static_cast<int>(A.rows()), static_cast<int>(Abar.rows()));
  const int eq = sys.add_equation("sylvester", Eigen::MatrixXd::Zero(A.rows(), Abar.rows()));
  sys.add_left(eq, A, x);
  sys.add_right(eq, x, Abar);
  return assemble(sys).M;
}

PerturbationBound verify_perturbation_bound(const Eigen::Ref<const Eigen::MatrixXd>& M,
                                            const Eigen::Ref<const Eigen::MatrixXd>& Delta,
                                            const Eigen::Ref<const Eigen::VectorXd>& b,
                                            double eps) {
  if (M.rows() != M.cols() || Delta.rows() != M.rows() || Delta.cols() != M.cols() ||
      b.size() != M.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "M, Delta and b must be n x n, n x n and n");
  }
  if (!(eps > 0.0)) {
    throw Error(ErrorCode::kPreconditionViolated, "eps must be positive");
  }
  if (numerical_rank(M).rank < M.rows()) {
    throw Error(ErrorCode::kPreconditionViolated, "M is singular");
  }
  auto norm2 = [](const Eigen::MatrixXd& m) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
  };
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  const Eigen::MatrixXd Minv = lu.inverse();
  const double coupling = norm2(Minv * Delta);
  if (eps * coupling >= 1.0) {
    throw Error(ErrorCode::kPreconditionViolated, "eps must stay below 1 / ||M^-1 Delta||");
  }
  const Eigen::VectorXd x = lu.solve(b);
  const Eigen::VectorXd x_eps = (M + eps * Delta).partialPivLu().solve(b);

  PerturbationBound out;
  out.bound = eps * norm2(Minv) * norm2(Delta) * x.norm() / (1.0 - eps * coupling);
  out.actual = (x_eps - x).norm();
  out.holds = out.actual <= out.bound + 1e-12;
  return out;
}

ExoEigenbasis exosystem_eigenbasis(const Exosystem& exo) {
  const Eigen::MatrixXd& Abar = exo.Abar;
  const Eigen::Index nbar = Abar.rows();
  const auto clusters = distinct_eigenvalues(Abar);

  std::vector<Complex> values;
  std::vector<Eigen::VectorXcd> vectors;
  auto eigenspace = [&](Complex lambda, int multiplicity) {
    const Eigen::MatrixXcd shifted =
        Abar.cast<Complex>() - lambda * Eigen::MatrixXcd::Identity(nbar, nbar);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted, Eigen::ComputeFullV);
    const RankInfo info = numerical_rank(shifted);
    if (nbar - info.rank < multiplicity) {
      std::ostringstream os;
      os << "eigenvalue " << lambda << " has geometric multiplicity "
         << nbar - info.rank << " < algebraic " << multiplicity;
      throw Error(ErrorCode::kNotSemisimple, os.str());
    }
    return Eigen::MatrixXcd(svd.matrixV().rightCols(multiplicity));
  };

  // Real eigenvalues first, with real eigenvectors.
  for (const auto& c : clusters) {
    if (std::abs(c.value.imag()) > kClusterTol) continue;
    const double lambda = c.value.real();
    const Eigen::MatrixXd shifted = Abar - lambda * Eigen::MatrixXd::Identity(nbar, nbar);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(shifted, Eigen::ComputeFullV);
    const RankInfo info = numerical_rank(shifted);
    if (nbar - info.rank < c.multiplicity) {
      std::ostringstream os;
      os << "eigenvalue " << lambda << " has geometric multiplicity " << nbar - info.rank
         << " < algebraic " << c.multiplicity;
      throw Error(ErrorCode::kNotSemisimple, os.str());
    }
    const Eigen::MatrixXd basis = svd.matrixV().rightCols(c.multiplicity);
    for (Eigen::Index k = 0; k < basis.cols(); ++k) {
      values.emplace_back(lambda, 0.0);
      vectors.push_back(basis.col(k).cast<Complex>());
    }
  }
  for (const auto& c : clusters) {
    if (c.value.imag() <= kClusterTol) continue;
    const Eigen::MatrixXcd basis = eigenspace(c.value, c.multiplicity);
    for (Eigen::Index k = 0; k < basis.cols(); ++k) {
      values.push_back(c.value);
      vectors.push_back(basis.col(k));
      values.push_back(std::conj(c.value));
      vectors.push_back(basis.col(k).conjugate());
    }
  }
  if (static_cast<Eigen::Index>(values.size()) != nbar) {
    throw Error(ErrorCode::kNotSemisimple, "eigenvalues do not pair into conjugates");
  }

  ExoEigenbasis out;
  out.values.resize(nbar);
  out.V.resize(nbar, nbar);
  for (Eigen::Index k = 0; k < nbar; ++k) {
    out.values(k) = values[static_cast<std::size_t>(k)];
    out.V.col(k) = vectors[static_cast<std::size_t>(k)];
  }
  if (numerical_rank(out.V).rank < nbar) {
    throw Error(ErrorCode::kNotSemisimple, "eigenvector matrix is singular");
  }
  out.Vinv = out.V.fullPivLu().inverse();
  const double recon =
      (out.V * out.values.asDiagonal() * out.Vinv - Abar.cast<Complex>()).norm();
  const double scale = Eigen::JacobiSVD<Eigen::MatrixXd>(Abar).singularValues()(0);
  if (recon > 1e-10 * (1.0 + scale)) {
    throw Error(ErrorCode::kNotSemisimple, "eigen-decomposition does not reconstruct Abar");
  }
  return out;
}

}  // namespace outreg

#include "outreg/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "outreg/error.hpp"

namespace outreg {

namespace {

template <typename Matrix>
RankInfo rank_of(const Matrix& m) {
  RankInfo info;
  const Eigen::Index dim = std::max(m.rows(), m.cols());
  if (m.size() == 0) {
    info.singular_values.resize(0);
    return info;
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  info.singular_values = svd.singularValues();
  info.sigma_max = info.singular_values.size() > 0 ? info.singular_values(0) : 0.0;
  info.threshold = static_cast<double>(dim) * info.sigma_max * kRankRelTol;
  for (Eigen::Index i = 0; i < info.singular_values.size(); ++i) {
    if (info.singular_values(i) > info.threshold) ++info.rank;
  }
  return info;
}

}  // namespace

double RankInfo::relative(int k) const {
  if (k < 0 || k >= singular_values.size()) return 0.0;
  if (sigma_max == 0.0) return 0.0;
  return singular_values(k) / (threshold / kRankRelTol);
}

RankInfo numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return rank_of(Eigen::MatrixXd(m));
}

RankInfo numerical_rank(const Eigen::Ref<const Eigen::MatrixXcd>& m) {
  return rank_of(Eigen::MatrixXcd(m));
}

std::vector<EigenCluster> cluster_eigenvalues(const Eigen::VectorXcd& values,
                                              double tol) {
  std::vector<EigenCluster> clusters;
  std::vector<Complex> sums;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    bool placed = false;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (std::abs(values(i) - clusters[c].value) <= tol) {
        sums[c] += values(i);
        ++clusters[c].multiplicity;
        clusters[c].value = sums[c] / static_cast<double>(clusters[c].multiplicity);
        placed = true;
        break;
      }
    }
    if (!placed) {
      clusters.push_back({values(i), 1});
      sums.push_back(values(i));
    }
  }
  return clusters;
}

std::vector<EigenCluster> distinct_eigenvalues(
    const Eigen::Ref<const Eigen::MatrixXd>& a) {
  if (a.rows() == 0) return {};
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumericalFailure, "eigenvalue iteration did not converge");
  }
  return cluster_eigenvalues(es.eigenvalues());
}

double spectral_abscissa(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumericalFailure, "eigenvalue iteration did not converge");
  }
  return es.eigenvalues().real().maxCoeff();
}

double spectral_radius(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumericalFailure, "eigenvalue iteration did not converge");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_symmetric_eigenvalue(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.allFinite();
}

Eigen::VectorXd vec(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Eigen::MatrixXd copy = m;
  return Eigen::Map<const Eigen::VectorXd>(copy.data(), copy.size());
}

Eigen::MatrixXd unvec(const Eigen::Ref<const Eigen::VectorXd>& v, int rows,
                      int cols) {
  Eigen::VectorXd copy = v;
  return Eigen::Map<const Eigen::MatrixXd>(copy.data(), rows, cols);
}

}  // namespace outreg

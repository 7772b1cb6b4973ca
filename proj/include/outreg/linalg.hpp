#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace outreg {

using Complex = std::complex<double>;

/// Relative factor in the numerical-rank threshold
/// tau = max(rows, cols) * sigma_max * kRankRelTol.
inline constexpr double kRankRelTol = 1e-12;
/// Eigenvalues closer than this are treated as one repeated eigenvalue.
inline constexpr double kClusterTol = 1e-8;

struct RankInfo {
  int rank = 0;
  double sigma_max = 0.0;
  double threshold = 0.0;
  Eigen::VectorXd singular_values;

  /// Smallest singular value counted as nonzero (0 for a zero matrix).
  double smallest_nonzero() const {
    return rank > 0 ? singular_values(rank - 1) : 0.0;
  }
  /// sigma_k scaled by max(rows, cols) * sigma_max; compare against
  /// kRankRelTol to decide whether index k (0-based) lies inside the rank.
  double relative(int k) const;
};

RankInfo numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& m);
RankInfo numerical_rank(const Eigen::Ref<const Eigen::MatrixXcd>& m);

/// Distinct eigenvalues after grouping those within kClusterTol of each
/// other; each entry keeps the cluster mean and its size.
struct EigenCluster {
  Complex value;
  int multiplicity = 0;
};
std::vector<EigenCluster> cluster_eigenvalues(const Eigen::VectorXcd& values,
                                              double tol = kClusterTol);

/// Distinct eigenvalues of a real square matrix.
std::vector<EigenCluster> distinct_eigenvalues(
    const Eigen::Ref<const Eigen::MatrixXd>& a);

double spectral_abscissa(const Eigen::Ref<const Eigen::MatrixXd>& a);
double spectral_radius(const Eigen::Ref<const Eigen::MatrixXd>& a);
double min_symmetric_eigenvalue(const Eigen::Ref<const Eigen::MatrixXd>& a);

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// Column-stacking vec(.) and its inverse.
Eigen::VectorXd vec(const Eigen::Ref<const Eigen::MatrixXd>& m);
Eigen::MatrixXd unvec(const Eigen::Ref<const Eigen::VectorXd>& v, int rows,
                      int cols);

}  // namespace outreg

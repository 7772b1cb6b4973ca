#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP implementation used by
// the library and a plain serial implementation kept as the test and
// benchmark reference; both must agree to rounding.

#include <Eigen/Dense>

namespace outreg::kernels {

enum class Exec { kSerial, kParallel };

/// out.block(row0, col0, ...) += scale * kron(right^T, left).
/// `left` is r x k and `right` is c x q, so the block is (q*r) x (c*k).
void accumulate_kron(Eigen::Ref<Eigen::MatrixXd> out, Eigen::Index row0,
                     Eigen::Index col0, const Eigen::Ref<const Eigen::MatrixXd>& left,
                     const Eigen::Ref<const Eigen::MatrixXd>& right, double scale,
                     Exec exec = Exec::kParallel);

/// Time average (1/T) * integral_0^T s(t)^T S s(t) dt for s(t) = M * xbar(t)
/// with xbar(t) = expm(Abar t) xbar0, by composite Simpson quadrature on
/// `steps` (rounded up to even) uniform intervals.
double time_average_quadratic(const Eigen::Ref<const Eigen::MatrixXd>& Abar,
                              const Eigen::Ref<const Eigen::VectorXd>& xbar0,
                              const Eigen::Ref<const Eigen::MatrixXd>& M,
                              const Eigen::Ref<const Eigen::MatrixXd>& S,
                              double horizon, long steps, Exec exec = Exec::kParallel);

}  // namespace outreg::kernels

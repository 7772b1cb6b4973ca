#include "outreg/kernels.hpp"

#include <algorithm>

#include <unsupported/Eigen/MatrixFunctions>

namespace outreg::kernels {

namespace {

void accumulate_kron_serial(Eigen::Ref<Eigen::MatrixXd> out, Eigen::Index row0,
                            Eigen::Index col0, const Eigen::MatrixXd& left,
                            const Eigen::MatrixXd& right, double scale) {
  const Eigen::Index r = left.rows(), k = left.cols();
  const Eigen::Index c = right.rows(), q = right.cols();
  for (Eigen::Index a = 0; a < q; ++a) {
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index b = 0; b < c; ++b) {
        for (Eigen::Index j = 0; j < k; ++j) {
          out(row0 + a * r + i, col0 + b * k + j) += scale * right(b, a) * left(i, j);
        }
      }
    }
  }
}

void accumulate_kron_parallel(Eigen::Ref<Eigen::MatrixXd> out, Eigen::Index row0,
                              Eigen::Index col0, const Eigen::MatrixXd& left,
                              const Eigen::MatrixXd& right, double scale) {
  const Eigen::Index r = left.rows(), k = left.cols();
  const Eigen::Index c = right.rows(), q = right.cols();
  // Blocks (a, b) are disjoint, so the collapsed loop is race free.
#pragma omp parallel for collapse(2) schedule(static)
  for (Eigen::Index a = 0; a < q; ++a) {
    for (Eigen::Index b = 0; b < c; ++b) {
      const double w = scale * right(b, a);
      if (w == 0.0) continue;
      out.block(row0 + a * r, col0 + b * k, r, k).noalias() += w * left;
    }
  }
}

double simpson_weight(long i, long steps) {
  if (i == 0 || i == steps) return 1.0;
  return (i % 2 == 1) ? 4.0 : 2.0;
}

}  // namespace

void accumulate_kron(Eigen::Ref<Eigen::MatrixXd> out, Eigen::Index row0,
                     Eigen::Index col0, const Eigen::Ref<const Eigen::MatrixXd>& left,
                     const Eigen::Ref<const Eigen::MatrixXd>& right, double scale,
                     Exec exec) {
  const Eigen::MatrixXd l = left;
  const Eigen::MatrixXd rgt = right;
  if (exec == Exec::kSerial) {
    accumulate_kron_serial(out, row0, col0, l, rgt, scale);
  } else {
    accumulate_kron_parallel(out, row0, col0, l, rgt, scale);
  }
}

double time_average_quadratic(const Eigen::Ref<const Eigen::MatrixXd>& Abar,
                              const Eigen::Ref<const Eigen::VectorXd>& xbar0,
                              const Eigen::Ref<const Eigen::MatrixXd>& M,
                              const Eigen::Ref<const Eigen::MatrixXd>& S,
                              double horizon, long steps, Exec exec) {
  steps = std::max<long>(2, steps + (steps % 2));
  const double h = horizon / static_cast<double>(steps);
  const Eigen::MatrixXd step = (Abar * h).exp();
  const Eigen::MatrixXd weight = M.transpose() * S * M;
  const Eigen::VectorXd x0 = xbar0;

  auto integrand = [&](const Eigen::VectorXd& x) { return x.dot(weight * x); };

  double sum = 0.0;
  if (exec == Exec::kSerial) {
    Eigen::VectorXd x = x0;
    for (long i = 0; i <= steps; ++i) {
      sum += simpson_weight(i, steps) * integrand(x);
      x = step * x;
    }
  } else {
    // Fixed chunking keeps the partition independent of the thread count;
    // each chunk restarts from the exact flow at its first node.
    const long chunks = std::min<long>(64, steps + 1);
    const long per_chunk = (steps + 1 + chunks - 1) / chunks;
#pragma omp parallel for reduction(+ : sum) schedule(static)
    for (long ch = 0; ch < chunks; ++ch) {
      const long first = ch * per_chunk;
      const long last = std::min(steps + 1, first + per_chunk);
      if (first >= last) continue;
      Eigen::VectorXd x = (Abar * (h * static_cast<double>(first))).exp() * x0;
      double local = 0.0;
      for (long i = first; i < last; ++i) {
        local += simpson_weight(i, steps) * integrand(x);
        x = step * x;
      }
      sum += local;
    }
  }
  return sum * h / 3.0 / horizon;
}

}  // namespace outreg::kernels

#include "outreg/sim.hpp"

#include <cmath>
#include <sstream>

#include "outreg/error.hpp"

namespace outreg {

Trajectory simulate(const ClosedLoop& cl, const Eigen::VectorXd& x0, const Eigen::VectorXd& xbar0,
                    const SimConfig& cfg) {
  const int n = cl.n(), nbar = cl.nbar();
  if (x0.size() != n || xbar0.size() != nbar) {
    throw Error(ErrorCode::kDimensionMismatch, "simulate: x0 or xbar0 has the wrong length");
  }
  if (!(cfg.t_final > 0.0) || !(cfg.dt > 0.0) || cfg.dt > cfg.t_final || cfg.record_stride < 1 ||
      !std::isfinite(cfg.t_final)) {
    throw Error(ErrorCode::kPreconditionViolated,
                "simulate: need 0 < dt <= t_final and record_stride >= 1");
  }
  if (!(cl.spectral_abscissa < 0.0)) {
    throw Error(ErrorCode::kNotStabilizing, "simulate: closed loop is not stabilizing");
  }

  const long steps = static_cast<long>(std::ceil(cfg.t_final / cfg.dt - 1e-9));
  const double h = cfg.t_final / static_cast<double>(steps);
  const double ratio = h * spectral_radius(cl.M);
  if (ratio > kStepLimitRatio) {
    std::ostringstream os;
    os << "dt * spectral radius = " << ratio << " exceeds " << kStepLimitRatio;
    throw Error(ErrorCode::kStepTooLarge, os.str());
  }

  Trajectory traj;
  traj.dt = h;
  traj.step_warning = ratio > kStepWarnRatio;

  const long stride = cfg.record_stride;
  const long samples = steps / stride + 1 + (steps % stride != 0 ? 1 : 0);
  traj.t.reserve(static_cast<std::size_t>(samples));
  traj.x.resize(n, samples);
  traj.xbar.resize(nbar, samples);

  Eigen::VectorXd z(n + nbar);
  z << x0, xbar0;
  const Eigen::MatrixXd& M = cl.M;
  Eigen::Index col = 0;
  auto record = [&](double t) {
    traj.t.push_back(t);
    traj.x.col(col) = z.head(n);
    traj.xbar.col(col) = z.tail(nbar);
    ++col;
  };
  record(0.0);
  for (long k = 1; k <= steps; ++k) {
    const Eigen::VectorXd k1 = M * z;
    const Eigen::VectorXd k2 = M * (z + 0.5 * h * k1);
    const Eigen::VectorXd k3 = M * (z + 0.5 * h * k2);
    const Eigen::VectorXd k4 = M * (z + h * k3);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (k % stride == 0 || k == steps) record(static_cast<double>(k) * h);
  }

  traj.u = -cl.K * traj.x + cl.feedforward * traj.xbar;
  traj.y = cl.Cy * traj.x + cl.Dy * traj.xbar;
  traj.ybar = cl.Cbar * traj.xbar;
  traj.e = traj.y - traj.ybar;
  traj.xs = cl.Pi * traj.xbar;
  traj.us = cl.Gamma * traj.xbar;
  // Along x = Pi xbar the feedback term vanishes, so ys = y(xs).
  traj.ys = cl.Cy * traj.xs + cl.Dy * traj.xbar;
  return traj;
}

namespace {

// Trapezoid over the sample grid of the per-sample values f.
double trapezoid(const std::vector<double>& t, const Eigen::VectorXd& f) {
  double acc = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    acc += 0.5 * (t[k] - t[k - 1]) * (f(static_cast<Eigen::Index>(k)) +
                                      f(static_cast<Eigen::Index>(k - 1)));
  }
  return acc;
}

Eigen::VectorXd quadratic_samples(const Eigen::MatrixXd& s, const Eigen::MatrixXd& W) {
  if (s.rows() == 0) return Eigen::VectorXd::Zero(s.cols());
  return (s.array() * (W * s).array()).colwise().sum().transpose();
}

}  // namespace

SimReport finite_horizon_costs(const Trajectory& traj, const Weights& weights, CostBasis basis,
                               double settle_threshold) {
  SimReport r;
  if (traj.t.empty()) return r;
  const bool stationary = basis == CostBasis::kStationary;
  const Eigen::MatrixXd& x = stationary ? traj.xs : traj.x;
  const Eigen::MatrixXd& u = stationary ? traj.us : traj.u;
  const Eigen::MatrixXd e = stationary ? Eigen::MatrixXd(traj.ys - traj.ybar) : traj.e;

  r.horizon = traj.t.back() - traj.t.front();
  r.J_T_u = 0.5 * trapezoid(traj.t, quadratic_samples(u, weights.R));
  r.J_T_y = 0.5 * trapezoid(traj.t, quadratic_samples(e, weights.Q));
  r.J_T_x = weights.Qx.size() ? 0.5 * trapezoid(traj.t, quadratic_samples(x, weights.Qx)) : 0.0;
  r.J_T_lqt = weights.rho * r.J_T_y + weights.epsilon * r.J_T_u + r.J_T_x;
  if (r.horizon > 0.0) {
    r.power_u = r.J_T_u / r.horizon;
    r.power_y = r.J_T_y / r.horizon;
  }
  Trajectory view;
  view.t = traj.t;
  view.e = e;
  const TrackingMetrics metrics = tracking_error_metrics(view, settle_threshold);
  r.terminal_error = metrics.terminal_norm;
  r.settling_time = metrics.settling_time;
  return r;
}

TrackingMetrics tracking_error_metrics(const Trajectory& traj, double threshold) {
  TrackingMetrics out;
  const Eigen::Index count = traj.samples();
  if (count == 0) return out;
  const Eigen::VectorXd norms = traj.e.colwise().norm().transpose();
  out.terminal_norm = norms(count - 1);
  if (norms(count - 1) > threshold) return out;

  Eigen::Index first = count - 1;
  while (first > 0 && norms(first - 1) <= threshold) --first;
  out.settling_time = traj.t[static_cast<std::size_t>(first)];
  out.sup_after_settling = norms.tail(count - first).maxCoeff();
  return out;
}

}  // namespace outreg

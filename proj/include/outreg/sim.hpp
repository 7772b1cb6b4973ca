#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "outreg/control.hpp"
#include "outreg/model.hpp"

namespace outreg {

struct SimConfig {
  double t_final = 20.0;
  double dt = 1e-3;
  int record_stride = 10;
};

/// Recorded samples, one column per time in `t`.
struct Trajectory {
  std::vector<double> t;
  Eigen::MatrixXd x, xbar, u, y, ybar, e;
  // Stationary counterparts: xs = Pi xbar, us = Gamma xbar.
  Eigen::MatrixXd xs, us, ys;
  double dt = 0.0;            // step actually used (t_final divided evenly)
  bool step_warning = false;  // dt * spectral radius above 0.1

  Eigen::Index samples() const { return static_cast<Eigen::Index>(t.size()); }
};

inline constexpr double kStepWarnRatio = 0.1;
inline constexpr double kStepLimitRatio = 2.7;

/// Classical fixed-step RK4 on the augmented closed loop. The step is
/// shrunk so that a whole number of steps ends exactly at t_final; the first
/// and last samples are always recorded.
/// Throws Error(kStepTooLarge) when dt * spectral radius exceeds 2.7.
Trajectory simulate(const ClosedLoop& cl, const Eigen::VectorXd& x0, const Eigen::VectorXd& xbar0,
                    const SimConfig& cfg);

enum class CostBasis { kStationary, kActual };

struct SimReport {
  double horizon = 0.0;
  double J_T_u = 0.0;    // 1/2 int u^T R u
  double J_T_y = 0.0;    // 1/2 int e^T Q e
  double J_T_x = 0.0;    // 1/2 int x^T Qx x
  double J_T_lqt = 0.0;  // 1/2 int (rho e^T Q e + eps u^T R u + x^T Qx x)
  double power_u = 0.0;
  double power_y = 0.0;
  double terminal_error = 0.0;
  double settling_time = std::numeric_limits<double>::infinity();
};

/// Trapezoidal quadrature on the recorded grid.
SimReport finite_horizon_costs(const Trajectory& traj, const Weights& weights, CostBasis basis,
                               double settle_threshold = 1e-6);

struct TrackingMetrics {
  double terminal_norm = 0.0;
  /// Earliest sample time after which ||e|| stays at or below the threshold;
  /// +infinity when the last sample is still above it.
  double settling_time = std::numeric_limits<double>::infinity();
  double sup_after_settling = 0.0;
};

TrackingMetrics tracking_error_metrics(const Trajectory& traj, double threshold);

}  // namespace outreg

#pragma once

#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "outreg/analysis.hpp"
#include "outreg/control.hpp"
#include "outreg/model.hpp"
#include "outreg/regulator.hpp"
#include "outreg/sim.hpp"

namespace outreg {

inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::json;

struct ProblemFile {
  ProblemSpec spec;
  SimConfig sim;
};

/// Parses a problem document. Missing optional entries default to zero D,
/// Qx, Ed, Dd, identity Q and R, rho = epsilon = 1, an all-ones xbar0 and a
/// zero x0. Throws Error(kParseError) naming "section.key" for malformed
/// input and the validation errors of the model module for inconsistent
/// shapes or non-finite entries.
ProblemFile parse_problem(const std::string& text);
ProblemFile load_problem(const std::string& path);

/// Matrices are arrays of rows; a bare number is a 1x1 matrix and a flat
/// array of numbers is a single row.
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& where);
/// Accepts a flat array or a single column.
Eigen::VectorXd vector_from_json(const Json& j, const std::string& where);

Json problem_to_json(const ProblemFile& problem);

Json to_json(const PbhResult& r);
Json to_json(const ExoSpectrumResult& r);
Json to_json(const NonresonanceResult& r);
Json to_json(const ConditionReport& r);
Json to_json(const ClassicalSolution& s);
Json to_json(const EnergyOptimalSolution& s);
Json to_json(const ErrorOptimalSolution& s);
Json to_json(const LqtSolution& s);
Json to_json(const FeedbackGain& g);
Json to_json(const SimReport& r);
Json to_json(const TrackingMetrics& r);
Json to_json(const ConvergenceReport& r);
Json to_json(const ProbeReport& r);

/// Adds the tool name and version.
Json report_header(const std::string& command);

/// Writes `j` with two-space indentation. Throws Error(kIoError) when the
/// file cannot be written.
void write_json(const std::string& path, const Json& j);

/// Header t,x1..xn,u1..um,y1..yp,yb1..ybp; 17 significant digits.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

}  // namespace outreg

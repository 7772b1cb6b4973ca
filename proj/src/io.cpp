#include "outreg/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "outreg/error.hpp"

namespace outreg {

namespace {

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kParseError, where + ": " + what);
}

double number_at(const Json& j, const std::string& where) {
  if (!j.is_number()) parse_fail(where, "expected a number");
  return j.get<double>();
}

void reject_unknown(const Json& section, const std::string& name,
                    const std::set<std::string>& allowed) {
  for (auto it = section.begin(); it != section.end(); ++it) {
    if (!allowed.count(it.key())) parse_fail(name + "." + it.key(), "unknown key");
  }
}

const Json* find(const Json& section, const std::string& key) {
  auto it = section.find(key);
  return it == section.end() || it->is_null() ? nullptr : &*it;
}

const Json& section_at(const Json& doc, const std::string& name, bool required) {
  static const Json kEmpty = Json::object();
  auto it = doc.find(name);
  if (it == doc.end() || it->is_null()) {
    if (required) parse_fail(name, "missing section");
    return kEmpty;
  }
  if (!it->is_object()) parse_fail(name, "expected an object");
  return *it;
}

Eigen::MatrixXd required_matrix(const Json& section, const std::string& sname,
                                const std::string& key) {
  const Json* j = find(section, key);
  if (!j) parse_fail(sname + "." + key, "missing");
  return matrix_from_json(*j, sname + "." + key);
}

Eigen::MatrixXd optional_matrix(const Json& section, const std::string& sname,
                                const std::string& key, Eigen::MatrixXd fallback) {
  const Json* j = find(section, key);
  return j ? matrix_from_json(*j, sname + "." + key) : fallback;
}

Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Json variations_to_json(const std::vector<Variation>& basis) {
  Json out = Json::array();
  for (const auto& v : basis) {
    out.push_back({{"dPi", matrix_to_json(v.dPi)}, {"dGamma", matrix_to_json(v.dGamma)}});
  }
  return out;
}

// JSON has no infinity or NaN; they become null.
Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array()) parse_fail(where, "expected an array of rows");
  if (j.empty()) return Eigen::MatrixXd(0, 0);
  if (j.front().is_number()) {
    Eigen::MatrixXd row(1, static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
      row(0, static_cast<Eigen::Index>(k)) =
          number_at(j[k], where + "[" + std::to_string(k) + "]");
    }
    return row;
  }
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    if (!j[i].is_array()) parse_fail(at, "expected a row array");
    if (j[i].size() != cols) {
      parse_fail(at, "row has " + std::to_string(j[i].size()) + " entries, expected " +
                         std::to_string(cols));
    }
    for (std::size_t k = 0; k < cols; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          number_at(j[i][k], at + "[" + std::to_string(k) + "]");
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const Json& j, const std::string& where) {
  const Eigen::MatrixXd m = matrix_from_json(j, where);
  if (m.rows() == 1) return m.row(0).transpose();
  if (m.cols() == 1) return m.col(0);
  if (m.size() == 0) return Eigen::VectorXd(0);
  parse_fail(where, "expected a vector");
}

ProblemFile parse_problem(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    parse_fail("document", e.what());
  }
  if (!doc.is_object()) parse_fail("document", "expected an object");
  reject_unknown(doc, "document",
                 {"plant", "exosystem", "coupling", "weights", "x0", "sim", "name", "comment"});

  const Json& plant_j = section_at(doc, "plant", true);
  reject_unknown(plant_j, "plant", {"A", "B", "C", "D"});
  const Json& exo_j = section_at(doc, "exosystem", true);
  reject_unknown(exo_j, "exosystem", {"Abar", "Cbar", "xbar0"});
  const Json& coup_j = section_at(doc, "coupling", false);
  reject_unknown(coup_j, "coupling", {"Ed", "Dd"});
  const Json& w_j = section_at(doc, "weights", false);
  reject_unknown(w_j, "weights", {"Q", "R", "Qx", "rho", "epsilon"});
  const Json& sim_j = section_at(doc, "sim", false);
  reject_unknown(sim_j, "sim", {"t_final", "dt", "record_stride"});

  Plant plant;
  plant.A = required_matrix(plant_j, "plant", "A");
  plant.B = required_matrix(plant_j, "plant", "B");
  plant.C = required_matrix(plant_j, "plant", "C");
  const Eigen::Index n = plant.A.rows(), m = plant.B.cols(), p = plant.C.rows();
  plant.D = optional_matrix(plant_j, "plant", "D", Eigen::MatrixXd::Zero(p, m));

  Exosystem exo;
  exo.Abar = required_matrix(exo_j, "exosystem", "Abar");
  exo.Cbar = required_matrix(exo_j, "exosystem", "Cbar");
  const Eigen::Index nbar = exo.Abar.rows();
  exo.xbar0 = find(exo_j, "xbar0") ? vector_from_json(exo_j["xbar0"], "exosystem.xbar0")
                                   : Eigen::VectorXd::Ones(nbar);

  ProblemFile out;
  out.spec.plant = plant;
  out.spec.exo = exo;
  out.spec.coupling.Ed = optional_matrix(coup_j, "coupling", "Ed", Eigen::MatrixXd::Zero(n, nbar));
  out.spec.coupling.Dd = optional_matrix(coup_j, "coupling", "Dd", Eigen::MatrixXd::Zero(p, nbar));

  Weights& w = out.spec.weights;
  w.Q = optional_matrix(w_j, "weights", "Q", Eigen::MatrixXd::Identity(p, p));
  w.R = optional_matrix(w_j, "weights", "R", Eigen::MatrixXd::Identity(m, m));
  w.Qx = optional_matrix(w_j, "weights", "Qx", Eigen::MatrixXd::Zero(n, n));
  if (const Json* r = find(w_j, "rho")) w.rho = number_at(*r, "weights.rho");
  if (const Json* e = find(w_j, "epsilon")) w.epsilon = number_at(*e, "weights.epsilon");

  out.spec.x0 = doc.contains("x0") && !doc["x0"].is_null()
                    ? vector_from_json(doc["x0"], "x0")
                    : Eigen::VectorXd::Zero(n);

  if (const Json* t = find(sim_j, "t_final")) out.sim.t_final = number_at(*t, "sim.t_final");
  if (const Json* d = find(sim_j, "dt")) out.sim.dt = number_at(*d, "sim.dt");
  if (const Json* s = find(sim_j, "record_stride")) {
    if (!s->is_number_integer()) parse_fail("sim.record_stride", "expected an integer");
    out.sim.record_stride = s->get<int>();
  }

  validate_dimensions(out.spec);
  if (out.spec.exo.xbar0->size() != nbar) {
    throw Error(ErrorCode::kDimensionMismatch, "exosystem.xbar0 must have nbar entries");
  }
  if (out.spec.x0->size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "x0 must have n entries");
  }
  if (!out.spec.exo.xbar0->allFinite() || !out.spec.x0->allFinite()) {
    throw Error(ErrorCode::kNonFiniteEntry, "initial states must be finite");
  }
  return out;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open problem file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_problem(os.str());
}

Json problem_to_json(const ProblemFile& problem) {
  const ProblemSpec& s = problem.spec;
  Json j;
  j["plant"] = {{"A", matrix_to_json(s.plant.A)},
                {"B", matrix_to_json(s.plant.B)},
                {"C", matrix_to_json(s.plant.C)},
                {"D", matrix_to_json(s.plant.D)}};
  j["exosystem"] = {{"Abar", matrix_to_json(s.exo.Abar)}, {"Cbar", matrix_to_json(s.exo.Cbar)}};
  if (s.exo.xbar0) j["exosystem"]["xbar0"] = matrix_to_json(s.exo.xbar0->transpose());
  j["coupling"] = {{"Ed", matrix_to_json(s.coupling.Ed)}, {"Dd", matrix_to_json(s.coupling.Dd)}};
  j["weights"] = {{"Q", matrix_to_json(s.weights.Q)},
                  {"R", matrix_to_json(s.weights.R)},
                  {"Qx", matrix_to_json(s.weights.Qx)},
                  {"rho", s.weights.rho},
                  {"epsilon", s.weights.epsilon}};
  if (s.x0) j["x0"] = matrix_to_json(s.x0->transpose());
  j["sim"] = {{"t_final", problem.sim.t_final},
              {"dt", problem.sim.dt},
              {"record_stride", problem.sim.record_stride}};
  return j;
}

Json to_json(const PbhResult& r) {
  return {{"holds", r.holds}, {"margin", finite_or_null(r.margin)}};
}

Json to_json(const ExoSpectrumResult& r) {
  Json records = Json::array();
  for (const auto& e : r.records) {
    records.push_back({{"value", complex_to_json(e.value)},
                       {"abs_real", e.abs_real},
                       {"algebraic", e.algebraic},
                       {"geometric", e.geometric}});
  }
  return {{"holds", r.holds}, {"imag_axis_tol", r.imag_axis_tol}, {"eigenvalues", records}};
}

Json to_json(const NonresonanceResult& r) {
  Json records = Json::array();
  for (const auto& e : r.records) {
    records.push_back({{"value", complex_to_json(e.value)},
                       {"rank", e.rank},
                       {"required", e.required},
                       {"margin", e.margin}});
  }
  return {{"holds", r.holds}, {"eigenvalues", records}};
}

Json to_json(const ConditionReport& r) {
  return {{"stabilizable", to_json(r.stabilizable)},
          {"exosystem_spectrum", to_json(r.exo_spectrum)},
          {"nonresonance_over", to_json(r.nonres_over)},
          {"nonresonance_under", to_json(r.nonres_under)},
          {"energy_uniqueness", to_json(r.obsv_condition)},
          {"detectable", to_json(r.detectable)},
          {"input_rank", r.input_rank},
          {"input_full_rank", r.input_full_rank}};
}

Json to_json(const ClassicalSolution& s) {
  return {{"classification", to_string(s.classification)},
          {"Pi", matrix_to_json(s.Pi)},
          {"Gamma", matrix_to_json(s.Gamma)},
          {"residual", s.residual},
          {"nullspace_dimension", s.nullspace.size()},
          {"nullspace", variations_to_json(s.nullspace)}};
}

Json to_json(const EnergyOptimalSolution& s) {
  return {{"classification", to_string(s.classification)},
          {"costate_classification", to_string(s.triple_classification)},
          {"Pi_u", matrix_to_json(s.Pi_u)},
          {"Gamma_u", matrix_to_json(s.Gamma_u)},
          {"Pic_u", matrix_to_json(s.Pic_u)},
          {"Gammac_u", matrix_to_json(s.Gammac_u)},
          {"residual", s.residual},
          {"nullspace_dimension", s.nullspace.size()},
          {"nullspace", variations_to_json(s.nullspace)}};
}

Json to_json(const ErrorOptimalSolution& s) {
  return {{"classification", to_string(s.classification)},
          {"Pi_y", matrix_to_json(s.Pi_y)},
          {"Gamma_y", matrix_to_json(s.Gamma_y)},
          {"Pic_y", matrix_to_json(s.Pic_y)},
          {"residual", s.residual},
          {"nullspace_dimension", s.nullspace.size()},
          {"nullspace", variations_to_json(s.nullspace)}};
}

Json to_json(const LqtSolution& s) {
  return {{"classification", to_string(s.classification)},
          {"eps", s.eps},
          {"rho", s.rho},
          {"Pi", matrix_to_json(s.Pi)},
          {"Gamma", matrix_to_json(s.Gamma)},
          {"Pic", matrix_to_json(s.Pic)},
          {"residual", s.residual}};
}

Json to_json(const FeedbackGain& g) {
  return {{"K", matrix_to_json(g.K)},
          {"spectral_abscissa", g.spectral_abscissa},
          {"riccati_residual", g.riccati_residual}};
}

Json to_json(const SimReport& r) {
  return {{"horizon", r.horizon},
          {"J_T_u", r.J_T_u},
          {"J_T_y", r.J_T_y},
          {"J_T_x", r.J_T_x},
          {"J_T_lqt", r.J_T_lqt},
          {"power_u", r.power_u},
          {"power_y", r.power_y},
          {"terminal_error", r.terminal_error},
          {"settled", std::isfinite(r.settling_time)},
          {"settling_time", finite_or_null(r.settling_time)}};
}

Json to_json(const TrackingMetrics& r) {
  return {{"terminal_norm", r.terminal_norm},
          {"settled", std::isfinite(r.settling_time)},
          {"settling_time", finite_or_null(r.settling_time)},
          {"sup_after_settling", r.sup_after_settling}};
}

Json to_json(const ConvergenceReport& r) {
  return {{"study", r.mode == ConvergenceMode::kRhoToInfinity ? "rho" : "eps"},
          {"grid", r.grid},
          {"pi_errors", r.pi_errors},
          {"gamma_errors", r.gamma_errors},
          {"pi_slope", finite_or_null(r.pi_slope)},
          {"gamma_slope", finite_or_null(r.gamma_slope)}};
}

Json to_json(const ProbeReport& r) {
  return {{"trials", r.trials},
          {"basis_dimension", r.basis_dimension},
          {"uniqueness_condition", r.uniqueness_condition},
          {"min_delta", finite_or_null(r.min_delta)},
          {"max_first_variation", r.max_first_variation},
          {"all_nonnegative", r.all_nonnegative},
          {"strictly_positive", r.strictly_positive}};
}

Json report_header(const std::string& command) {
  return {{"tool", "outreg"}, {"version", kToolVersion}, {"command", command}};
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path);
  std::fputs("t", f);
  for (Eigen::Index i = 0; i < traj.x.rows(); ++i) std::fprintf(f, ",x%ld", long(i + 1));
  for (Eigen::Index i = 0; i < traj.u.rows(); ++i) std::fprintf(f, ",u%ld", long(i + 1));
  for (Eigen::Index i = 0; i < traj.y.rows(); ++i) std::fprintf(f, ",y%ld", long(i + 1));
  for (Eigen::Index i = 0; i < traj.ybar.rows(); ++i) std::fprintf(f, ",yb%ld", long(i + 1));
  std::fputc('\n', f);
  for (Eigen::Index k = 0; k < traj.samples(); ++k) {
    std::fprintf(f, "%.17g", traj.t[static_cast<std::size_t>(k)]);
    for (const Eigen::MatrixXd* block : {&traj.x, &traj.u, &traj.y, &traj.ybar}) {
      for (Eigen::Index i = 0; i < block->rows(); ++i) std::fprintf(f, ",%.17g", (*block)(i, k));
    }
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

}  // namespace outreg

#include "dpw/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>

#include "json.hpp"

namespace dpw {

namespace {

using json = nlohmann::ordered_json;
constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

double num_field(const json& j, const std::string& field, double fallback,
                 bool required = false) {
  if (!j.contains(field)) {
    if (required) field_error(field, "missing");
    return fallback;
  }
  if (!j[field].is_number()) field_error(field, "expected a number");
  return j[field].get<double>();
}

json as_array(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig rc;
  if (!j.contains("ends") || !j["ends"].is_array() || j["ends"].empty())
    field_error("ends", "expected a non-empty array");
  for (size_t i = 0; i < j["ends"].size(); ++i) {
    const json& e = j["ends"][i];
    const std::string tag = "ends[" + std::to_string(i) + "]";
    if (!e.is_object()) field_error(tag, "expected an object");
    if (!e.contains("direction") || !e["direction"].is_array() ||
        e["direction"].size() != 3)
      field_error(tag + ".direction", "expected an array of 3 numbers");
    for (const json& c : e["direction"])
      if (!c.is_number()) field_error(tag + ".direction", "expected numbers");
    if (!e.contains("weight") || !e["weight"].is_number())
      field_error(tag + ".weight", "expected a number");
    rc.directions.push_back({e["direction"][0].get<double>(),
                             e["direction"][1].get<double>(),
                             e["direction"][2].get<double>()});
    rc.weights.push_back(e["weight"].get<double>());
  }
  rc.t = num_field(j, "t", rc.t);
  rc.steps = static_cast<int>(num_field(j, "steps", rc.steps));
  if (j.contains("numerics")) {
    const json& n = j["numerics"];
    if (!n.is_object()) field_error("numerics", "expected an object");
    rc.N = static_cast<int>(num_field(n, "N", rc.N));
    rc.rho = num_field(n, "rho", rc.rho);
    rc.grid = static_cast<int>(num_field(n, "grid", rc.grid));
    rc.epsilon_override = num_field(n, "epsilon_override", rc.epsilon_override);
    rc.newton_tol = num_field(n, "newton_tol", rc.newton_tol);
    rc.balance_tol = num_field(n, "balance_tol", rc.balance_tol);
  }
  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    if (!o.is_object()) field_error("outputs", "expected an object");
    if (o.contains("mesh_path")) {
      if (!o["mesh_path"].is_string()) field_error("outputs.mesh_path", "expected a string");
      rc.mesh_path = o["mesh_path"].get<std::string>();
    }
    if (o.contains("report_path")) {
      if (!o["report_path"].is_string()) field_error("outputs.report_path", "expected a string");
      rc.report_path = o["report_path"].get<std::string>();
    }
    rc.resolution = static_cast<int>(num_field(o, "resolution", rc.resolution));
    rc.end_truncation = num_field(o, "end_truncation", rc.end_truncation);
  }
  if (j.contains("project_balance")) {
    if (!j["project_balance"].is_boolean())
      field_error("project_balance", "expected a boolean");
    rc.project_balance = j["project_balance"].get<bool>();
  }
  if (j.contains("report_only")) {
    if (!j["report_only"].is_boolean())
      field_error("report_only", "expected a boolean");
    rc.report_only = j["report_only"].get<bool>();
  }
  return rc;
}

std::string RunConfig::serialize() const {
  json j;
  j["ends"] = json::array();
  for (size_t i = 0; i < directions.size(); ++i)
    j["ends"].push_back(
        {{"direction", as_array(directions[i])}, {"weight", weights[i]}});
  j["t"] = t;
  j["steps"] = steps;
  j["numerics"] = {{"N", N},
                   {"rho", rho},
                   {"grid", grid},
                   {"epsilon_override", epsilon_override},
                   {"newton_tol", newton_tol},
                   {"balance_tol", balance_tol}};
  j["outputs"] = {{"mesh_path", mesh_path},
                  {"report_path", report_path},
                  {"resolution", resolution},
                  {"end_truncation", end_truncation}};
  j["project_balance"] = project_balance;
  j["report_only"] = report_only;
  return j.dump(2);
}

std::vector<double> project_balance(const std::vector<Vec3>& u,
                                    const std::vector<double>& tau) {
  const int n = static_cast<int>(u.size());
  Eigen::MatrixXd A(3, n);
  for (int i = 0; i < n; ++i) A.col(i) = Eigen::Vector3d(u[i].x, u[i].y, u[i].z);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU |
                                               Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  if (svd.rank() < 2)
    throw ConfigError("project_balance: directions are collinear");
  Eigen::VectorXd t0 = Eigen::Map<const Eigen::VectorXd>(tau.data(), n);
  const Eigen::VectorXd delta = -svd.solve(A * t0);  // minimal-norm correction
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = tau[i] + delta[i];
  return out;
}

RunResult run_pipeline(const RunConfig& rc) {
  json report;
  report["config"] = json::parse(rc.serialize());
  json timings;
  double mark = now_seconds();
  auto lap = [&](const char* stage) {
    const double t2 = now_seconds();
    timings[stage] = t2 - mark;
    mark = t2;
  };
  auto finish = [&](int code, std::string msg) {
    report["status"] = {{"exit_code", code}, {"message", msg}};
    report["timings"] = timings;
    RunResult res{code, std::move(msg), report.dump(2)};
    if (!rc.report_path.empty()) {
      std::ofstream out(rc.report_path);
      out << res.report << "\n";
    }
    return res;
  };

  // --- validate ---
  Vec3 defect{0, 0, 0};
  for (size_t i = 0; i < rc.directions.size(); ++i)
    defect = defect + rc.directions[i] * rc.weights[i];
  report["balance_defect"] = as_array(defect);
  std::vector<double> tau = rc.weights;
  NoidConfig cfg;
  try {
    if (rc.project_balance) tau = project_balance(rc.directions, tau);
    cfg = NoidConfig::make(rc.directions, tau, rc.N, rc.rho, rc.grid,
                           rc.balance_tol, rc.epsilon_override);
  } catch (const std::exception& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, " (balance defect [%g, %g, %g])", defect.x,
                  defect.y, defect.z);
    return finish(2, std::string("validation: ") + e.what() + buf);
  }
  double min_angle = 180.0;
  bool positive = true;
  for (size_t i = 0; i < rc.directions.size(); ++i) {
    positive = positive && tau[i] > 0.0;
    for (size_t j = i + 1; j < rc.directions.size(); ++j) {
      const double c = std::clamp(dot(rc.directions[i], rc.directions[j]) /
                                      (rc.directions[i].norm() *
                                       rc.directions[j].norm()),
                                  -1.0, 1.0);
      min_angle = std::min(min_angle, std::acos(c) * 180.0 / kPi);
    }
  }
  // Thm 1's sufficient condition for embeddedness, reported only
  report["embeddedness_hypothesis"] = {
      {"min_angle_deg", min_angle},
      {"all_weights_positive", positive},
      {"holds", positive && min_angle > 60.0}};
  lap("validate");

  // --- seed + continue ---
  NoidSolver solver(cfg);
  std::vector<IterationRecord> log;
  std::vector<std::pair<double, ParamVector>> family;
  try {
    if (rc.t == 0.0)
      family.emplace_back(0.0, central_params(cfg));
    else
      family = solver.continue_in_t(rc.t, rc.steps, &log, rc.newton_tol);
  } catch (const SolverError& e) {
    report["residual_history"] = json::array();
    for (const IterationRecord& r : log)
      report["residual_history"].push_back({{"t", r.t},
                                            {"iteration", r.iteration},
                                            {"residual_norm", r.residual_norm},
                                            {"step_scale", r.step_scale}});
    char buf[64];
    std::snprintf(buf, sizeof buf, " (reached t = %g)", e.reached_t);
    return finish(3, std::string("solver: ") + e.what() + buf);
  }
  const double t_final = family.back().first;
  const ParamVector& x = family.back().second;
  report["t"] = t_final;
  report["residual_norm"] = solver.residual(t_final, x).norm();
  report["residual_history"] = json::array();
  for (const IterationRecord& r : log)
    report["residual_history"].push_back({{"t", r.t},
                                          {"iteration", r.iteration},
                                          {"residual_norm", r.residual_norm},
                                          {"step_scale", r.step_scale}});
  lap("continue");

  // --- diagnostics ---
  const CircleGrid grid(cfg.grid_size);
  report["per_end"] = json::array();
  for (int i = 0; i < cfg.n; ++i) {
    const EndDiagnostics ed = end_diagnostics(cfg, t_final, x, i);
    const UnitarityReport ur =
        unitarity_residual(monodromy(t_final, x, cfg, i, grid), grid);
    report["per_end"].push_back(
        {{"weight", ed.weight},
         {"weight_over_8pi_t",
          t_final != 0.0 ? ed.weight / (8.0 * kPi * t_final * cfg.tau[i]) : 0.0},
         {"r", ed.r},
         {"s", ed.s},
         {"axis_point", as_array(ed.axis_point)},
         {"axis_dir", as_array(ed.axis_dir)},
         {"angle_to_u_deg", ed.angle_to_u_deg},
         {"monodromy_unitarity",
          {{"circle_defect", ur.circle_defect},
           {"at_one", ur.at_one},
           {"dlambda_at_one", ur.dlambda_at_one}}}});
  }
  const HopfData hopf = hopf_differential(cfg, t_final, x);
  json umb = json::array();
  for (cplx z : hopf.umbilics) umb.push_back({z.real(), z.imag()});
  report["hopf"] = {{"umbilics", umb},
                    {"zeros_at_infinity", hopf.zeros_at_infinity},
                    {"total_zeros", hopf.total_zeros()},
                    {"h_residual", hopf.h_residual},
                    {"root_separation", hopf.root_separation}};
  lap("diagnostics");

  // --- mesh ---
  if (!rc.report_only) {
    try {
      const SurfaceMesh mesh =
          build_mesh(cfg, t_final, x, rc.resolution, rc.end_truncation);
      ImmersionEvaluator ev(cfg, t_final, x);
      json closures = json::array();
      for (int i = 0; i < cfg.n; ++i) closures.push_back(ev.closure_defect(i));
      report["closure_defects"] = closures;
      report["mesh"] = {{"vertices", mesh.vertices.size()},
                        {"faces", mesh.faces.size()},
                        {"path", rc.mesh_path}};
      std::ofstream out(rc.mesh_path);
      if (!out) throw MeshError("cannot open mesh output " + rc.mesh_path);
      write_obj(mesh, out);
    } catch (const std::exception& e) {
      return finish(4, std::string("mesh: ") + e.what());
    }
    lap("mesh");
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "ok: t = %g, residual = %.3g", t_final,
                report["residual_norm"].get<double>());
  return finish(0, buf);
}

int run_fixture(const std::string& name, std::ostream& out) {
  if (name == "sphere") {
    const int N = 16;
    const double rho = 1.05;
    const CircleGrid grid(64);
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    double factor_err = 0.0, sym_err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      cplx z(uni(rng), uni(rng));
      if (std::abs(z) > 3.0) {
        --trial;
        continue;
      }
      LoopMatrix Phi = LoopMatrix::identity(N, rho);
      Phi.at(0, 1).set_coeff(-1, z);
      const IwasawaPair iw = iwasawa(Phi, grid);
      const double s = 1.0 / std::sqrt(1.0 + std::norm(z));
      for (int i = -N; i <= N; ++i) {
        // F = s [[1, z/lambda],[-lambda conj z, 1]],  B = s [[1,0],[lambda conj z, 1+|z|^2]]
        factor_err = std::max(
            {factor_err,
             std::abs(iw.F.at(0, 0).coeff(i) - (i == 0 ? cplx(s) : 0.0)),
             std::abs(iw.F.at(0, 1).coeff(i) - (i == -1 ? s * z : 0.0)),
             std::abs(iw.F.at(1, 0).coeff(i) -
                      (i == 1 ? -s * std::conj(z) : 0.0)),
             std::abs(iw.F.at(1, 1).coeff(i) - (i == 0 ? cplx(s) : 0.0)),
             std::abs(iw.B.at(0, 0).coeff(i) - (i == 0 ? cplx(s) : 0.0)),
             std::abs(iw.B.at(0, 1).coeff(i)),
             std::abs(iw.B.at(1, 0).coeff(i) -
                      (i == 1 ? s * std::conj(z) : 0.0)),
             std::abs(iw.B.at(1, 1).coeff(i) -
                      (i == 0 ? cplx(s * (1.0 + std::norm(z))) : 0.0))});
      }
      const Vec3 f = sym_point(iw.F);
      const double d = 1.0 + std::norm(z);
      const Vec3 ref{2.0 * z.real() / d, 2.0 * z.imag() / d,
                     -2.0 * std::norm(z) / d};
      sym_err = std::max(sym_err, (f - ref).norm());
    }
    const bool pass = factor_err <= 1e-9 && sym_err <= 1e-8;
    out << "sphere fixture: factor err " << factor_err << ", sym err "
        << sym_err << (pass ? " pass" : " FAIL") << "\n";
    return pass ? 0 : 1;
  }
  if (name == "delaunay") {
    const double r = 3.0 / 8.0, s = 1.0 / 8.0, ta = r * s;
    const CircleGrid grid(64);
    const Path circle{{PathSegment::arc(0.0, 1.0, 0.0, 2.0 * kPi)}};
    double worst = 0.0;
    for (int k = 0; k < grid.size(); ++k) {
      const cplx lam = grid.node(k);
      Mat2 A;
      A << 0.0, r / lam + s, r * lam + s, 0.0;
      const Mat2 M = transport_node(
          [&](cplx z) { return Mat2((A / z).eval()); }, circle,
          Mat2::Identity());
      const cplx L = std::sqrt(ta * (lam - 1.0) * (lam - 1.0) / lam + 0.25);
      const cplx mu = std::exp(2.0 * kPi * cplx(0.0, 1.0) * L);
      Eigen::ComplexEigenSolver<Mat2> es(M);
      const cplx e0 = es.eigenvalues()(0), e1 = es.eigenvalues()(1);
      worst = std::max(
          worst, std::min(std::abs(e0 - mu) + std::abs(e1 - 1.0 / mu),
                          std::abs(e1 - mu) + std::abs(e0 - 1.0 / mu)) /
                     std::abs(mu));
    }
    const bool pass = worst <= 1e-7;
    out << "delaunay fixture: eigenvalue err " << worst
        << (pass ? " pass" : " FAIL") << "\n";
    return pass ? 0 : 1;
  }
  out << "unknown fixture '" << name << "'\n";
  return 1;
}

}  // namespace dpw

#pragma once

#include <iosfwd>
#include <string>

#include "dpw/surface.hpp"

namespace dpw {

/// One run of the pipeline, as parsed from a JSON document.
struct RunConfig {
  std::vector<Vec3> directions;
  std::vector<double> weights;
  double t = 1e-3;
  int steps = 10;

  int N = 24;
  double rho = 1.05;
  int grid = 128;
  double epsilon_override = 0.0;
  double newton_tol = 1e-10;
  double balance_tol = 1e-9;

  std::string mesh_path = "noid.obj";
  std::string report_path = "report.json";
  int resolution = 24;
  double end_truncation = 0.0;  // 0 selects eps/16

  bool project_balance = false;
  bool report_only = false;

  /// Throws ConfigError with a field-precise message.
  static RunConfig parse(const std::string& text);
  std::string serialize() const;
};

/// Minimal-norm correction of tau making sum tau_i u_i = 0 exact;
/// throws ConfigError when the directions span less than a plane.
std::vector<double> project_balance(const std::vector<Vec3>& u,
                                    const std::vector<double>& tau);

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 validation, 3 solver, 4 mesh
  std::string message;
  std::string report;  // JSON text, also written to report_path when set
};

/// validate -> seed -> continue -> mesh -> report
RunResult run_pipeline(const RunConfig& rc);

/// Golden fixtures ("sphere" or "delaunay"); prints a summary, returns 0 on
/// pass, 1 on failure.
int run_fixture(const std::string& name, std::ostream& out);

}  // namespace dpw

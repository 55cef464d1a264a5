#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>

#include "CLI11.hpp"
#include "dpw/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"CMC-1 n-noid generator (DPW method)"};
  std::string config_path, fixture;
  double t = std::nan("");
  int steps = -1, resolution = -1;
  bool project = false, report_only = false;
  app.add_option("config", config_path, "JSON run configuration");
  app.add_option("--t", t, "continuation target");
  app.add_option("--steps", steps, "continuation steps");
  app.add_option("--resolution", resolution, "mesh resolution");
  app.add_flag("--project-balance", project,
               "least-squares projection onto the balancing condition");
  app.add_flag("--report-only", report_only, "skip the mesh stage");
  app.add_option("--fixture", fixture, "golden fixture")
      ->check(CLI::IsMember({"sphere", "delaunay"}));
  CLI11_PARSE(app, argc, argv);

  if (!fixture.empty()) return dpw::run_fixture(fixture, std::cout);
  if (config_path.empty()) {
    std::cerr << "validation: missing config path (or --fixture)\n";
    return 2;
  }
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "validation: cannot read " << config_path << "\n";
    return 2;
  }
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  dpw::RunConfig rc;
  try {
    rc = dpw::RunConfig::parse(text);
  } catch (const std::exception& e) {
    std::cerr << "validation: " << e.what() << "\n";
    return 2;
  }
  if (!std::isnan(t)) rc.t = t;
  if (steps > 0) rc.steps = steps;
  if (resolution > 0) rc.resolution = resolution;
  rc.project_balance = rc.project_balance || project;
  rc.report_only = rc.report_only || report_only;

  const dpw::RunResult res = dpw::run_pipeline(rc);
  (res.exit_code == 0 ? std::cout : std::cerr) << res.message << "\n";
  return res.exit_code;
}

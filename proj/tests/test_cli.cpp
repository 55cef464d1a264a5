#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dpw/runner.hpp"
#include "json.hpp"

using namespace dpw;
using json = nlohmann::ordered_json;

namespace {

std::string trinoid_config(double t, int steps, int N, int grid,
                           const std::string& suffix) {
  const double h = std::sqrt(3.0) / 2.0;
  RunConfig rc;
  rc.directions = {{1, 0, 0}, {-0.5, h, 0}, {-0.5, -h, 0}};
  rc.weights = {1.0, 1.0, 1.0};
  rc.t = t;
  rc.steps = steps;
  rc.N = N;
  rc.grid = grid;
  rc.report_only = true;
  rc.mesh_path = "cli_test_" + suffix + ".obj";
  rc.report_path = "cli_test_" + suffix + ".json";
  return rc.serialize();
}

}  // namespace

TEST_CASE("config parse/serialize round trip is idempotent") {
  const std::string text = R"({
    "ends": [{"direction": [1, 0, 0], "weight": 2.5},
             {"direction": [-1, 0, 0], "weight": 2.5}],
    "t": 0.002,
    "numerics": {"N": 12, "rho": 1.1},
    "outputs": {"resolution": 16}
  })";
  const std::string once = RunConfig::parse(text).serialize();
  const std::string twice = RunConfig::parse(once).serialize();
  CHECK(once == twice);

  const RunConfig rc = RunConfig::parse(once);
  CHECK(rc.t == 0.002);
  CHECK(rc.N == 12);
  CHECK(rc.rho == 1.1);
  CHECK(rc.resolution == 16);
  CHECK(rc.grid == 128);  // default survives
}

TEST_CASE("field-precise config errors") {
  CHECK_THROWS_WITH_AS(RunConfig::parse("{}"),
                       doctest::Contains("ends"), ConfigError);
  CHECK_THROWS_WITH_AS(
      RunConfig::parse(R"({"ends": [{"direction": [1, 0], "weight": 1}]})"),
      doctest::Contains("ends[0].direction"), ConfigError);
  CHECK_THROWS_WITH_AS(
      RunConfig::parse(R"({"ends": [{"direction": [1, 0, 0]}]})"),
      doctest::Contains("ends[0].weight"), ConfigError);
  CHECK_THROWS_WITH_AS(
      RunConfig::parse(
          R"({"ends": [{"direction": [1,0,0], "weight": 1}], "t": "x"})"),
      doctest::Contains("'t'"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("not json"), ConfigError);
}

TEST_CASE("project_balance") {
  const double h = std::sqrt(3.0) / 2.0;
  const std::vector<Vec3> u = {{1, 0, 0}, {-0.5, h, 0}, {-0.5, -h, 0}};

  SUBCASE("already balanced stays put") {
    const auto out = project_balance(u, {1.0, 1.0, 1.0});
    for (double v : out) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("minimal-norm correction") {
    const std::vector<double> tau = {1.0, 1.0, 1.1};
    const auto out = project_balance(u, tau);
    Vec3 d{0, 0, 0};
    for (int i = 0; i < 3; ++i) d = d + u[i] * out[i];
    CHECK(d.norm() < 1e-14);

    // oracle: delta = -A^T (A A^T)^+ (A tau), computed independently
    Eigen::MatrixXd A(3, 3);
    for (int i = 0; i < 3; ++i) A.col(i) << u[i].x, u[i].y, u[i].z;
    Eigen::Vector3d At = A * Eigen::Vector3d(1.0, 1.0, 1.1);
    Eigen::MatrixXd AAt = A * A.transpose();
    Eigen::VectorXd delta =
        -A.transpose() * AAt.completeOrthogonalDecomposition().solve(At);
    for (int i = 0; i < 3; ++i)
      CHECK(out[i] == doctest::Approx(tau[i] + delta[i]).epsilon(1e-12));
  }

  SUBCASE("collinear directions are a rank error") {
    const std::vector<Vec3> bad = {{1, 0, 0}, {-1, 0, 0}, {1, 0, 0}};
    CHECK_THROWS_AS(project_balance(bad, {1.0, 1.0, 1.0}), ConfigError);
  }
}

TEST_CASE("pipeline rejects unbalanced configs with the defect vector") {
  RunConfig rc = RunConfig::parse(trinoid_config(1e-4, 2, 12, 40, "unbal"));
  rc.weights = {1.0, 1.0, 1.3};
  const RunResult res = run_pipeline(rc);
  CHECK(res.exit_code == 2);
  CHECK(res.message.find("validation") != std::string::npos);
  CHECK(res.message.find("balance defect") != std::string::npos);

  rc.project_balance = true;  // projection repairs it
  rc.t = 0.0;
  const RunResult ok = run_pipeline(rc);
  CHECK(ok.exit_code == 0);
}

TEST_CASE("end-to-end report-only run is deterministic") {
  const std::string text = trinoid_config(1e-4, 2, 16, 64, "e2e");
  const RunConfig rc = RunConfig::parse(text);
  const RunResult a = run_pipeline(rc);
  REQUIRE(a.exit_code == 0);

  json ja = json::parse(a.report);
  CHECK(ja["residual_norm"].get<double>() <= 1e-10);
  CHECK(ja["t"].get<double>() == 1e-4);
  REQUIRE(ja["per_end"].size() == 3);
  for (const auto& e : ja["per_end"]) {
    CHECK(e["monodromy_unitarity"]["circle_defect"].get<double>() <= 1e-8);
    CHECK(e["angle_to_u_deg"].get<double>() <= 5.0);
    CHECK(e["weight"].get<double>() > 0.0);
  }
  CHECK(ja["hopf"]["total_zeros"].get<int>() == 2);
  CHECK(ja["embeddedness_hypothesis"]["holds"].get<bool>());

  // determinism up to wall-clock timings
  const RunResult b = run_pipeline(rc);
  json jb = json::parse(b.report);
  ja.erase("timings");
  jb.erase("timings");
  CHECK(ja.dump() == jb.dump());

  std::ifstream in(rc.report_path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  json on_disk = json::parse(ss.str());
  CHECK(on_disk["status"]["exit_code"].get<int>() == 0);
  std::remove(rc.report_path.c_str());
}

TEST_CASE("fixtures pass") {
  std::ostringstream out;
  CHECK(run_fixture("sphere", out) == 0);
  CHECK(run_fixture("delaunay", out) == 0);
  CHECK(run_fixture("nope", out) == 1);
  CHECK(out.str().find("pass") != std::string::npos);
}

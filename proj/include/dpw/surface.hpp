#pragma once

#include <iosfwd>

#include "dpw/solver.hpp"

namespace dpw {

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SurfacePoint {
  Vec3 position;          // Sym point translated by (0,0,1), world frame
  Vec3 normal;            // outward unit normal (-Nor), world frame
  bool branch_warning = false;
};

/// Piecewise line/arc path from `from` to `to` that detours around the disks
/// D(center, radius) along their boundary circles.
Path plan_route(cplx from, cplx to, const std::vector<cplx>& centers,
                double radius);

/// Evaluates the immersion of one (t, x) state in all charts. Keeps a
/// transported frame as a cursor so that successive nearby evaluations
/// (mesh rows, radial columns) only integrate short paths.
class ImmersionEvaluator {
 public:
  ImmersionEvaluator(const NoidConfig& cfg, double t, ParamVector x,
                     const TransportOptions& opt = {});

  const NoidConfig& config() const { return cfg_; }

  /// Outer chart, z away from the poles (paths detour around D(pi_i, 3 eps)).
  SurfacePoint outer(cplx z);

  /// End chart i: f(p_i(lambda) + w), 0 < |w|, anchored at |w| = 4 eps with
  /// one branch cut per end on the ray opposite the anchor direction.
  SurfacePoint end_chart(int i, cplx w);

  /// Infinity chart, w = 1/z with w != 0: Iwasawa of Phi(1/w) G_inf(1/w).
  SurfacePoint infinity_chart(cplx w);

  /// |delta f| + |delta N| after transporting once around generator i;
  /// the geometric content of the solved monodromy problem.
  double closure_defect(int i);

  Path route(cplx from, cplx to) const;

 private:
  SurfacePoint value_from(const std::vector<Mat2>& phis);
  void ensure_anchor(int i);

  NoidConfig cfg_;
  double t_;
  ParamVector x_;
  CircleGrid grid_;
  TransportOptions opt_;

  std::vector<Mat2> phi_;  // outer cursor frame per grid node
  cplx zcur_;

  std::vector<std::vector<Mat2>> anchor_;  // per-end frames at w = 4 eps
  int end_cur_ = -1;
  double end_theta_ = 0.0;  // unwound angle of the end cursor
  cplx end_w_;
  std::vector<Mat2> end_phi_;
};

struct EndDiagnostics {
  double weight = 0.0;  // 8 pi t a_i
  double r = 0.0, s = 0.0;
  Vec3 axis_point, axis_dir;  // world frame; dir unit, -Nor(Q)
  double angle_to_u_deg = 0.0;
};

EndDiagnostics end_diagnostics(const NoidConfig& cfg, double t,
                               const ParamVector& x, int i,
                               const TransportOptions& opt = {});

struct HopfData {
  std::vector<cplx> coeffs;    // numerator of -2t omega(z,0), ascending degree
  std::vector<cplx> umbilics;  // its finite roots, with multiplicity
  int zeros_at_infinity = 0;   // degree drop below 2n-4 (symmetric configs)
  double h_residual = 0.0;     // max Wiener norm of H1, H2, H3
  double trim_residual = 0.0;  // dropped coefficient mass above degree 2n-4
  double root_separation = 0.0;  // min pairwise root distance (conditioning)

  int total_zeros() const {
    return static_cast<int>(umbilics.size()) + zeros_at_infinity;
  }
};

HopfData hopf_differential(const NoidConfig& cfg, double t,
                           const ParamVector& x);

struct MeshVertex {
  cplx z;      // chart coordinate
  int chart;   // 0 outer, -1 infinity (z holds w), i+1 end chart i (z holds w)
  Vec3 position, normal;
};

struct EndMeta {
  double weight = 0.0, r = 0.0, s = 0.0;
  Vec3 axis_point, axis_dir;
  double chart_radius = 0.0;
};

struct SurfaceMesh {
  std::vector<MeshVertex> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<EndMeta> ends;
};

/// Lat-long grid plus an infinity cap, a polar collar around each pole in the
/// outer chart, and annular end-chart grids down to |w| = end_truncation
/// (default eps/16).
SurfaceMesh build_mesh(const NoidConfig& cfg, double t, const ParamVector& x,
                       int resolution, double end_truncation = -1.0,
                       const TransportOptions& opt = {});

void write_obj(const SurfaceMesh& mesh, std::ostream& os);

/// Profile curve of the CMC-1 Delaunay surface with necksize parameters
/// (r, s): unit-speed (x, rho) with x' = cos th, rho' = sin th,
/// th' = cos th / rho - 2, first integral rho cos th - rho^2 = 4 r s,
/// starting at the neck rho = 2s, extended by `length` in both directions.
std::vector<std::array<double, 2>> delaunay_profile(double r, double s,
                                                    double length,
                                                    double step = 1e-3);

/// Distance from q to the surface of revolution of the (r,s) profile about
/// the axis through `point` directed by unit `dir`, with the neck placed at
/// axial offset `phase`.
double delaunay_surface_distance(const Vec3& q, const Vec3& point,
                                 const Vec3& dir, double r, double s,
                                 double phase = 0.0);

}  // namespace dpw

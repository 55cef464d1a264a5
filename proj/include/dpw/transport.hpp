#pragma once

#include <functional>

#include "dpw/potential.hpp"

namespace dpw {

/// Piecewise-smooth path in the z-plane: line segments and circular arcs,
/// each parametrized over [0,1].
struct PathSegment {
  enum class Kind { line, arc } kind = Kind::line;
  cplx a, b;                    // line: from a to b
  cplx center;                  // arc: center, radius, angles in radians
  double radius = 0.0, theta0 = 0.0, theta1 = 0.0;

  static PathSegment line(cplx from, cplx to);
  static PathSegment arc(cplx center, double radius, double theta0, double theta1);

  cplx point(double s) const;
  cplx velocity(double s) const;  // d point / ds
};

struct Path {
  std::vector<PathSegment> segments;

  cplx start() const { return segments.front().point(0.0); }
  cplx end() const { return segments.back().point(1.0); }
  bool closed(double tol = 1e-13) const { return std::abs(end() - start()) < tol; }
  Path reversed() const;

  /// min distance from sampled path points to q
  double distance_to(cplx q, int samples_per_segment = 64) const;
};

/// Generator gamma_i: base point 0, straight to the circle of radius 2 eps
/// around pi_i(0) = p_i(0), once around counterclockwise, and back.
Path generator_loop(cplx pole, double epsilon);

struct TransportOptions {
  double rtol = 1e-12;
  double atol = 1e-14;
  double pole_guard = 0.0;   // pre-flight: reject paths closer than this to a pole
  double min_step = 1e-13;
};

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// dz-coefficient of a potential at fixed lambda, as a function of z.
using PotentialField = std::function<Mat2(cplx z)>;

/// Solve dPhi = Phi xi(z) dz along the path for one lambda; det is
/// renormalized to 1 after every accepted step.
Mat2 transport_node(const PotentialField& xi, const Path& path, Mat2 phi0,
                    const TransportOptions& opt = {});

/// Same per-node transport over a whole circle grid, reassembled into a loop.
LoopMatrix transport_loop(double t, const ParamVector& x, const Path& path,
                          const CircleGrid& grid, const TransportOptions& opt = {});

/// Monodromy M_i = Phi at the end of gamma_i with Phi(0) = I.
LoopMatrix monodromy(double t, const ParamVector& x, const NoidConfig& cfg,
                     int i, const CircleGrid& grid,
                     const TransportOptions& opt = {});

/// Monodromy plus the Appendix-A contour moments, per grid node:
///   I[k][j][nu-1] = int_gamma Phi E21 Phi^{-1} / (z - p_j(lambda_k))^nu dz
///   J[k]          = int_gamma Phi E21 Phi^{-1} omega_x(z) dz
/// The directional derivative of M in direction (dt, da_j, db_j, dp_j) is
///   [ t(l-1)^2 sum_j (da_j I_{j,2} + db_j I_{j,1} + dp_j (2 a_j I_{j,3} + b_j I_{j,2}))
///     + dt (l-1)^2 J ] * M.
struct NodeMoments {
  std::vector<Mat2> M;
  std::vector<std::vector<std::array<Mat2, 3>>> I;
  std::vector<Mat2> J;
};
NodeMoments monodromy_with_moments(double t, const ParamVector& x,
                                   const NoidConfig& cfg, int i,
                                   const CircleGrid& grid,
                                   const TransportOptions& opt = {});

/// Directional derivative of the monodromy from precomputed moments, one node.
struct DirectionNode {
  double dt = 0.0;
  std::vector<cplx> da, db, dp;  // per end, values at this lambda
};
Mat2 monodromy_derivative_node(double t, const ParamVector& x, cplx lambda,
                               const Mat2& M,
                               const std::vector<std::array<Mat2, 3>>& I,
                               const Mat2& J, const DirectionNode& dir);

/// Principal matrix logarithm for M in SL(2,C) near the identity:
/// L = asinh(w)/w * (M - c I) with c = tr(M)/2, w = sqrt(c^2 - 1).
Mat2 sl2_log(const Mat2& M);
/// Frechet derivative of sl2_log at M applied to dM.
Mat2 sl2_log_frechet(const Mat2& M, const Mat2& dM);

/// Rescaled monodromy: per node, (lambda / (t (lambda-1)^2)) log M_i(lambda).
LoopMatrix rescaled_monodromy(double t, const ParamVector& x,
                              const NoidConfig& cfg, int i,
                              const CircleGrid& grid,
                              const TransportOptions& opt = {});

/// Closed-form limit at t=0:
/// Mtilde_i = 2 pi i [[a+bp, -(2ap+bp^2)/lambda],[lambda b, -(a+bp)]].
LoopMatrix rescaled_monodromy_t0(const ParamVector& x, int i);

struct UnitarityReport {
  double circle_defect;  // max_k ||M M^H - I||_F
  double at_one;         // min(|M(1)-I|, |M(1)+I|)_F
  double dlambda_at_one; // ||dM/dlambda (1)||_F
};
UnitarityReport unitarity_residual(const LoopMatrix& M, const CircleGrid& grid);

}  // namespace dpw

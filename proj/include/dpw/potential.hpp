#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include "dpw/loops.hpp"

namespace dpw {

/// Stereographic projection from the south pole: pi(u) = (u1 + i u2)/(1 + u3),
/// and its inverse pi^{-1}(z) = (2 Re z, 2 Im z, 1 - |z|^2)/(1 + |z|^2).
cplx stereo(const Vec3& u);
Vec3 inverse_stereo(cplx z);

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Validated n-noid data: unit end directions u_i, nonzero weights tau_i with
/// sum tau_i u_i = 0, plus the numerics parameters shared by a whole run.
struct NoidConfig {
  int n = 0;
  std::vector<Vec3> u;        // after the internal rotation
  std::vector<double> tau;
  std::vector<cplx> pi;       // stereographic images of the rotated u_i
  Eigen::Matrix3d rotation;   // world -> internal; outputs use the inverse
  bool rotated = false;
  double epsilon = 0.0;

  int N = 24;
  double rho = 1.05;
  int grid_size = 128;

  /// Validates, applies the internal rotation keeping every u_i at least
  /// 10 degrees away from both poles, computes pi_i and epsilon.
  /// epsilon keeps the disks D(pi_i, 8 eps) pairwise disjoint and away
  /// from 0 with a 10% margin; epsilon_override (if positive) replaces it
  /// after the same admissibility check.
  static NoidConfig make(std::vector<Vec3> u, std::vector<double> tau,
                         int N = 24, double rho = 1.05, int grid = 128,
                         double balance_tol = 1e-9,
                         double epsilon_override = 0.0);
};

/// Per-end potential parameters (a_i, b_i, p_i), all in W^{>=0}.
struct EndParams {
  Wiener a, b, p;
};

struct ParamVector {
  std::vector<EndParams> ends;

  int n() const { return static_cast<int>(ends.size()); }
  int degree() const { return ends.at(0).a.degree(); }
  double rho() const { return ends.at(0).a.rho(); }
  bool nonnegative(double tol = 0.0) const;
};

/// Central value x0: a_i = tau_i, p_i = pi_i, b_i = -2 tau_i conj(pi_i)/(1+|pi_i|^2).
ParamVector central_params(const NoidConfig& cfg);

/// omega_x(z, lambda) = sum_i a_i/(z-p_i)^2 + b_i/(z-p_i), one lambda at a time.
cplx omega_node(const ParamVector& x, cplx z, cplx lambda);

/// Loop-valued omega_x(z, .) sampled on the grid; throws when z is within
/// pole_guard of some p_i(0) (pass eps/2).
Wiener omega_loop(const ParamVector& x, cplx z, const CircleGrid& grid,
                  double pole_guard);

/// Value of the dz-coefficient of xi_{t,x} at (z, lambda):
/// [[0, 1/lambda],[t (lambda-1)^2 omega, 0]].
Mat2 xi_node(double t, const ParamVector& x, cplx z, cplx lambda);

/// omega with lambda frozen at one node: the 3n Wiener evaluations happen
/// once in the constructor, after which omega/xi cost O(n) per point. Use
/// this inside ODE right-hand sides, where z moves but lambda does not.
class OmegaNode {
 public:
  OmegaNode(const ParamVector& x, cplx lambda);
  cplx omega(cplx z) const;
  Mat2 xi(double t, cplx z) const;
  cplx pole(int j) const { return p_[j]; }

 private:
  cplx inv_lambda_, lm2_;  // 1/lambda, (lambda-1)^2
  std::vector<cplx> a_, b_, p_;
};

/// H1 = sum b_i, H2 = sum (a_i + b_i p_i), H3 = sum (2 a_i p_i + b_i p_i^2).
std::array<Wiener, 3> regularity_H(const ParamVector& x);

/// Gauge action on the dz-coefficient of a potential:
/// G^{-1} xi G + G^{-1} dG, with dG = dG/dz at the same point.
Mat2 apply_gauge_node(const Mat2& xi, const Mat2& G, const Mat2& dG);

/// The gauge G_inf = [[z,0],[-lambda,1/z]] regularizing the double pole at
/// infinity, with its z-derivative.
Mat2 gauge_infinity(cplx z, cplx lambda);
Mat2 gauge_infinity_dz(cplx z, cplx lambda);

/// Roots (r, s) of X^2 - X/2 + tA, with r >= s; throws for tA >= 1/16.
std::pair<double, double> rs_split(double tA);

/// Residue of the standard Delaunay potential: [[0, r/lambda + s],[r lambda + s, 0]].
LoopMatrix delaunay_residue(double t, double a, int degree, double rho);

/// Delaunay end-chart gauge G(w,lambda) = [[sqrt(w)/k, 0],
/// [-lambda/(2 k sqrt(w)), k/sqrt(w)]] with k = sqrt(r + s lambda), and its
/// w-derivative. Principal branches; w off the negative real axis.
Mat2 delaunay_chart_gauge(cplx w, cplx lambda, double r, double s);
Mat2 delaunay_chart_gauge_dw(cplx w, cplx lambda, double r, double s);

}  // namespace dpw

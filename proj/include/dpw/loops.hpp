#pragma once

#include <Eigen/Dense>
#include <array>

#include "dpw/wiener.hpp"

namespace dpw {

using Mat2 = Eigen::Matrix2cd;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double norm() const;
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
};

double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);

/// R^3 <-> su(2):  x = (x1,x2,x3)  <->  X = (-i/2) [[-x3, x1+ix2],[x1-ix2, x3]].
/// Then <x,y> = -2 tr(XY) and ||x||^2 = 4 det X.
Mat2 vec_to_su2(const Vec3& x);
Vec3 su2_to_vec(const Mat2& X, double tol = 1e-10);

/// 2x2 matrix of Wiener loops (shared degree and rho); the Phi/F/B/G objects.
class LoopMatrix {
 public:
  LoopMatrix(int degree, double rho);
  static LoopMatrix identity(int degree, double rho);

  int degree() const { return e_[0].degree(); }
  double rho() const { return e_[0].rho(); }

  const Wiener& at(int r, int c) const { return e_[2 * r + c]; }
  Wiener& at(int r, int c) { return e_[2 * r + c]; }

  Mat2 eval(cplx lambda) const;
  Mat2 eval_at_one() const;
  Mat2 deriv_at_one() const;

  /// Entrywise star then transpose; equals the pointwise conjugate-transpose
  /// on the unit circle.
  LoopMatrix star_hermitian() const;

  LoopMatrix operator*(const LoopMatrix& o) const;  // truncated algebra
  LoopMatrix operator+(const LoopMatrix& o) const;
  LoopMatrix operator-(const LoopMatrix& o) const;

  Wiener det() const;

  /// max_k || A(lambda_k) A(lambda_k)^H - I ||_F over the grid.
  double unitarity_defect(const CircleGrid& grid) const;
  /// max_k | det A(lambda_k) - 1 | over the grid.
  double det_drift(const CircleGrid& grid) const;

 private:
  std::array<Wiener, 4> e_;
};

/// Build a LoopMatrix from pointwise samples on the grid.
LoopMatrix loop_from_grid(const std::vector<Mat2>& samples, const CircleGrid& grid,
                          int degree, double rho, double* tail_mass = nullptr);

struct IwasawaPair {
  LoopMatrix F;        // unitary factor, Uni(Phi)
  LoopMatrix B;        // positive factor, Pos(Phi): analytic in the disk,
                       // B(0) upper triangular with positive diagonal
  double residual;     // max over grid of ||Phi - F B||_F
  double conditioning; // diag ratio of the Toeplitz Cholesky factor
};

struct IwasawaError : std::runtime_error {
  double conditioning;
  explicit IwasawaError(const std::string& msg, double cond)
      : std::runtime_error(msg), conditioning(cond) {}
};

/// Iwasawa decomposition Phi = F B via spectral factorization of the
/// positive loop P = Phi^{*H} Phi as B^{*H} B (finite-section block-Toeplitz
/// Cholesky, Bauer's method), then F = Phi B^{-1} pointwise on the grid.
/// section < 0 selects the default 4N blocks.
IwasawaPair iwasawa(const LoopMatrix& Phi, const CircleGrid& grid, int section = -1);

/// Sym-Bobenko point  i (dF/dlambda)(1) F(1)^{-1}  read as a vector of R^3.
Vec3 sym_point(const LoopMatrix& F, double unitary_tol = 1e-6);

/// Gauss map  (-i/2) F(1) diag(1,-1) F(1)^{-1}; unit length.
Vec3 normal_point(const LoopMatrix& F, double unitary_tol = 1e-6);

}  // namespace dpw

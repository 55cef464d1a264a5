#include "dpw/loops.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace dpw {

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

Mat2 vec_to_su2(const Vec3& v) {
  const cplx I(0.0, 1.0);
  Mat2 X;
  X << -v.z, v.x + I * v.y, v.x - I * v.y, v.z;
  return cplx(0.0, -0.5) * X;
}

Vec3 su2_to_vec(const Mat2& X, double tol) {
  // Invert the identification; reject matrices that are not trace-free
  // anti-Hermitian to within tol.
  Mat2 herm = X + X.adjoint();
  double defect = herm.norm() + std::abs(X.trace());
  if (defect > tol)
    throw std::invalid_argument("su2_to_vec: matrix is not in su(2), defect " +
                                std::to_string(defect));
  const cplx I(0.0, 1.0);
  cplx w = 2.0 * I * X(0, 1);  // = x1 + i x2
  Vec3 v{w.real(), w.imag(), (-2.0 * I * X(0, 0)).real()};
  return v;
}

LoopMatrix::LoopMatrix(int degree, double rho)
    : e_{Wiener(degree, rho), Wiener(degree, rho), Wiener(degree, rho),
         Wiener(degree, rho)} {}

LoopMatrix LoopMatrix::identity(int degree, double rho) {
  LoopMatrix m(degree, rho);
  m.at(0, 0).set_coeff(0, 1.0);
  m.at(1, 1).set_coeff(0, 1.0);
  return m;
}

Mat2 LoopMatrix::eval(cplx lambda) const {
  Mat2 m;
  m << e_[0].eval(lambda), e_[1].eval(lambda), e_[2].eval(lambda), e_[3].eval(lambda);
  return m;
}

Mat2 LoopMatrix::eval_at_one() const {
  Mat2 m;
  m << e_[0].eval_at_one(), e_[1].eval_at_one(), e_[2].eval_at_one(),
      e_[3].eval_at_one();
  return m;
}

Mat2 LoopMatrix::deriv_at_one() const {
  Mat2 m;
  m << e_[0].deriv_at_one(), e_[1].deriv_at_one(), e_[2].deriv_at_one(),
      e_[3].deriv_at_one();
  return m;
}

LoopMatrix LoopMatrix::star_hermitian() const {
  LoopMatrix m(degree(), rho());
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m.at(r, c) = at(c, r).star();
  return m;
}

LoopMatrix LoopMatrix::operator*(const LoopMatrix& o) const {
  LoopMatrix m(degree(), rho());
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      m.at(r, c) = at(r, 0) * o.at(0, c) + at(r, 1) * o.at(1, c);
  return m;
}

LoopMatrix LoopMatrix::operator+(const LoopMatrix& o) const {
  LoopMatrix m = *this;
  for (int i = 0; i < 4; ++i) m.e_[i] += o.e_[i];
  return m;
}

LoopMatrix LoopMatrix::operator-(const LoopMatrix& o) const {
  LoopMatrix m = *this;
  for (int i = 0; i < 4; ++i) m.e_[i] -= o.e_[i];
  return m;
}

Wiener LoopMatrix::det() const { return at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0); }

double LoopMatrix::unitarity_defect(const CircleGrid& grid) const {
  double worst = 0.0;
  for (int k = 0; k < grid.size(); ++k) {
    Mat2 a = eval(grid.node(k));
    worst = std::max(worst, (a * a.adjoint() - Mat2::Identity()).norm());
  }
  return worst;
}

double LoopMatrix::det_drift(const CircleGrid& grid) const {
  double worst = 0.0;
  for (int k = 0; k < grid.size(); ++k) {
    Mat2 a = eval(grid.node(k));
    worst = std::max(worst, std::abs(a.determinant() - 1.0));
  }
  return worst;
}

LoopMatrix loop_from_grid(const std::vector<Mat2>& samples, const CircleGrid& grid,
                          int degree, double rho, double* tail_mass) {
  LoopMatrix m(degree, rho);
  double tail_total = 0.0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      std::vector<cplx> s(samples.size());
      for (size_t k = 0; k < samples.size(); ++k) s[k] = samples[k](r, c);
      double tail = 0.0;
      m.at(r, c) = grid_to_wiener(s, grid, degree, rho, &tail);
      tail_total += tail;
    }
  if (tail_mass) *tail_mass = tail_total;
  return m;
}

IwasawaPair iwasawa(const LoopMatrix& Phi, const CircleGrid& grid, int section) {
  const int N = Phi.degree();
  const double rho = Phi.rho();
  const int M = section > 0 ? section : 4 * N;

  // P = Phi^{*H} Phi, computed in the full (un-truncated) product so the
  // Toeplitz blocks of a degree-N loop are exact.
  Wiener P[2][2] = {{Wiener(2 * N, rho), Wiener(2 * N, rho)},
                    {Wiener(2 * N, rho), Wiener(2 * N, rho)}};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      for (int k = 0; k < 2; ++k)
        P[r][c] += mul_full(Phi.at(k, r).star(), Phi.at(k, c));

  // Finite section: T is the M x M block Toeplitz matrix with 2x2 blocks
  // T_{jk} = P_{k-j} (Fourier coefficient of P). Cholesky T = C C^H; the
  // last block row of C, reversed and conjugate-transposed, converges to
  // the coefficients of B with B(0) upper triangular positive diagonal.
  Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(2 * M, 2 * M);
  for (int j = 0; j < M; ++j)
    for (int k = 0; k < M; ++k) {
      int d = k - j;
      if (std::abs(d) > 2 * N) continue;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) T(2 * j + r, 2 * k + c) = P[r][c].coeff(d);
    }

  Eigen::LLT<Eigen::MatrixXcd> llt(T);
  if (llt.info() != Eigen::Success)
    throw IwasawaError("iwasawa: finite-section Gram matrix is not positive definite",
                       std::numeric_limits<double>::infinity());
  Eigen::MatrixXcd C = llt.matrixL();

  double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 2 * M; ++i) {
    double d = C(i, i).real();
    dmax = std::max(dmax, d);
    dmin = std::min(dmin, d);
  }
  double cond = dmax / dmin;
  if (!(dmin > 0.0) || cond > 1e12)
    throw IwasawaError("iwasawa: Cholesky factor badly conditioned", cond);

  // B_m = (C_{M-1, M-1-m})^H for m = 0..N.
  LoopMatrix B(N, rho);
  for (int m = 0; m <= N; ++m) {
    int col = M - 1 - m;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        B.at(r, c).set_coeff(m, std::conj(C(2 * (M - 1) + c, 2 * col + r)));
  }

  // Normalize to det B = 1 pointwise (the Cholesky fixes |det| but the section
  // error perturbs it slightly), then F = Phi B^{-1} with B^{-1} = adj(B).
  std::vector<Mat2> fsamp(grid.size());
  double resid = 0.0;
  for (int k = 0; k < grid.size(); ++k) {
    cplx lam = grid.node(k);
    Mat2 b = B.eval(lam);
    Mat2 phi = Phi.eval(lam);
    Mat2 binv;
    binv << b(1, 1), -b(0, 1), -b(1, 0), b(0, 0);
    binv /= b.determinant();
    Mat2 f = phi * binv;
    fsamp[k] = f;
    resid = std::max(resid, (phi - f * b).norm());
  }
  // Rescale B so det B(0) = 1 exactly at lambda = 0 (diagonal of B(0)).
  {
    cplx d0 = B.at(0, 0).coeff(0) * B.at(1, 1).coeff(0);
    cplx s = std::sqrt(d0);
    if (std::abs(s - 1.0) < 0.5) {
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) B.at(r, c) *= 1.0 / s;
    }
  }

  IwasawaPair out{loop_from_grid(fsamp, grid, N, rho), B, 0.0, cond};
  // Residual of the reconstructed (band-limited) F against Phi.
  for (int k = 0; k < grid.size(); ++k) {
    cplx lam = grid.node(k);
    resid = std::max(resid,
                     (Phi.eval(lam) - out.F.eval(lam) * B.eval(lam)).norm());
  }
  out.residual = resid;
  return out;
}

static Mat2 require_unitary_at_one(const LoopMatrix& F, double tol,
                                   const char* who) {
  Mat2 f1 = F.eval_at_one();
  double defect = (f1 * f1.adjoint() - Mat2::Identity()).norm();
  if (defect > tol)
    throw std::invalid_argument(std::string(who) +
                                ": F(1) is not unitary, defect " +
                                std::to_string(defect));
  return f1;
}

Vec3 sym_point(const LoopMatrix& F, double unitary_tol) {
  Mat2 f1 = require_unitary_at_one(F, unitary_tol, "sym_point");
  Mat2 X = cplx(0.0, 1.0) * F.deriv_at_one() * f1.adjoint();
  // Project out the tiny Hermitian/trace residue before converting.
  Mat2 A = 0.5 * (X - X.adjoint());
  A -= 0.5 * A.trace() * Mat2::Identity();
  return su2_to_vec(A, 1e-6);
}

Vec3 normal_point(const LoopMatrix& F, double unitary_tol) {
  Mat2 f1 = require_unitary_at_one(F, unitary_tol, "normal_point");
  Mat2 sigma;
  sigma << 1.0, 0.0, 0.0, -1.0;
  Mat2 X = cplx(0.0, -0.5) * f1 * sigma * f1.adjoint();
  Vec3 n = su2_to_vec(X, 1e-6);
  double len = n.norm();
  return n * (1.0 / len);
}

}  // namespace dpw

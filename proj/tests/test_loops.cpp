#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "dpw/loops.hpp"

using namespace dpw;

namespace {

std::mt19937 rng(20260826u);

constexpr int N = 12;
constexpr double RHO = 1.05;
const CircleGrid GRID(64);

/// Frame of the round-sphere family: Phi(z,lambda) = [[1, lambda^{-1} z],[0,1]].
LoopMatrix sphere_phi(cplx z) {
  LoopMatrix phi = LoopMatrix::identity(N, RHO);
  phi.at(0, 1).set_coeff(-1, z);
  return phi;
}

/// Its known unitary factor F = (1+|z|^2)^{-1/2} [[1, lambda^{-1} z],[-lambda conj(z), 1]].
LoopMatrix sphere_f(cplx z) {
  double s = 1.0 / std::sqrt(1.0 + std::norm(z));
  LoopMatrix f(N, RHO);
  f.at(0, 0).set_coeff(0, s);
  f.at(0, 1).set_coeff(-1, s * z);
  f.at(1, 0).set_coeff(1, -s * std::conj(z));
  f.at(1, 1).set_coeff(0, s);
  return f;
}

Vec3 sphere_point(cplx z) {
  double d = 1.0 + std::norm(z);
  return {2.0 * z.real() / d, 2.0 * z.imag() / d, -2.0 * std::norm(z) / d};
}

LoopMatrix random_unitary_loop() {
  // exp of a random small loop-valued su(2) element, sampled pointwise.
  std::uniform_real_distribution<double> u(-0.25, 0.25);
  double c[3][3];
  for (auto& row : c)
    for (double& v : row) v = u(rng);
  std::vector<Mat2> samples(GRID.size());
  for (int k = 0; k < GRID.size(); ++k) {
    cplx lam = GRID.node(k);
    // real-on-circle combinations keep the element in su(2) pointwise
    Vec3 x{c[0][0] + c[0][1] * (lam + 1.0 / lam).real(),
           c[1][0] + c[1][1] * (lam + 1.0 / lam).real(),
           c[2][0] + c[2][1] * (cplx(0, 1) * (lam - 1.0 / lam)).real()};
    Mat2 X = vec_to_su2(x);
    samples[k] = X.exp();
  }
  return loop_from_grid(samples, GRID, N, RHO);
}

}  // namespace

TEST_CASE("su(2) identification") {
  Mat2 X = vec_to_su2({0.0, 0.0, 1.0});
  CHECK(std::abs(X(0, 0) - cplx(0.0, 0.5)) <= 1e-15);
  CHECK(std::abs(X(1, 1) - cplx(0.0, -0.5)) <= 1e-15);
  CHECK(std::abs(X(0, 1)) <= 1e-15);

  Mat2 Z = vec_to_su2({0.0, 0.0, 0.0});
  CHECK(Z.norm() <= 1e-15);

  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vec3 x{u(rng), u(rng), u(rng)};
    Mat2 M = vec_to_su2(x);
    CHECK(std::abs(4.0 * M.determinant().real() - dot(x, x)) <= 1e-12);
    Vec3 back = su2_to_vec(M);
    CHECK((back - x).norm() <= 1e-13);
    Vec3 y{u(rng), u(rng), u(rng)};
    cplx ip = -2.0 * (M * vec_to_su2(y)).trace();
    CHECK(std::abs(ip.real() - dot(x, y)) <= 1e-12);
    CHECK(std::abs(ip.imag()) <= 1e-12);
  }

  Mat2 bad = Mat2::Identity();
  CHECK_THROWS_AS(su2_to_vec(bad), std::invalid_argument);
}

TEST_CASE("iwasawa of the sphere frame at z=1") {
  LoopMatrix phi = sphere_phi(1.0);
  IwasawaPair iw = iwasawa(phi, GRID);
  CHECK(iw.residual <= 1e-9);

  const double s = 1.0 / std::sqrt(2.0);
  // F = (1/sqrt2) [[1, lambda^{-1}],[-lambda, 1]]
  CHECK(std::abs(iw.F.at(0, 0).coeff(0) - s) <= 1e-8);
  CHECK(std::abs(iw.F.at(0, 1).coeff(-1) - s) <= 1e-8);
  CHECK(std::abs(iw.F.at(1, 0).coeff(1) + s) <= 1e-8);
  CHECK(std::abs(iw.F.at(1, 1).coeff(0) - s) <= 1e-8);
  // B = (1/sqrt2) [[1, 0],[lambda, 2]]
  CHECK(std::abs(iw.B.at(0, 0).coeff(0) - s) <= 1e-8);
  CHECK(std::abs(iw.B.at(0, 1).norm()) <= 1e-8);
  CHECK(std::abs(iw.B.at(1, 0).coeff(1) - s) <= 1e-8);
  CHECK(std::abs(iw.B.at(1, 1).coeff(0) - 2.0 * s) <= 1e-8);

  CHECK(iw.F.unitarity_defect(GRID) <= 1e-9);
  CHECK(iw.B.at(0, 0).negative_part_zero(1e-12));
  CHECK(iw.B.at(1, 0).negative_part_zero(1e-12));
}

TEST_CASE("iwasawa of a unitary loop returns (Phi, I)") {
  LoopMatrix u = sphere_f(cplx(0.3, -0.7));
  IwasawaPair iw = iwasawa(u, GRID);
  CHECK(iw.residual <= 1e-9);
  Mat2 b0;
  b0 << iw.B.at(0, 0).coeff(0), iw.B.at(0, 1).coeff(0), iw.B.at(1, 0).coeff(0),
      iw.B.at(1, 1).coeff(0);
  CHECK((b0 - Mat2::Identity()).norm() <= 1e-8);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      CHECK((iw.B.at(r, c) - LoopMatrix::identity(N, RHO).at(r, c)).norm() <= 1e-7);
}

TEST_CASE("iwasawa recovers a constructed (U, B0) pair") {
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (int trial = 0; trial < 5; ++trial) {
    LoopMatrix U = random_unitary_loop();
    LoopMatrix B0(N, RHO);
    // upper triangular at lambda=0, positive diagonal, small analytic tail
    double d = 1.0 + std::abs(u(rng));
    B0.at(0, 0).set_coeff(0, d);
    B0.at(1, 1).set_coeff(0, 1.0 / d);
    B0.at(0, 1).set_coeff(0, cplx(u(rng), u(rng)));
    for (int m = 1; m <= 3; ++m)
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) B0.at(r, c).set_coeff(m, 0.1 * cplx(u(rng), u(rng)));
    // force det = 1 by dividing by sqrt(det) pointwise, staying analytic
    std::vector<Mat2> bs(GRID.size());
    for (int k = 0; k < GRID.size(); ++k) {
      Mat2 b = B0.eval(GRID.node(k));
      bs[k] = b / std::sqrt(b.determinant());
    }
    LoopMatrix Bn = loop_from_grid(bs, GRID, N, RHO);

    // form the product pointwise so the input carries no extra truncation;
    // a doubled degree keeps the unitary factor's spectral tail below 1e-12
    const int N2 = 2 * N;
    std::vector<Mat2> ps(GRID.size());
    for (int k = 0; k < GRID.size(); ++k)
      ps[k] = U.eval(GRID.node(k)) * Bn.eval(GRID.node(k));
    IwasawaPair iw = iwasawa(loop_from_grid(ps, GRID, N2, RHO), GRID);
    CHECK(iw.residual <= 1e-8);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        double db = 0.0, df = 0.0;
        for (int i = -N2; i <= N2; ++i) {
          db = std::max(db, std::abs(iw.B.at(r, c).coeff(i) - Bn.at(r, c).coeff(i)));
          df = std::max(df, std::abs(iw.F.at(r, c).coeff(i) - U.at(r, c).coeff(i)));
        }
        CHECK(db <= 1e-8);
        CHECK(df <= 1e-8);
      }
  }
}

TEST_CASE("iwasawa diagnostics: B(0) normalization and unitarity") {
  for (int trial = 0; trial < 5; ++trial) {
    cplx z(std::uniform_real_distribution<double>(-2.0, 2.0)(rng),
           std::uniform_real_distribution<double>(-2.0, 2.0)(rng));
    IwasawaPair iw = iwasawa(sphere_phi(z), GRID);
    CHECK(iw.F.unitarity_defect(GRID) <= 1e-9);
    CHECK(std::abs(iw.B.at(1, 0).coeff(0)) <= 1e-10);  // B(0) upper triangular
    double d1 = iw.B.at(0, 0).coeff(0).real();
    double d2 = iw.B.at(1, 1).coeff(0).real();
    CHECK(d1 > 0.0);
    CHECK(d2 > 0.0);
    CHECK(std::abs(iw.B.at(0, 0).coeff(0).imag()) <= 1e-10);
    CHECK(std::abs(d1 * d2 - 1.0) <= 1e-8);
  }
}

TEST_CASE("sym and nor reproduce the sphere") {
  SUBCASE("z = 0: identity frame") {
    LoopMatrix f = sphere_f(0.0);
    Vec3 p = sym_point(f);
    CHECK(p.norm() <= 1e-12);
    Vec3 nor = normal_point(f);
    CHECK((nor - Vec3{0.0, 0.0, -1.0}).norm() <= 1e-12);
  }
  SUBCASE("z = 1") {
    Vec3 p = sym_point(sphere_f(1.0));
    CHECK((p - Vec3{1.0, 0.0, -1.0}).norm() <= 1e-12);
  }
  SUBCASE("100 random z with |z| <= 3") {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
      cplx z(u(rng), u(rng));
      if (std::abs(z) > 3.0) continue;
      Vec3 p = sym_point(sphere_f(z));
      CHECK((p - sphere_point(z)).norm() <= 1e-8);
      // Gauss map of the unit sphere through the origin (center (0,0,-1)):
      // inward normal N = -(f - center) = -(p + e3)
      Vec3 nor = normal_point(sphere_f(z));
      CHECK(std::abs(nor.norm() - 1.0) <= 1e-12);
      Vec3 expected = -(p + Vec3{0.0, 0.0, 1.0});
      CHECK((nor - expected).norm() <= 1e-8);
    }
  }
  SUBCASE("non-unitary input is rejected") {
    CHECK_THROWS_AS(sym_point(sphere_phi(1.0)), std::invalid_argument);
    CHECK_THROWS_AS(normal_point(sphere_phi(1.0)), std::invalid_argument);
  }
}

TEST_CASE("nor has unit length for random unitary loops") {
  for (int trial = 0; trial < 20; ++trial) {
    LoopMatrix U = random_unitary_loop();
    Vec3 nor = normal_point(U);
    CHECK(std::abs(nor.norm() - 1.0) <= 1e-10);
  }
}

TEST_CASE("determinant and star_hermitian plumbing") {
  LoopMatrix phi = sphere_phi(cplx(0.5, 0.25));
  Wiener d = phi.det();
  CHECK(std::abs(d.coeff(0) - 1.0) <= 1e-15);
  CHECK(phi.det_drift(GRID) <= 1e-12);

  LoopMatrix sh = phi.star_hermitian();
  for (int k = 0; k < GRID.size(); ++k) {
    cplx lam = GRID.node(k);
    CHECK((sh.eval(lam) - phi.eval(lam).adjoint()).norm() <= 1e-12);
  }
}

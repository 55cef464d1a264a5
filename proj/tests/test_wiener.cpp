#include <cmath>
#include <random>

#include "doctest.h"
#include "dpw/wiener.hpp"

using namespace dpw;

namespace {

std::mt19937 rng(20260826);

Wiener random_wiener(int degree, double rho, bool nonneg_only = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Wiener f(degree, rho);
  for (int i = -degree; i <= degree; ++i) {
    if (nonneg_only && i < 0) continue;
    f.set_coeff(i, cplx(u(rng), u(rng)));
  }
  return f;
}

}  // namespace

TEST_CASE("norm matches the weighted coefficient sum") {
  CHECK(Wiener::monomial(1, 1.0, 4, 1.2).norm() == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(Wiener::constant(1.0, 4, 1.2).norm() == doctest::Approx(1.0).epsilon(1e-15));
  Wiener f(4, 1.1);
  f.set_coeff(-1, 2.0);
  f.set_coeff(0, 3.0);
  CHECK(f.norm() == doctest::Approx(5.2).epsilon(1e-15));
}

TEST_CASE("star is the coefficient reversal with conjugation") {
  Wiener lam = Wiener::monomial(1, 1.0, 4, 1.05);
  Wiener s = lam.star();
  CHECK(s.coeff(-1) == cplx(1.0));
  CHECK(s.coeff(1) == cplx(0.0));

  Wiener c = Wiener::constant(cplx(2.0, 3.0), 4, 1.05);
  CHECK(c.star().coeff(0) == cplx(2.0, -3.0));

  Wiener f(4, 1.05);
  f.set_coeff(0, cplx(0.0, 1.0));
  f.set_coeff(1, 2.0);
  Wiener fs = f.star();
  CHECK(fs.coeff(0) == cplx(0.0, -1.0));
  CHECK(fs.coeff(-1) == cplx(2.0));

  SUBCASE("involution on random data") {
    for (int trial = 0; trial < 50; ++trial) {
      Wiener g = random_wiener(8, 1.05);
      Wiener gg = g.star().star();
      for (int i = -8; i <= 8; ++i) CHECK(gg.coeff(i) == g.coeff(i));
    }
  }
}

TEST_CASE("projections partition the coefficients") {
  Wiener f(4, 1.05);
  f.set_coeff(-1, 1.0);
  f.set_coeff(0, 4.0);
  f.set_coeff(2, 1.0);
  CHECK(f.project(Wiener::Part::zero).coeff(0) == cplx(4.0));
  CHECK(f.project(Wiener::Part::zero).norm() == doctest::Approx(4.0));
  Wiener fp = f.project(Wiener::Part::plus);
  CHECK(fp.coeff(2) == cplx(1.0));
  CHECK(fp.coeff(-1) == cplx(0.0));
  CHECK(fp.coeff(0) == cplx(0.0));

  for (int trial = 0; trial < 50; ++trial) {
    Wiener g = random_wiener(8, 1.05);
    Wiener sum = g.project(Wiener::Part::minus) + g.project(Wiener::Part::zero) +
                 g.project(Wiener::Part::plus);
    for (int i = -8; i <= 8; ++i) CHECK(sum.coeff(i) == g.coeff(i));
    // star exchanges the plus and minus parts
    Wiener lhs = g.project(Wiener::Part::plus).star();
    Wiener rhs = g.star().project(Wiener::Part::minus);
    for (int i = -8; i <= 8; ++i) CHECK(lhs.coeff(i) == rhs.coeff(i));
  }
}

TEST_CASE("multiplication: simple products") {
  Wiener lam = Wiener::monomial(1, 1.0, 4, 1.05);
  Wiener ilam = Wiener::monomial(-1, 1.0, 4, 1.05);
  Wiener one = lam * ilam;
  CHECK(one.coeff(0) == cplx(1.0));
  CHECK(one.norm() == doctest::Approx(1.0));

  Wiener f = Wiener::constant(1.0, 4, 1.05) + lam;
  Wiener g = Wiener::constant(1.0, 4, 1.05) - lam;
  Wiener fg = f * g;
  CHECK(fg.coeff(0) == cplx(1.0));
  CHECK(fg.coeff(1) == cplx(0.0));
  CHECK(fg.coeff(2) == cplx(-1.0));
}

TEST_CASE("Banach sub-multiplicativity on 1000 random pairs (untruncated)") {
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Wiener f = random_wiener(16, 1.05);
    Wiener g = random_wiener(16, 1.05);
    Wiener fg = mul_full(f, g);
    worst = std::max(worst, fg.norm() / (f.norm() * g.norm()));
  }
  CHECK(worst <= 1.0 + 1e-12);
}

TEST_CASE("truncated product agrees with the full product on the kept band") {
  for (int trial = 0; trial < 20; ++trial) {
    Wiener f = random_wiener(8, 1.05);
    Wiener g = random_wiener(8, 1.05);
    Wiener t = f * g;
    Wiener full = mul_full(f, g);
    for (int i = -8; i <= 8; ++i)
      CHECK(std::abs(t.coeff(i) - full.coeff(i)) <= 1e-15);
    // debt is exactly the rho-mass of the 8 < |i| <= 16 band
    double lost = 0.0;
    for (int i = 9; i <= 16; ++i)
      lost += (std::abs(full.coeff(i)) + std::abs(full.coeff(-i))) *
              std::pow(1.05, i);
    CHECK(t.debt() == doctest::Approx(lost).epsilon(1e-12));
  }
}

TEST_CASE("eval: point values and annulus domain") {
  Wiener f(4, 1.05);
  f.set_coeff(-1, 1.0);
  f.set_coeff(0, 4.0);
  f.set_coeff(2, 1.0);
  CHECK(f.eval(1.0) == cplx(6.0));
  Wiener lam = Wiener::monomial(1, 1.0, 4, 1.05);
  CHECK(lam.eval(cplx(0.0, 1.0)) == cplx(0.0, 1.0));
  CHECK_THROWS_AS(f.eval(cplx(2.0, 0.0)), std::domain_error);
  CHECK_THROWS_AS(f.eval(cplx(0.1, 0.0)), std::domain_error);

  SUBCASE("|f(lambda)| <= ||f|| for nonnegative loops inside |lambda| <= rho") {
    for (int trial = 0; trial < 100; ++trial) {
      Wiener g = random_wiener(8, 1.05, /*nonneg_only=*/true);
      std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
      cplx lambda = 1.05 * 0.99 * std::exp(cplx(0.0, ang(rng)));
      CHECK(std::abs(g.eval(lambda)) <= g.norm() * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("circle grid avoids lambda=1 and the bridge is exact for band-limited data") {
  CircleGrid grid(16);
  for (int k = 0; k < grid.size(); ++k)
    CHECK(std::abs(grid.node(k) - 1.0) > 1e-3);

  SUBCASE("f = lambda on K=16") {
    Wiener lam = Wiener::monomial(1, 1.0, 4, 1.05);
    Wiener back = grid_to_wiener(wiener_to_grid(lam, grid), grid, 4, 1.05);
    for (int i = -4; i <= 4; ++i)
      CHECK(std::abs(back.coeff(i) - (i == 1 ? 1.0 : 0.0)) <= 1e-14);
  }

  SUBCASE("constant 2.0") {
    std::vector<cplx> s(16, 2.0);
    Wiener back = grid_to_wiener(s, grid, 4, 1.05);
    CHECK(std::abs(back.coeff(0) - 2.0) <= 1e-14);
    for (int i = 1; i <= 4; ++i) {
      CHECK(std::abs(back.coeff(i)) <= 1e-14);
      CHECK(std::abs(back.coeff(-i)) <= 1e-14);
    }
  }

  SUBCASE("exp(lambda) coefficients match 1/i!") {
    CircleGrid big(128);
    std::vector<cplx> s(big.size());
    for (int k = 0; k < big.size(); ++k) s[k] = std::exp(big.node(k));
    double tail = 0.0;
    Wiener back = grid_to_wiener(s, big, 20, 1.05, &tail);
    double fact = 1.0;
    for (int i = 0; i <= 20; ++i) {
      if (i > 0) fact *= i;
      CHECK(std::abs(back.coeff(i) - 1.0 / fact) <= 1e-12);
    }
    for (int i = 1; i <= 20; ++i) CHECK(std::abs(back.coeff(-i)) <= 1e-12);
    CHECK(tail <= 1e-10);  // entire function: spectral decay
  }

  SUBCASE("round trip reproduces samples to machine precision") {
    Wiener f = random_wiener(12, 1.05);
    CircleGrid g(64);
    std::vector<cplx> s = wiener_to_grid(f, g);
    Wiener back = grid_to_wiener(s, g, 12, 1.05);
    std::vector<cplx> s2 = wiener_to_grid(back, g);
    for (int k = 0; k < 64; ++k) CHECK(std::abs(s[k] - s2[k]) <= 1e-12);
  }
}

TEST_CASE("reality: f = star(f) has real values on the circle") {
  for (int trial = 0; trial < 50; ++trial) {
    Wiener g = random_wiener(8, 1.05);
    Wiener f = g + g.star();  // self-star by construction
    CircleGrid grid(64);
    double worst = 0.0;
    for (int k = 0; k < grid.size(); ++k)
      worst = std::max(worst, std::abs(f.eval(grid.node(k)).imag()));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("shifted multiplies by a lambda power") {
  Wiener f(4, 1.05);
  f.set_coeff(0, 2.0);
  f.set_coeff(1, 3.0);
  Wiener g = f.shifted(-1);
  CHECK(g.coeff(-1) == cplx(2.0));
  CHECK(g.coeff(0) == cplx(3.0));
  // shifting out of band accrues debt
  Wiener h = f.shifted(4);
  CHECK(h.coeff(4) == cplx(2.0));
  CHECK(h.debt() == doctest::Approx(3.0 * std::pow(1.05, 5)));
}

TEST_CASE("deriv_at_one sums i * f_i") {
  Wiener f(4, 1.05);
  f.set_coeff(-2, 1.0);
  f.set_coeff(1, cplx(0.0, 3.0));
  CHECK(f.deriv_at_one() == cplx(-2.0, 3.0));
  CHECK(f.eval_at_one() == cplx(1.0, 3.0));
}

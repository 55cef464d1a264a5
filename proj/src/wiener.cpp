#include "dpw/wiener.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpw {

namespace {

void require_compatible(const Wiener& f, const Wiener& g) {
  if (f.degree() != g.degree() || f.rho() != g.rho())
    throw std::invalid_argument("Wiener: mismatched degree or rho");
}

}  // namespace

Wiener::Wiener(int degree, double rho)
    : degree_(degree), rho_(rho), c_(2 * degree + 1, cplx(0.0, 0.0)) {
  if (degree < 0) throw std::invalid_argument("Wiener: degree must be >= 0");
  if (!(rho > 1.0)) throw std::invalid_argument("Wiener: rho must be > 1");
}

Wiener Wiener::constant(cplx c, int degree, double rho) {
  Wiener f(degree, rho);
  f.set_coeff(0, c);
  return f;
}

Wiener Wiener::monomial(int power, cplx c, int degree, double rho) {
  Wiener f(degree, rho);
  f.set_coeff(power, c);
  return f;
}

cplx Wiener::coeff(int i) const {
  if (i < -degree_ || i > degree_) return {0.0, 0.0};
  return c_[i + degree_];
}

void Wiener::set_coeff(int i, cplx v) {
  if (i < -degree_ || i > degree_)
    throw std::out_of_range("Wiener::set_coeff: index outside [-N,N]");
  c_[i + degree_] = v;
}

double Wiener::norm() const {
  double s = 0.0;
  for (int i = -degree_; i <= degree_; ++i)
    s += std::abs(c_[i + degree_]) * std::pow(rho_, std::abs(i));
  return s;
}

Wiener Wiener::star() const {
  Wiener g(degree_, rho_);
  g.debt_ = debt_;
  for (int i = -degree_; i <= degree_; ++i)
    g.set_coeff(i, std::conj(coeff(-i)));
  return g;
}

Wiener Wiener::project(Part part) const {
  Wiener g(degree_, rho_);
  for (int i = -degree_; i <= degree_; ++i) {
    bool keep = false;
    switch (part) {
      case Part::minus: keep = i < 0; break;
      case Part::zero:  keep = i == 0; break;
      case Part::plus:  keep = i > 0; break;
      case Part::geq0:  keep = i >= 0; break;
      case Part::leq0:  keep = i <= 0; break;
    }
    if (keep) g.set_coeff(i, coeff(i));
  }
  return g;
}

cplx Wiener::eval(cplx lambda) const {
  const double r = std::abs(lambda);
  if (!(r > 1.0 / rho_ && r < rho_))
    throw std::domain_error("Wiener::eval: lambda outside the annulus");
  // Horner in lambda for i>0 and in 1/lambda for i<0.
  cplx plus = 0.0;
  for (int i = degree_; i >= 1; --i) plus = (plus + coeff(i)) * lambda;
  const cplx inv = 1.0 / lambda;
  cplx minus = 0.0;
  for (int i = degree_; i >= 1; --i) minus = (minus + coeff(-i)) * inv;
  return plus + minus + coeff(0);
}

Wiener Wiener::shifted(int k) const {
  Wiener g(degree_, rho_);
  g.debt_ = debt_;
  for (int i = -degree_; i <= degree_; ++i) {
    const cplx v = coeff(i);
    if (v == cplx(0.0, 0.0)) continue;
    const int j = i + k;
    if (j < -degree_ || j > degree_)
      g.debt_ += std::abs(v) * std::pow(rho_, std::abs(j));
    else
      g.set_coeff(j, g.coeff(j) + v);
  }
  return g;
}

Wiener Wiener::resized(int new_degree) const {
  Wiener g(new_degree, rho_);
  g.debt_ = debt_;
  for (int i = -degree_; i <= degree_; ++i) {
    const cplx v = coeff(i);
    if (v == cplx(0.0, 0.0)) continue;
    if (std::abs(i) > new_degree)
      g.debt_ += std::abs(v) * std::pow(rho_, std::abs(i));
    else
      g.set_coeff(i, v);
  }
  return g;
}

cplx Wiener::deriv_at_one() const {
  cplx s = 0.0;
  for (int i = -degree_; i <= degree_; ++i) s += double(i) * coeff(i);
  return s;
}

cplx Wiener::eval_at_one() const {
  cplx s = 0.0;
  for (int i = -degree_; i <= degree_; ++i) s += coeff(i);
  return s;
}

bool Wiener::negative_part_zero(double tol) const {
  for (int i = -degree_; i < 0; ++i)
    if (std::abs(coeff(i)) > tol) return false;
  return true;
}

Wiener& Wiener::operator+=(const Wiener& g) {
  require_compatible(*this, g);
  for (int i = 0; i < static_cast<int>(c_.size()); ++i) c_[i] += g.c_[i];
  debt_ += g.debt_;
  return *this;
}

Wiener& Wiener::operator-=(const Wiener& g) {
  require_compatible(*this, g);
  for (int i = 0; i < static_cast<int>(c_.size()); ++i) c_[i] -= g.c_[i];
  debt_ += g.debt_;
  return *this;
}

Wiener& Wiener::operator*=(cplx c) {
  for (auto& v : c_) v *= c;
  debt_ *= std::abs(c);
  return *this;
}

Wiener operator+(Wiener f, const Wiener& g) { return f += g; }
Wiener operator-(Wiener f, const Wiener& g) { return f -= g; }
Wiener operator-(const Wiener& f) { return f * cplx(-1.0, 0.0); }
Wiener operator*(cplx c, Wiener f) { return f *= c; }
Wiener operator*(Wiener f, cplx c) { return f *= c; }

Wiener mul_full(const Wiener& f, const Wiener& g) {
  require_compatible(f, g);
  const int N = f.degree();
  Wiener h(2 * N, f.rho());
  for (int i = -N; i <= N; ++i) {
    const cplx fi = f.coeff(i);
    if (fi == cplx(0.0, 0.0)) continue;
    for (int j = -N; j <= N; ++j) h.set_coeff(i + j, h.coeff(i + j) + fi * g.coeff(j));
  }
  return h;
}

Wiener operator*(const Wiener& f, const Wiener& g) {
  const Wiener full = mul_full(f, g);
  const int N = f.degree();
  Wiener h(N, f.rho());
  double discarded = 0.0;
  for (int i = -2 * N; i <= 2 * N; ++i) {
    if (i < -N || i > N)
      discarded += std::abs(full.coeff(i)) * std::pow(f.rho(), std::abs(i));
    else
      h.set_coeff(i, full.coeff(i));
  }
  h.add_debt(discarded + f.debt() * g.norm() + g.debt() * f.norm());
  return h;
}

CircleGrid::CircleGrid(int size) {
  if (size < 2) throw std::invalid_argument("CircleGrid: size must be >= 2");
  nodes_.resize(size);
  for (int k = 0; k < size; ++k) {
    const double th = 2.0 * std::numbers::pi * (k + 0.5) / size;
    nodes_[k] = cplx(std::cos(th), std::sin(th));
  }
}

std::vector<cplx> wiener_to_grid(const Wiener& f, const CircleGrid& grid) {
  std::vector<cplx> out(grid.size());
  for (int k = 0; k < grid.size(); ++k) out[k] = f.eval(grid.node(k));
  return out;
}

Wiener grid_to_wiener(const std::vector<cplx>& samples, const CircleGrid& grid,
                      int degree, double rho, double* tail_mass) {
  const int K = grid.size();
  if (static_cast<int>(samples.size()) != K)
    throw std::invalid_argument("grid_to_wiener: sample count mismatch");
  if (K < 2 * degree + 1)
    throw std::invalid_argument("grid_to_wiener: grid too small for degree");

  auto coefficient = [&](int i) {
    cplx s = 0.0;
    for (int k = 0; k < K; ++k) s += samples[k] * std::pow(grid.node(k), -i);
    return s / double(K);
  };

  Wiener f(degree, rho);
  for (int i = -degree; i <= degree; ++i) f.set_coeff(i, coefficient(i));

  if (tail_mass) {
    // Mass above 3N/4 in the representable band plus everything the grid can
    // still resolve beyond N; a proxy for how much spectrum the truncation
    // is throwing away.
    double tm = 0.0;
    const int cutoff = (3 * degree) / 4;
    const int top = K / 2 - 1;
    for (int i = cutoff + 1; i <= top; ++i) {
      tm += std::abs(i <= degree ? f.coeff(i) : coefficient(i)) * std::pow(rho, i);
      tm += std::abs(i <= degree ? f.coeff(-i) : coefficient(-i)) * std::pow(rho, i);
    }
    *tail_mass = tm;
  }
  return f;
}

}  // namespace dpw

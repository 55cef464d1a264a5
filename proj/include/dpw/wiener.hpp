#pragma once

#include <complex>
#include <vector>

namespace dpw {

using cplx = std::complex<double>;

/// Truncated Laurent loop f(lambda) = sum_{|i|<=N} f_i lambda^i with the
/// rho-weighted l1 norm  ||f|| = sum |f_i| rho^|i|  (rho > 1).
///
/// Values are immutable once built (operations return new objects).
/// Multiplication truncates the exact convolution back to [-N,N]; the
/// discarded norm mass is accumulated in debt() so truncation error stays
/// observable along a computation.
class Wiener {
 public:
  Wiener(int degree, double rho);

  static Wiener constant(cplx c, int degree, double rho);
  static Wiener monomial(int power, cplx c, int degree, double rho);

  int degree() const { return degree_; }
  double rho() const { return rho_; }
  double debt() const { return debt_; }
  void add_debt(double d) { debt_ += d; }

  cplx coeff(int i) const;
  void set_coeff(int i, cplx v);

  double norm() const;
  Wiener star() const;

  enum class Part { minus, zero, plus, geq0, leq0 };
  Wiener project(Part part) const;

  /// Evaluate at a point of the annulus 1/rho < |lambda| < rho.
  cplx eval(cplx lambda) const;

  /// Multiplication by lambda^k (exact shift, outer coefficients go to debt).
  Wiener shifted(int k) const;

  /// Copy into a different truncation degree; coefficients falling outside
  /// the new band go to debt.
  Wiener resized(int new_degree) const;

  /// Term-wise derivative d/dlambda, evaluated at lambda=1: sum i*f_i.
  cplx deriv_at_one() const;
  cplx eval_at_one() const;

  bool negative_part_zero(double tol = 0.0) const;

  Wiener& operator+=(const Wiener& g);
  Wiener& operator-=(const Wiener& g);
  Wiener& operator*=(cplx c);

 private:
  int degree_;
  double rho_;
  double debt_ = 0.0;
  std::vector<cplx> c_;  // c_[i + degree_] = f_i
};

Wiener operator+(Wiener f, const Wiener& g);
Wiener operator-(Wiener f, const Wiener& g);
Wiener operator-(const Wiener& f);
Wiener operator*(cplx c, Wiener f);
Wiener operator*(Wiener f, cplx c);

/// Truncated Banach-algebra product (convolution cut back to [-N,N]).
Wiener operator*(const Wiener& f, const Wiener& g);

/// Exact convolution at doubled degree; reference route for norm checks.
Wiener mul_full(const Wiener& f, const Wiener& g);

/// Sampling grid on the unit circle, offset by half a step so lambda=1
/// (the singular point of (lambda-1)^2/lambda rescalings) is never a node.
class CircleGrid {
 public:
  explicit CircleGrid(int size);
  int size() const { return static_cast<int>(nodes_.size()); }
  cplx node(int k) const { return nodes_[k]; }
  const std::vector<cplx>& nodes() const { return nodes_; }

 private:
  std::vector<cplx> nodes_;
};

std::vector<cplx> wiener_to_grid(const Wiener& f, const CircleGrid& grid);

/// Inverse bridge: recover Laurent coefficients [-N,N] from circle samples.
/// Requires grid size >= 2N+1. If tail_mass is non-null it receives the
/// rho-weighted mass of recoverable coefficients with |i| > 3N/4, a
/// truncation-health metric (large tail = aliasing risk).
Wiener grid_to_wiener(const std::vector<cplx>& samples, const CircleGrid& grid,
                      int degree, double rho, double* tail_mass = nullptr);

}  // namespace dpw

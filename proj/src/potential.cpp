#include "dpw/potential.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dpw {

namespace {
constexpr double kPoleClearanceDeg = 10.0;

double angle_to_vertical(const Vec3& u) {
  // angle to the nearest of +-e3
  double c = std::min(1.0, std::abs(u.z) / std::max(u.norm(), 1e-300));
  return std::acos(c) * 180.0 / M_PI;  // 0 when u is at a pole
}

Eigen::Matrix3d axis_rotation(const Eigen::Vector3d& axis, double rad) {
  return Eigen::AngleAxisd(rad, axis.normalized()).toRotationMatrix();
}
}  // namespace

cplx stereo(const Vec3& u) {
  if (std::abs(1.0 + u.z) < 1e-14)
    throw ConfigError("stereo: direction at the south pole has no finite image");
  return cplx(u.x, u.y) / (1.0 + u.z);
}

Vec3 inverse_stereo(cplx z) {
  double d = 1.0 + std::norm(z);
  return {2.0 * z.real() / d, 2.0 * z.imag() / d, (1.0 - std::norm(z)) / d};
}

NoidConfig NoidConfig::make(std::vector<Vec3> u, std::vector<double> tau, int N,
                            double rho, int grid, double balance_tol,
                            double epsilon_override) {
  NoidConfig cfg;
  cfg.n = static_cast<int>(u.size());
  if (cfg.n < 3) throw ConfigError("config: need at least 3 ends");
  if (tau.size() != u.size())
    throw ConfigError("config: weights and directions count differ");
  for (int i = 0; i < cfg.n; ++i) {
    if (std::abs(u[i].norm() - 1.0) > 1e-9)
      throw ConfigError("config: direction " + std::to_string(i) + " is not unit");
    if (tau[i] == 0.0)
      throw ConfigError("config: weight " + std::to_string(i) + " is zero");
    for (int j = 0; j < i; ++j)
      if ((u[i] - u[j]).norm() < 1e-9)
        throw ConfigError("config: directions " + std::to_string(j) + " and " +
                          std::to_string(i) + " coincide");
  }
  Vec3 defect{0, 0, 0};
  for (int i = 0; i < cfg.n; ++i) defect = defect + u[i] * tau[i];
  if (defect.norm() > balance_tol) {
    std::ostringstream os;
    os << "config: balancing defect (" << defect.x << ", " << defect.y << ", "
       << defect.z << ") exceeds " << balance_tol;
    throw ConfigError(os.str());
  }

  // Internal rotation: keep every direction at least 10 degrees from both
  // poles. Scan small rotations about e1 and e2 and take the first (hence
  // minimal-angle) admissible one.
  cfg.rotation = Eigen::Matrix3d::Identity();
  auto clearance = [&](const Eigen::Matrix3d& R) {
    double worst = 180.0;
    for (const Vec3& v : u) {
      Eigen::Vector3d w = R * Eigen::Vector3d(v.x, v.y, v.z);
      worst = std::min(worst, angle_to_vertical({w.x(), w.y(), w.z()}));
    }
    return worst;
  };
  if (clearance(cfg.rotation) < kPoleClearanceDeg) {
    bool found = false;
    for (double deg = 10.0; deg <= 90.0 && !found; deg += 2.5) {
      for (const auto& axis :
           {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY()}) {
        for (double sign : {1.0, -1.0}) {
          Eigen::Matrix3d R = axis_rotation(axis, sign * deg * M_PI / 180.0);
          if (clearance(R) >= kPoleClearanceDeg) {
            cfg.rotation = R;
            found = true;
            break;
          }
        }
        if (found) break;
      }
    }
    if (!found) throw ConfigError("config: no admissible internal rotation found");
    cfg.rotated = true;
  }
  for (const Vec3& v : u) {
    Eigen::Vector3d w = cfg.rotation * Eigen::Vector3d(v.x, v.y, v.z);
    cfg.u.push_back({w.x(), w.y(), w.z()});
  }
  cfg.tau = std::move(tau);
  for (const Vec3& v : cfg.u) cfg.pi.push_back(stereo(v));

  // D(pi_i, 8 eps) pairwise disjoint (16 eps < min distance) and avoiding 0
  // (8 eps < min |pi_i|), with a 10% safety margin.
  double dmin = std::numeric_limits<double>::infinity();
  double pmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cfg.n; ++i) {
    pmin = std::min(pmin, std::abs(cfg.pi[i]));
    for (int j = 0; j < i; ++j)
      dmin = std::min(dmin, std::abs(cfg.pi[i] - cfg.pi[j]));
  }
  if (pmin < 1e-9)
    throw ConfigError("config: an end direction maps to z=0 after rotation");
  cfg.epsilon = 0.9 * std::min(dmin / 16.0, pmin / 8.0);
  if (epsilon_override > 0.0) {
    if (epsilon_override > std::min(dmin / 16.0, pmin / 8.0))
      throw ConfigError("config: epsilon override violates disk disjointness");
    cfg.epsilon = epsilon_override;
  }

  cfg.N = N;
  cfg.rho = rho;
  cfg.grid_size = grid;
  if (N < 1 || rho <= 1.0 || grid < 2 * N + 4)
    throw ConfigError("config: invalid numerics parameters");
  return cfg;
}

bool ParamVector::nonnegative(double tol) const {
  for (const EndParams& e : ends)
    if (!e.a.negative_part_zero(tol) || !e.b.negative_part_zero(tol) ||
        !e.p.negative_part_zero(tol))
      return false;
  return true;
}

ParamVector central_params(const NoidConfig& cfg) {
  ParamVector x;
  for (int i = 0; i < cfg.n; ++i) {
    cplx pi = cfg.pi[i];
    cplx b = -2.0 * cfg.tau[i] * std::conj(pi) / (1.0 + std::norm(pi));
    x.ends.push_back({Wiener::constant(cfg.tau[i], cfg.N, cfg.rho),
                      Wiener::constant(b, cfg.N, cfg.rho),
                      Wiener::constant(pi, cfg.N, cfg.rho)});
  }
  return x;
}

cplx omega_node(const ParamVector& x, cplx z, cplx lambda) {
  cplx s = 0.0;
  for (const EndParams& e : x.ends) {
    cplx d = z - e.p.eval(lambda);
    s += e.a.eval(lambda) / (d * d) + e.b.eval(lambda) / d;
  }
  return s;
}

Wiener omega_loop(const ParamVector& x, cplx z, const CircleGrid& grid,
                  double pole_guard) {
  for (const EndParams& e : x.ends)
    if (std::abs(z - e.p.coeff(0)) < pole_guard)
      throw std::domain_error("omega: evaluation point too close to a pole");
  std::vector<cplx> s(grid.size());
  for (int k = 0; k < grid.size(); ++k) s[k] = omega_node(x, z, grid.node(k));
  return grid_to_wiener(s, grid, x.degree(), x.rho());
}

Mat2 xi_node(double t, const ParamVector& x, cplx z, cplx lambda) {
  Mat2 m;
  cplx lm1 = lambda - 1.0;
  m << 0.0, 1.0 / lambda, t * lm1 * lm1 * omega_node(x, z, lambda), 0.0;
  return m;
}

OmegaNode::OmegaNode(const ParamVector& x, cplx lambda)
    : inv_lambda_(1.0 / lambda), lm2_((lambda - 1.0) * (lambda - 1.0)) {
  a_.reserve(x.ends.size());
  b_.reserve(x.ends.size());
  p_.reserve(x.ends.size());
  for (const EndParams& e : x.ends) {
    a_.push_back(e.a.eval(lambda));
    b_.push_back(e.b.eval(lambda));
    p_.push_back(e.p.eval(lambda));
  }
}

cplx OmegaNode::omega(cplx z) const {
  cplx s = 0.0;
  for (size_t j = 0; j < a_.size(); ++j) {
    cplx d = z - p_[j];
    s += (a_[j] + b_[j] * d) / (d * d);
  }
  return s;
}

Mat2 OmegaNode::xi(double t, cplx z) const {
  Mat2 m;
  m << 0.0, inv_lambda_, t * lm2_ * omega(z), 0.0;
  return m;
}

std::array<Wiener, 3> regularity_H(const ParamVector& x) {
  int N = x.degree();
  double rho = x.rho();
  Wiener H1(N, rho), H2(N, rho), H3(N, rho);
  for (const EndParams& e : x.ends) {
    H1 += e.b;
    H2 += e.a + e.b * e.p;
    H3 += 2.0 * (e.a * e.p) + e.b * (e.p * e.p);
  }
  return {H1, H2, H3};
}

Mat2 apply_gauge_node(const Mat2& xi, const Mat2& G, const Mat2& dG) {
  Mat2 Ginv;
  Ginv << G(1, 1), -G(0, 1), -G(1, 0), G(0, 0);
  Ginv /= G.determinant();
  return Ginv * xi * G + Ginv * dG;
}

Mat2 gauge_infinity(cplx z, cplx lambda) {
  if (z == cplx(0.0)) throw std::domain_error("gauge_infinity: z = 0");
  Mat2 g;
  g << z, 0.0, -lambda, 1.0 / z;
  return g;
}

Mat2 gauge_infinity_dz(cplx z, cplx lambda) {
  (void)lambda;
  Mat2 g;
  g << 1.0, 0.0, 0.0, -1.0 / (z * z);
  return g;
}

std::pair<double, double> rs_split(double tA) {
  double disc = 1.0 / 16.0 - tA;
  if (disc <= 0.0)
    throw std::domain_error("rs_split: necksize too large (tA >= 1/16)");
  double root = std::sqrt(disc);
  return {0.25 + root, 0.25 - root};
}

LoopMatrix delaunay_residue(double t, double a, int degree, double rho) {
  auto [r, s] = rs_split(t * a);
  LoopMatrix A(degree, rho);
  A.at(0, 1).set_coeff(-1, r);
  A.at(0, 1).set_coeff(0, s);
  A.at(1, 0).set_coeff(1, r);
  A.at(1, 0).set_coeff(0, s);
  return A;
}

Mat2 delaunay_chart_gauge(cplx w, cplx lambda, double r, double s) {
  cplx k = std::sqrt(r + s * lambda);
  cplx sw = std::sqrt(w);
  Mat2 g;
  g << sw / k, 0.0, -lambda / (2.0 * k * sw), k / sw;
  return g;
}

Mat2 delaunay_chart_gauge_dw(cplx w, cplx lambda, double r, double s) {
  cplx k = std::sqrt(r + s * lambda);
  cplx sw = std::sqrt(w);
  Mat2 g;
  g << 1.0 / (2.0 * k * sw), 0.0, lambda / (4.0 * k * w * sw),
      -k / (2.0 * w * sw);
  return g;
}

}  // namespace dpw

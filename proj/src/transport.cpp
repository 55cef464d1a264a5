#include "dpw/transport.hpp"

#include <cmath>

namespace dpw {

PathSegment PathSegment::line(cplx from, cplx to) {
  PathSegment s;
  s.kind = Kind::line;
  s.a = from;
  s.b = to;
  return s;
}

PathSegment PathSegment::arc(cplx center, double radius, double theta0,
                             double theta1) {
  PathSegment s;
  s.kind = Kind::arc;
  s.center = center;
  s.radius = radius;
  s.theta0 = theta0;
  s.theta1 = theta1;
  return s;
}

cplx PathSegment::point(double s) const {
  if (kind == Kind::line) return a + s * (b - a);
  double th = theta0 + s * (theta1 - theta0);
  return center + radius * std::exp(cplx(0.0, th));
}

cplx PathSegment::velocity(double s) const {
  if (kind == Kind::line) return b - a;
  double th = theta0 + s * (theta1 - theta0);
  return radius * (theta1 - theta0) * cplx(0.0, 1.0) * std::exp(cplx(0.0, th));
}

Path Path::reversed() const {
  Path r;
  for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
    PathSegment s = *it;
    if (s.kind == PathSegment::Kind::line) std::swap(s.a, s.b);
    else std::swap(s.theta0, s.theta1);
    r.segments.push_back(s);
  }
  return r;
}

double Path::distance_to(cplx q, int samples_per_segment) const {
  double d = std::numeric_limits<double>::infinity();
  for (const PathSegment& seg : segments)
    for (int k = 0; k <= samples_per_segment; ++k)
      d = std::min(d, std::abs(seg.point(double(k) / samples_per_segment) - q));
  return d;
}

Path generator_loop(cplx pole, double epsilon) {
  double r = 2.0 * epsilon;
  // entry point on the circle, on the segment from 0 to the pole
  cplx dir = pole / std::abs(pole);
  cplx entry = pole - r * dir;
  double th0 = std::arg(entry - pole);  // = arg(-dir)
  Path p;
  p.segments.push_back(PathSegment::line(0.0, entry));
  p.segments.push_back(PathSegment::arc(pole, r, th0, th0 + 2.0 * M_PI));
  p.segments.push_back(PathSegment::line(entry, 0.0));
  return p;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double A21 = 1.0 / 5.0;
constexpr double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0;
constexpr double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0;
constexpr double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0,
                 A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0;
constexpr double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0,
                 A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0,
                 A65 = -5103.0 / 18656.0;
constexpr double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0,
                 B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0;
constexpr double E1 = 35.0 / 384.0 - 5179.0 / 57600.0,
                 E3 = 500.0 / 1113.0 - 7571.0 / 16695.0,
                 E4 = 125.0 / 192.0 - 393.0 / 640.0,
                 E5 = -2187.0 / 6784.0 + 92097.0 / 339200.0,
                 E6 = 11.0 / 84.0 - 187.0 / 2100.0, E7 = -1.0 / 40.0;

using State = std::vector<cplx>;
using Rhs = std::function<void(double, const State&, State&)>;

/// Adaptive Dormand-Prince 5(4) from s=0 to s=1; post is applied to the
/// state after every accepted step (determinant renormalization hook).
void dopri5(const Rhs& f, State& y, double rtol, double atol, double min_step,
            const std::function<void(State&)>& post) {
  const size_t n = y.size();
  State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y5(n);
  double s = 0.0, h = 0.05;
  f(0.0, y, k1);
  bool k1_fresh = true;
  int rejects_in_row = 0;
  while (s < 1.0) {
    h = std::min(h, 1.0 - s);
    if (h < min_step) throw TransportError("transport: step size underflow");
    if (!k1_fresh) f(s, y, k1);
    k1_fresh = true;
    for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * A21 * k1[i];
    f(s + h / 5.0, tmp, k2);
    for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    f(s + 3.0 * h / 10.0, tmp, k3);
    for (size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    f(s + 4.0 * h / 5.0, tmp, k4);
    for (size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    f(s + 8.0 * h / 9.0, tmp, k5);
    for (size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] +
                           A64 * k4[i] + A65 * k5[i]);
    f(s + h, tmp, k6);
    for (size_t i = 0; i < n; ++i)
      y5[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] +
                          B6 * k6[i]);
    f(s + h, y5, k7);

    double err = 0.0;
    for (size_t i = 0; i < n; ++i) {
      cplx e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] +
                    E6 * k6[i] + E7 * k7[i]);
      double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err = std::max(err, std::abs(e) / sc);
    }
    if (err <= 1.0) {
      s += h;
      y = y5;
      k1 = k7;  // FSAL
      if (post) {
        post(y);
        k1_fresh = false;  // post may change y; recompute k1
      }
      rejects_in_row = 0;
    } else {
      ++rejects_in_row;
      if (rejects_in_row > 60)
        throw TransportError("transport: repeated step rejection");
    }
    double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
    h *= std::min(5.0, std::max(0.2, fac));
  }
}

void renormalize_det(State& y) {
  cplx det = y[0] * y[3] - y[1] * y[2];
  cplx r = std::sqrt(det);
  for (int i = 0; i < 4; ++i) y[i] /= r;
}

}  // namespace

Mat2 transport_node(const PotentialField& xi, const Path& path, Mat2 phi0,
                    const TransportOptions& opt) {
  State y = {phi0(0, 0), phi0(0, 1), phi0(1, 0), phi0(1, 1)};
  for (const PathSegment& seg : path.segments) {
    auto rhs = [&](double s, const State& u, State& du) {
      cplx z = seg.point(s);
      cplx v = seg.velocity(s);
      Mat2 phi;
      phi << u[0], u[1], u[2], u[3];
      Mat2 d = phi * (xi(z) * v);
      du = {d(0, 0), d(0, 1), d(1, 0), d(1, 1)};
    };
    dopri5(rhs, y, opt.rtol, opt.atol, opt.min_step, renormalize_det);
  }
  Mat2 out;
  out << y[0], y[1], y[2], y[3];
  return out;
}

LoopMatrix transport_loop(double t, const ParamVector& x, const Path& path,
                          const CircleGrid& grid, const TransportOptions& opt) {
  if (opt.pole_guard > 0.0)
    for (const EndParams& e : x.ends)
      if (path.distance_to(e.p.coeff(0)) < opt.pole_guard)
        throw TransportError("transport: path too close to a pole");
  std::vector<Mat2> samples(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    OmegaNode om(x, grid.node(k));
    auto xi = [&](cplx z) { return om.xi(t, z); };
    samples[k] = transport_node(xi, path, Mat2::Identity(), opt);
  }
  return loop_from_grid(samples, grid, x.degree(), x.rho());
}

LoopMatrix monodromy(double t, const ParamVector& x, const NoidConfig& cfg,
                     int i, const CircleGrid& grid, const TransportOptions& opt) {
  TransportOptions o = opt;
  if (o.pole_guard == 0.0) o.pole_guard = cfg.epsilon;
  Path gamma = generator_loop(x.ends.at(i).p.coeff(0), cfg.epsilon);
  // the path passes through its own pole's 2eps circle; guard the others only
  for (int j = 0; j < x.n(); ++j) {
    if (j == i) continue;
    if (gamma.distance_to(x.ends[j].p.coeff(0)) < o.pole_guard)
      throw TransportError("monodromy: generator path too close to another pole");
  }
  std::vector<Mat2> samples(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    OmegaNode om(x, grid.node(k));
    auto xi = [&](cplx z) { return om.xi(t, z); };
    samples[k] = transport_node(xi, gamma, Mat2::Identity(), o);
  }
  return loop_from_grid(samples, grid, x.degree(), x.rho());
}

NodeMoments monodromy_with_moments(double t, const ParamVector& x,
                                   const NoidConfig& cfg, int i,
                                   const CircleGrid& grid,
                                   const TransportOptions& opt) {
  const int n = x.n();
  Path gamma = generator_loop(x.ends.at(i).p.coeff(0), cfg.epsilon);
  NodeMoments out;
  out.M.resize(grid.size());
  out.I.assign(grid.size(), std::vector<std::array<Mat2, 3>>(
                                n, {Mat2::Zero(), Mat2::Zero(), Mat2::Zero()}));
  out.J.resize(grid.size());
  Mat2 E21;
  E21 << 0.0, 0.0, 1.0, 0.0;

  // state: Phi (4), per end I_{j,1..3} (12 n), J (4)
  const size_t dim = 4 + 12 * size_t(n) + 4;
  for (int k = 0; k < grid.size(); ++k) {
    OmegaNode om(x, grid.node(k));
    State y(dim, cplx(0.0));
    y[0] = y[3] = 1.0;
    for (const PathSegment& seg : gamma.segments) {
      auto rhs = [&](double s, const State& u, State& du) {
        cplx z = seg.point(s);
        cplx v = seg.velocity(s);
        Mat2 phi;
        phi << u[0], u[1], u[2], u[3];
        Mat2 d = phi * (om.xi(t, z) * v);
        du.assign(dim, cplx(0.0));
        du[0] = d(0, 0); du[1] = d(0, 1); du[2] = d(1, 0); du[3] = d(1, 1);
        Mat2 phiinv;
        phiinv << phi(1, 1), -phi(0, 1), -phi(1, 0), phi(0, 0);
        phiinv /= phi.determinant();
        Mat2 core = phi * E21 * phiinv;
        size_t at = 4;
        for (int j = 0; j < n; ++j) {
          cplx inv = 1.0 / (z - om.pole(j));
          cplx pw = inv;
          for (int nu = 0; nu < 3; ++nu) {
            Mat2 g = core * (pw * v);
            du[at + 0] = g(0, 0); du[at + 1] = g(0, 1);
            du[at + 2] = g(1, 0); du[at + 3] = g(1, 1);
            at += 4;
            pw *= inv;
          }
        }
        Mat2 g = core * (om.omega(z) * v);
        du[at + 0] = g(0, 0); du[at + 1] = g(0, 1);
        du[at + 2] = g(1, 0); du[at + 3] = g(1, 1);
      };
      dopri5(rhs, y, opt.rtol, opt.atol, opt.min_step,
             [](State& u) {
               cplx det = u[0] * u[3] - u[1] * u[2];
               cplx r = std::sqrt(det);
               for (int q = 0; q < 4; ++q) u[q] /= r;
             });
    }
    out.M[k] << y[0], y[1], y[2], y[3];
    size_t at = 4;
    for (int j = 0; j < n; ++j)
      for (int nu = 0; nu < 3; ++nu) {
        out.I[k][j][nu] << y[at], y[at + 1], y[at + 2], y[at + 3];
        at += 4;
      }
    out.J[k] << y[at], y[at + 1], y[at + 2], y[at + 3];
  }
  return out;
}

Mat2 monodromy_derivative_node(double t, const ParamVector& x, cplx lambda,
                               const Mat2& M,
                               const std::vector<std::array<Mat2, 3>>& I,
                               const Mat2& J, const DirectionNode& dir) {
  cplx lm2 = (lambda - 1.0) * (lambda - 1.0);
  Mat2 acc = Mat2::Zero();
  for (int j = 0; j < x.n(); ++j) {
    cplx aj = x.ends[j].a.eval(lambda);
    cplx bj = x.ends[j].b.eval(lambda);
    if (j < (int)dir.da.size() && dir.da[j] != cplx(0.0)) acc += dir.da[j] * I[j][1];
    if (j < (int)dir.db.size() && dir.db[j] != cplx(0.0)) acc += dir.db[j] * I[j][0];
    if (j < (int)dir.dp.size() && dir.dp[j] != cplx(0.0))
      acc += dir.dp[j] * (2.0 * aj * I[j][2] + bj * I[j][1]);
  }
  Mat2 d = t * lm2 * acc;
  if (dir.dt != 0.0) d += dir.dt * lm2 * J;
  return d * M;
}

Mat2 sl2_log(const Mat2& M) {
  cplx c = 0.5 * M.trace();
  cplx s2 = c * c - 1.0;
  cplx mu;
  if (std::abs(s2) < 1e-8) {
    mu = 1.0 - s2 / 6.0 + 3.0 * s2 * s2 / 40.0;
  } else {
    cplx w = std::sqrt(s2);
    mu = std::asinh(w) / w;
  }
  return mu * (M - c * Mat2::Identity());
}

Mat2 sl2_log_frechet(const Mat2& M, const Mat2& dM) {
  cplx c = 0.5 * M.trace();
  cplx s2 = c * c - 1.0;
  cplx mu, dmu_ds2;
  if (std::abs(s2) < 1e-5) {
    mu = 1.0 - s2 / 6.0 + 3.0 * s2 * s2 / 40.0;
    dmu_ds2 = -1.0 / 6.0 + 3.0 * s2 / 20.0;
  } else {
    cplx w = std::sqrt(s2);
    mu = std::asinh(w) / w;
    dmu_ds2 = (1.0 / std::sqrt(1.0 + s2) - mu) / (2.0 * s2);
  }
  cplx dc = 0.5 * dM.trace();
  return dmu_ds2 * (2.0 * c * dc) * (M - c * Mat2::Identity()) +
         mu * (dM - dc * Mat2::Identity());
}

LoopMatrix rescaled_monodromy(double t, const ParamVector& x,
                              const NoidConfig& cfg, int i,
                              const CircleGrid& grid,
                              const TransportOptions& opt) {
  if (t == 0.0) return rescaled_monodromy_t0(x, i);
  TransportOptions o = opt;
  if (o.pole_guard == 0.0) o.pole_guard = cfg.epsilon;
  Path gamma = generator_loop(x.ends.at(i).p.coeff(0), cfg.epsilon);
  std::vector<Mat2> samples(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    cplx lam = grid.node(k);
    OmegaNode om(x, lam);
    // M - I is O(t (lambda-1)^2), which the 1/t rescaling then magnifies;
    // transporting Phi itself and subtracting I would lose that many digits
    // to cancellation. Instead integrate the deviation Psi = Phi Phi0^{-1} - I
    // against the free solution Phi0 = [[1, z/lambda],[0,1]]: on the closed
    // loop Phi0 returns to I, so Psi(end) = M - I at full relative accuracy.
    cplx lm1 = lam - 1.0;
    cplx tau = t * lm1 * lm1;
    State psi(4, cplx(0.0));
    for (const PathSegment& seg : gamma.segments) {
      auto rhs = [&](double s, const State& u, State& du) {
        cplx z = seg.point(s);
        cplx w = z / lam;
        cplx f = tau * om.omega(z) * seg.velocity(s);
        // A = f * Phi0 E21 Phi0^{-1} = f [[w, -w^2],[1, -w]]
        Mat2 A;
        A << f * w, -f * w * w, f, -f * w;
        Mat2 P;
        P << u[0], u[1], u[2], u[3];
        Mat2 d = A + P * A;
        du = {d(0, 0), d(0, 1), d(1, 0), d(1, 1)};
      };
      // the natural size of psi is |tau|; scale the absolute tolerance with it
      dopri5(rhs, psi, o.rtol, std::abs(tau) * o.rtol, o.min_step,
             [](State& u) {
               // det(I + Psi) = 1 + d with d = tr Psi + det Psi; renormalize
               // without forming the O(1) determinant explicitly
               cplx d = u[0] + u[3] + (u[0] * u[3] - u[1] * u[2]);
               cplx r = std::sqrt(1.0 + d);
               cplx shift = d / (1.0 + r);
               u[0] = (u[0] - shift) / r;
               u[1] /= r;
               u[2] /= r;
               u[3] = (u[3] - shift) / r;
             });
    }
    Mat2 Psi;
    Psi << psi[0], psi[1], psi[2], psi[3];
    if (Psi.norm() >= 1.0)
      throw TransportError("rescaled_monodromy: t too large for the principal log");
    // sl2_log(I + Psi) evaluated cancellation-free in the deviation
    cplx e = 0.5 * Psi.trace();        // c - 1
    cplx s2 = e * (2.0 + e);           // c^2 - 1
    cplx mu;
    if (std::abs(s2) < 1e-8) {
      mu = 1.0 - s2 / 6.0 + 3.0 * s2 * s2 / 40.0;
    } else {
      cplx w = std::sqrt(s2);
      mu = std::asinh(w) / w;
    }
    samples[k] = (lam / tau) * (mu * (Psi - e * Mat2::Identity()));
  }
  // degree N+1: the entries of Mtilde carry one extra lambda power
  // (lambda b and q/lambda) relative to the parameters themselves
  return loop_from_grid(samples, grid, x.degree() + 1, x.rho());
}

LoopMatrix rescaled_monodromy_t0(const ParamVector& x, int i) {
  const EndParams& e = x.ends.at(i);
  int N = x.degree();
  double rho = x.rho();
  const cplx tpi = 2.0 * M_PI * cplx(0.0, 1.0);
  Wiener diag = (e.a + e.b * e.p).resized(N + 1);
  Wiener off = (2.0 * (e.a * e.p) + e.b * (e.p * e.p)).resized(N + 1);
  LoopMatrix m(N + 1, rho);
  m.at(0, 0) = tpi * diag;
  m.at(1, 1) = (-tpi) * diag;
  m.at(0, 1) = (-tpi) * off.shifted(-1);
  m.at(1, 0) = tpi * e.b.resized(N + 1).shifted(1);
  return m;
}

UnitarityReport unitarity_residual(const LoopMatrix& M, const CircleGrid& grid) {
  UnitarityReport r{};
  r.circle_defect = M.unitarity_defect(grid);
  Mat2 m1 = M.eval_at_one();
  r.at_one = std::min((m1 - Mat2::Identity()).norm(), (m1 + Mat2::Identity()).norm());
  r.dlambda_at_one = M.deriv_at_one().norm();
  return r;
}

}  // namespace dpw

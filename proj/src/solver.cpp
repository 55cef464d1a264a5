#include "dpw/solver.hpp"

#include <cmath>

namespace dpw {

namespace {
const cplx kTwoPiI = 2.0 * M_PI * cplx(0.0, 1.0);

bool end_is_zero(const EndParams& e) {
  return e.a.norm() == 0.0 && e.b.norm() == 0.0 && e.p.norm() == 0.0;
}
}  // namespace

NoidSolver::NoidSolver(const NoidConfig& cfg)
    : cfg_(cfg), grid_(cfg.grid_size) {
  const int N = cfg_.N;
  dim_ = (cfg_.n - 1) * (6 * N + 3) + (6 * N + 6);
}

Eigen::VectorXd NoidSolver::pack(const ParamVector& x) const {
  const int N = cfg_.N;
  Eigen::VectorXd v(dim_);
  int at = 0;
  auto push_plus = [&](const Wiener& f) {
    for (int m = 1; m <= N; ++m) {
      v[at++] = f.coeff(m).real();
      v[at++] = f.coeff(m).imag();
    }
  };
  for (int i = 0; i < cfg_.n - 1; ++i) {
    const EndParams& e = x.ends[i];
    push_plus(e.a);
    push_plus(e.b);
    push_plus(e.p);
    v[at++] = e.a.coeff(0).imag();
    v[at++] = e.b.coeff(0).real();
    v[at++] = e.b.coeff(0).imag();
  }
  const EndParams& e = x.ends[cfg_.n - 1];
  for (const Wiener* f : {&e.a, &e.b, &e.p})
    for (int m = 0; m <= N; ++m) {
      v[at++] = f->coeff(m).real();
      v[at++] = f->coeff(m).imag();
    }
  return v;
}

ParamVector NoidSolver::unpack(const Eigen::VectorXd& v) const {
  const int N = cfg_.N;
  ParamVector x;
  int at = 0;
  auto pull_plus = [&](Wiener& f) {
    for (int m = 1; m <= N; ++m) {
      f.set_coeff(m, cplx(v[at], v[at + 1]));
      at += 2;
    }
  };
  for (int i = 0; i < cfg_.n - 1; ++i) {
    EndParams e{Wiener(N, cfg_.rho), Wiener(N, cfg_.rho), Wiener(N, cfg_.rho)};
    pull_plus(e.a);
    pull_plus(e.b);
    pull_plus(e.p);
    e.a.set_coeff(0, cplx(cfg_.tau[i], v[at]));
    ++at;
    e.b.set_coeff(0, cplx(v[at], v[at + 1]));
    at += 2;
    e.p.set_coeff(0, cfg_.pi[i]);
    x.ends.push_back(std::move(e));
  }
  EndParams e{Wiener(N, cfg_.rho), Wiener(N, cfg_.rho), Wiener(N, cfg_.rho)};
  for (Wiener* f : {&e.a, &e.b, &e.p})
    for (int m = 0; m <= N; ++m) {
      f->set_coeff(m, cplx(v[at], v[at + 1]));
      at += 2;
    }
  x.ends.push_back(std::move(e));
  return x;
}

Eigen::VectorXd NoidSolver::assemble(const std::vector<LoopMatrix>& mt,
                                     const std::array<Wiener, 3>& H) const {
  const int N = cfg_.N;
  Eigen::VectorXd v(dim_);
  int at = 0;
  for (int i = 0; i < cfg_.n - 1; ++i) {
    Wiener F = mt[i].at(0, 0) + mt[i].at(0, 0).star();
    Wiener G = (mt[i].at(0, 1) + mt[i].at(1, 0).star()).shifted(1);
    for (int m = 1; m <= N; ++m) {
      v[at++] = F.coeff(m).real();
      v[at++] = F.coeff(m).imag();
    }
    v[at++] = F.coeff(0).real();
    for (int m = 1; m <= N; ++m) {
      v[at++] = G.coeff(m).real();
      v[at++] = G.coeff(m).imag();
    }
    v[at++] = G.coeff(0).real();
    v[at++] = G.coeff(0).imag();
    for (int m = 1; m <= N; ++m) {
      cplx g = std::conj(G.coeff(-m));  // (G^-)* coefficient m
      v[at++] = g.real();
      v[at++] = g.imag();
    }
  }
  for (const Wiener& h : H)
    for (int m = 0; m <= N; ++m) {
      v[at++] = h.coeff(m).real();
      v[at++] = h.coeff(m).imag();
    }
  return v;
}

LoopMatrix NoidSolver::mtilde(double t, const ParamVector& x, int i) const {
  if (t == 0.0) return rescaled_monodromy_t0(x, i);
  // the 1/t rescaling amplifies transport error, and near lambda=1 the log is
  // small against the ODE's absolute error; integrate the residual tightly
  TransportOptions o;
  o.rtol = 1e-13;
  o.atol = 1e-16;
  return rescaled_monodromy(t, x, cfg_, i, grid_, o);
}

Eigen::VectorXd NoidSolver::residual(double t, const ParamVector& x) const {
  std::vector<LoopMatrix> mt;
  for (int i = 0; i < cfg_.n - 1; ++i) mt.push_back(mtilde(t, x, i));
  return assemble(mt, regularity_H(x));
}

Eigen::VectorXd NoidSolver::differential_t0(const ParamVector& x,
                                            const ParamVector& dx) const {
  const int N = cfg_.N;
  const double rho = cfg_.rho;
  std::vector<LoopMatrix> dmt;
  Wiener dH1(N, rho), dH2(N, rho), dH3(N, rho);
  for (int i = 0; i < cfg_.n; ++i) {
    const EndParams& e = x.ends[i];
    const EndParams& de = dx.ends[i];
    LoopMatrix m(N + 1, rho);
    if (!end_is_zero(de)) {
      Wiener s = de.a + e.p * de.b + e.b * de.p;                       // d(a+bp)
      Wiener q = 2.0 * (e.p * de.a) + (e.p * e.p) * de.b +
                 2.0 * ((e.a + e.b * e.p) * de.p);                     // d(2ap+bp^2)
      // dMtilde entries, same shape as the closed form at t=0
      m.at(0, 0) = kTwoPiI * s.resized(N + 1);
      m.at(1, 1) = (-kTwoPiI) * s.resized(N + 1);
      m.at(0, 1) = (-kTwoPiI) * q.resized(N + 1).shifted(-1);
      m.at(1, 0) = kTwoPiI * de.b.resized(N + 1).shifted(1);
      dH1 += de.b;
      dH2 += s;
      dH3 += q;
    }
    if (i < cfg_.n - 1) dmt.push_back(std::move(m));
  }
  return assemble(dmt, {dH1, dH2, dH3});
}

Eigen::MatrixXd NoidSolver::jacobian(double t, const ParamVector& x) const {
  Eigen::MatrixXd J(dim_, dim_);
  ParamVector zero = unpack(Eigen::VectorXd::Zero(dim_));
  ParamVector base = zero;  // pinned values only; subtract to get directions
  const int N = cfg_.N;

  if (t == 0.0) {
    for (int c = 0; c < dim_; ++c) {
      Eigen::VectorXd unit = Eigen::VectorXd::Zero(dim_);
      unit[c] = 1.0;
      ParamVector dir = unpack(unit);
      for (int i = 0; i < cfg_.n; ++i) {
        dir.ends[i].a -= base.ends[i].a;
        dir.ends[i].b -= base.ends[i].b;
        dir.ends[i].p -= base.ends[i].p;
      }
      J.col(c) = differential_t0(x, dir);
    }
    return J;
  }

  // t != 0: moment route. Precompute moments per generator, then assemble
  // each column from the log Frechet derivative per grid node.
  // the Jacobian only steers Newton; loose transport tolerances suffice and
  // cut the moment integration cost by several times
  TransportOptions jopt;
  jopt.rtol = 1e-9;
  jopt.atol = 1e-12;
  std::vector<NodeMoments> nm;
  for (int i = 0; i < cfg_.n - 1; ++i)
    nm.push_back(monodromy_with_moments(t, x, cfg_, i, grid_, jopt));

  const int K = grid_.size();
  std::vector<cplx> lm_scale(K);
  for (int k = 0; k < K; ++k) {
    cplx lam = grid_.node(k);
    lm_scale[k] = lam / (t * (lam - 1.0) * (lam - 1.0));
  }

  for (int c = 0; c < dim_; ++c) {
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(dim_);
    unit[c] = 1.0;
    ParamVector dir = unpack(unit);
    for (int i = 0; i < cfg_.n; ++i) {
      dir.ends[i].a -= base.ends[i].a;
      dir.ends[i].b -= base.ends[i].b;
      dir.ends[i].p -= base.ends[i].p;
    }
    std::vector<LoopMatrix> dmt;
    for (int i = 0; i < cfg_.n - 1; ++i) {
      std::vector<Mat2> samples(K);
      for (int k = 0; k < K; ++k) {
        cplx lam = grid_.node(k);
        DirectionNode dn;
        dn.da.resize(cfg_.n);
        dn.db.resize(cfg_.n);
        dn.dp.resize(cfg_.n);
        for (int j = 0; j < cfg_.n; ++j) {
          dn.da[j] = dir.ends[j].a.eval(lam);
          dn.db[j] = dir.ends[j].b.eval(lam);
          dn.dp[j] = dir.ends[j].p.eval(lam);
        }
        Mat2 dM = monodromy_derivative_node(t, x, lam, nm[i].M[k], nm[i].I[k],
                                            nm[i].J[k], dn);
        samples[k] = lm_scale[k] * sl2_log_frechet(nm[i].M[k], dM);
      }
      dmt.push_back(loop_from_grid(samples, grid_, N + 1, cfg_.rho));
    }
    // H is polynomial in x: its differential is exact at any t
    Wiener dH1(N, cfg_.rho), dH2(N, cfg_.rho), dH3(N, cfg_.rho);
    for (int i = 0; i < cfg_.n; ++i) {
      const EndParams& e = x.ends[i];
      const EndParams& de = dir.ends[i];
      if (end_is_zero(de)) continue;
      dH1 += de.b;
      dH2 += de.a + e.p * de.b + e.b * de.p;
      dH3 += 2.0 * (e.p * de.a) + (e.p * e.p) * de.b +
             2.0 * ((e.a + e.b * e.p) * de.p);
    }
    J.col(c) = assemble(dmt, {dH1, dH2, dH3});
  }
  return J;
}

ParamVector NoidSolver::solve_at(double t, const ParamVector& guess, double tol,
                                 int max_iter,
                                 std::vector<IterationRecord>* log) const {
  ParamVector x = guess;
  Eigen::VectorXd r = residual(t, x);
  double rn = r.norm();
  if (log) log->push_back({t, 0, rn, 0.0});
  for (int iter = 1; iter <= max_iter; ++iter) {
    if (rn <= tol) return x;
    Eigen::MatrixXd J = jacobian(t, x);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    Eigen::VectorXd step = lu.solve(-r);
    Eigen::VectorXd xv = pack(x);
    double alpha = 1.0;
    bool accepted = false;
    while (alpha >= 1.0 / 4096.0) {
      ParamVector trial = unpack(xv + alpha * step);
      Eigen::VectorXd rt = residual(t, trial);
      if (rt.norm() <= (1.0 - 1e-4 * alpha) * rn) {
        x = std::move(trial);
        r = std::move(rt);
        rn = r.norm();
        accepted = true;
        break;
      }
      alpha /= 2.0;
    }
    if (!accepted) throw SolverError("newton: line search failed", t);
    if (log) log->push_back({t, iter, rn, alpha});
  }
  if (rn <= tol) return x;
  throw SolverError("newton: no convergence after max iterations", t);
}

std::vector<std::pair<double, ParamVector>> NoidSolver::continue_in_t(
    double t_target, int steps, std::vector<IterationRecord>* log,
    double tol) const {
  if (steps < 1) throw SolverError("continuation: need at least one step");
  std::vector<std::pair<double, ParamVector>> family;
  ParamVector x = central_params(cfg_);
  family.emplace_back(0.0, x);

  const double sign = t_target >= 0.0 ? 1.0 : -1.0;
  const double span = std::abs(t_target);
  double t = 0.0, dt = span / steps;
  double prev_dt = 0.0;
  Eigen::VectorXd xv = pack(x), prev_xv = xv;
  int halvings = 0;
  while (t < span - 1e-18 * span) {
    double step_dt = std::min(dt, span - t);
    double t_next = t + step_dt;
    // secant predictor after the first accepted step (the exact t-derivative
    // is 0/0 at t=0; see ledger)
    Eigen::VectorXd guess = xv;
    if (prev_dt > 0.0) guess = xv + (xv - prev_xv) * (step_dt / prev_dt);
    try {
      ParamVector xn = solve_at(sign * t_next, unpack(guess), tol, 25, log);
      prev_xv = xv;
      xv = pack(xn);
      prev_dt = step_dt;
      t = t_next;
      family.emplace_back(sign * t, std::move(xn));
      halvings = 0;
    } catch (const SolverError&) {
      dt = step_dt / 2.0;
      prev_dt = 0.0;  // secant slope is stale across a failure
      if (++halvings > 14)
        throw SolverError("continuation: step underflow", sign * t);
    }
  }
  return family;
}

T0Report NoidSolver::verify_t0_characterization(const ParamVector& x,
                                                double tol) const {
  T0Report rep{};
  rep.a_defect = rep.p_defect = rep.b_defect = 0.0;
  Vec3 bal{0, 0, 0};
  for (const EndParams& e : x.ends) {
    cplx a0 = e.a.coeff(0), p0 = e.p.coeff(0), b0 = e.b.coeff(0);
    double a_nc = std::abs(a0.imag());
    double p_nc = 0.0, a_hi = 0.0;
    for (int m = 1; m <= x.degree(); ++m) {
      a_hi += std::abs(e.a.coeff(m)) + std::abs(e.a.coeff(-m));
      p_nc += std::abs(e.p.coeff(m)) + std::abs(e.p.coeff(-m));
    }
    rep.a_defect = std::max(rep.a_defect, a_nc + a_hi);
    rep.p_defect = std::max(rep.p_defect, p_nc);
    cplx b_expect = -2.0 * a0 * std::conj(p0) / (1.0 + std::norm(p0));
    double b_nc = std::abs(b0 - b_expect);
    for (int m = 1; m <= x.degree(); ++m)
      b_nc += std::abs(e.b.coeff(m)) + std::abs(e.b.coeff(-m));
    rep.b_defect = std::max(rep.b_defect, b_nc);
    bal = bal + inverse_stereo(p0) * a0.real();
  }
  rep.balance_defect = bal;
  rep.a_real_constant = rep.a_defect <= tol;
  rep.p_constant = rep.p_defect <= tol;
  rep.b_matches = rep.b_defect <= tol;
  rep.balanced = bal.norm() <= tol;
  return rep;
}

}  // namespace dpw

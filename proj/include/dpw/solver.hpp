#pragma once

#include "dpw/transport.hpp"

namespace dpw {

struct SolverError : std::runtime_error {
  double reached_t = 0.0;
  explicit SolverError(const std::string& msg, double t = 0.0)
      : std::runtime_error(msg), reached_t(t) {}
};

struct IterationRecord {
  double t;
  int iteration;
  double residual_norm;
  double step_scale;  // line-search damping actually used
};

struct T0Report {
  bool a_real_constant, p_constant, b_matches, balanced;
  double a_defect, p_defect, b_defect;
  Vec3 balance_defect;
  bool ok() const { return a_real_constant && p_constant && b_matches && balanced; }
};

/// The monodromy/regularity system of one n-noid configuration:
/// unknowns are the free coefficients of x = (a_i, b_i, p_i), residuals the
/// coefficients of (F_i, G_i)_{i<n} and (H1, H2, H3).
class NoidSolver {
 public:
  explicit NoidSolver(const NoidConfig& cfg);

  const NoidConfig& config() const { return cfg_; }
  int dim() const { return dim_; }

  /// Flatten the unknown coordinates (normalization excluded) / rebuild x
  /// with the pinned values Re(a_i^0) = tau_i, p_i^0 = pi_i for i < n.
  Eigen::VectorXd pack(const ParamVector& x) const;
  ParamVector unpack(const Eigen::VectorXd& v) const;

  Eigen::VectorXd residual(double t, const ParamVector& x) const;
  Eigen::MatrixXd jacobian(double t, const ParamVector& x) const;

  /// Damped Newton to ||residual||_2 <= tol; appends per-iteration records
  /// to log when given.
  ParamVector solve_at(double t, const ParamVector& guess, double tol = 1e-10,
                       int max_iter = 25,
                       std::vector<IterationRecord>* log = nullptr) const;

  /// Predictor-corrector continuation from (0, x0) to t_target; halves the
  /// step on Newton failure. Returns the sampled family including t=0.
  std::vector<std::pair<double, ParamVector>> continue_in_t(
      double t_target, int steps, std::vector<IterationRecord>* log = nullptr,
      double tol = 1e-10) const;

  T0Report verify_t0_characterization(const ParamVector& x,
                                      double tol = 1e-8) const;

  /// Rescaled monodromies of the current state for all n generators
  /// (diagnostic; the residual itself uses i < n only).
  LoopMatrix mtilde(double t, const ParamVector& x, int i) const;

 private:
  NoidConfig cfg_;
  CircleGrid grid_;
  int dim_;

  // residual assembly from per-end Mtilde loops plus H
  Eigen::VectorXd assemble(const std::vector<LoopMatrix>& mt,
                           const std::array<Wiener, 3>& H) const;
  // exact differential of the residual at t=0 in direction dx
  Eigen::VectorXd differential_t0(const ParamVector& x,
                                  const ParamVector& dx) const;
};

}  // namespace dpw

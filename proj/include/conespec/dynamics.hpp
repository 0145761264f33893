#pragma once

#include <string>
#include <vector>

#include "conespec/cones.hpp"

namespace conespec {

/// Samples of x(t) = e^{alpha t} e^{A t} x0. In normalized mode every state
/// has unit norm and log_norms carries log ||x(t)||.
struct FlowTrajectory {
  std::vector<double> times;
  std::vector<CVector> states;
  std::vector<double> log_norms;
  double alpha_used = 0.0;
  bool normalized = true;

  std::size_t size() const { return times.size(); }
  /// State with its magnitude restored; throws Overflow when not representable.
  CVector value(std::size_t i) const;
};

FlowTrajectory evolve(const CMatrix& a, double alpha_shift, const CVector& x0, const std::vector<double>& grid,
                      bool normalized = true);

std::vector<double> linear_grid(double t0, double t1, int points);
std::vector<double> geometric_grid(double t0, double t1, int points);
/// 200 geometric points on [0.01, 40].
std::vector<double> default_monitor_grid();

struct InvarianceReport {
  double max_violation = 0.0;
  double worst_time = 0.0;
  int violations = 0;  // samples above 10 * tol_cone
  std::size_t samples = 0;

  bool invariant() const { return violations == 0; }
};

InvarianceReport monitor_cone_invariance(const FlowTrajectory& traj, const ConeSpec& k, const Tolerances& tol = {});

struct ProfileTerm {
  Complex coefficient;
  double beta = 0.0;
  CVector w;  // unit eigenvector of alpha + i beta
};

/// t^{-nu} e^{-alpha t} x(t) - Gamma(t) -> 0 with Gamma(t) = sum c_i e^{i beta_i t} w_i.
struct AsymptoticProfile {
  double alpha = 0.0;
  int nu = 0;
  std::vector<ProfileTerm> terms;

  CVector gamma(double t) const;
  /// Gamma'(t), evaluated exactly.
  CVector gamma_derivative(double t) const;
};

AsymptoticProfile asymptotic_profile(const CMatrix& a, const CVector& x0, const Tolerances& tol = {});

struct GrowthEstimate {
  double alpha_hat = 0.0;
  int nu_hat = 0;
  double nu_fit = 0.0;  // unrounded coefficient of log t
  std::size_t samples = 0;
};

/// Least-squares fit of log ||x(t)|| ~ alpha t + nu log t + c over t >= t_max / 2,
/// or t >= t_max / 4 when the second half holds fewer than 20 samples.
/// alpha_hat refers to A itself (the trajectory's shift is removed).
GrowthEstimate estimate_growth(const FlowTrajectory& traj);

struct GammaResidual {
  double residual = 0.0;  // ||t^{-nu} e^{-alpha t} x(t) - Gamma(t)||
  double relative = 0.0;  // residual / ||Gamma(t)||
  double ode_residual = 0.0;  // ||central difference of Gamma - (A - alpha) Gamma|| / ||Gamma||
  bool ode_ok = false;
};

GammaResidual gamma_residual(const CMatrix& a, const AsymptoticProfile& profile, const CVector& x0, double t);

/// Header t,re_0,im_0,...,log_norm; 17 significant digits; LF line endings.
std::string trajectory_csv(const FlowTrajectory& traj);

/// Shortest round-trip decimal for finite values, "nan", "inf", "-inf" otherwise.
std::string format_double(double v);
/// Fixed 17 significant digits (%.17g style).
std::string format_double17(double v);

}  // namespace conespec

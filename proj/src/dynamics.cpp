#include "conespec/dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "conespec/numeric_core.hpp"

namespace conespec {

namespace {

constexpr double kLogMax = 709.0;

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Position of one basis column inside the Jordan structure.
struct ChainSlot {
  Complex eigenvalue;
  std::size_t chain_id;
  int depth;  // 1 for the eigenvector, r for the chain head
  CVector eigenvector;
};

}  // namespace

CVector FlowTrajectory::value(std::size_t i) const {
  if (!normalized) return states.at(i);
  if (log_norms.at(i) > kLogMax) throw Error(ErrorCode::Overflow, "trajectory magnitude exceeds representable range");
  return std::exp(log_norms[i]) * states[i];
}

FlowTrajectory evolve(const CMatrix& a, double alpha_shift, const CVector& x0, const std::vector<double>& grid,
                      bool normalized) {
  require_square(a, "evolve");
  require_dim(x0.size(), a.rows(), "evolve");
  if (x0.norm() == 0.0) throw Error(ErrorCode::InvalidArgument, "evolve: initial state is zero");
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "evolve: empty time grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw Error(ErrorCode::InvalidArgument, "evolve: time grid must increase strictly");

  FlowTrajectory traj;
  traj.alpha_used = alpha_shift;
  traj.normalized = normalized;
  traj.times = grid;
  traj.states.reserve(grid.size());
  traj.log_norms.reserve(grid.size());
  for (double t : grid) {
    const ScaledVector s = flow_apply_scaled(a, t, x0);
    const double log_norm = s.log_scale + alpha_shift * t;
    if (normalized) {
      traj.states.push_back(s.direction);
    } else {
      if (log_norm > kLogMax) throw Error(ErrorCode::Overflow, "evolve: state not representable at t = " + format_double(t));
      traj.states.push_back(std::exp(log_norm) * s.direction);
    }
    traj.log_norms.push_back(log_norm);
  }
  return traj;
}

std::vector<double> linear_grid(double t0, double t1, int points) {
  if (points < 1 || !(t1 >= t0)) throw Error(ErrorCode::InvalidArgument, "linear_grid: bad range");
  if (points == 1) return {t0};
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[i] = t0 + (t1 - t0) * i / (points - 1);
  return g;
}

std::vector<double> geometric_grid(double t0, double t1, int points) {
  if (points < 1 || !(t0 > 0.0) || !(t1 >= t0)) throw Error(ErrorCode::InvalidArgument, "geometric_grid: bad range");
  if (points == 1) return {t0};
  std::vector<double> g(static_cast<std::size_t>(points));
  const double r = std::log(t1 / t0);
  for (int i = 0; i < points; ++i) g[i] = t0 * std::exp(r * i / (points - 1));
  g.back() = t1;
  return g;
}

std::vector<double> default_monitor_grid() { return geometric_grid(0.01, 40.0, 200); }

InvarianceReport monitor_cone_invariance(const FlowTrajectory& traj, const ConeSpec& k, const Tolerances& tol) {
  InvarianceReport rep;
  rep.samples = traj.size();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const CVector& x = traj.states[i];
    require_dim(x.size(), k.dim(), "monitor_cone_invariance");
    const double scale = x.norm();
    if (scale == 0.0) continue;
    // Membership is scale invariant, so normalized states are checked directly.
    double v = 0.0;
    if (k.has_facets()) {
      v = violation(k, x) / scale;
    } else if (!member(k, x, 10 * tol.tol_cone)) {
      v = 1.0;
    }
    if (v > rep.max_violation) {
      rep.max_violation = v;
      rep.worst_time = traj.times[i];
    }
    if (v > 10 * tol.tol_cone) ++rep.violations;
  }
  return rep;
}

CVector AsymptoticProfile::gamma(double t) const {
  if (terms.empty()) return CVector();
  CVector g = CVector::Zero(terms.front().w.size());
  for (const auto& term : terms) g += term.coefficient * std::exp(Complex(0.0, term.beta * t)) * term.w;
  return g;
}

CVector AsymptoticProfile::gamma_derivative(double t) const {
  if (terms.empty()) return CVector();
  CVector g = CVector::Zero(terms.front().w.size());
  for (const auto& term : terms)
    g += Complex(0.0, term.beta) * term.coefficient * std::exp(Complex(0.0, term.beta * t)) * term.w;
  return g;
}

AsymptoticProfile asymptotic_profile(const CMatrix& a, const CVector& x0, const Tolerances& tol) {
  require_square(a, "asymptotic_profile");
  require_dim(x0.size(), a.rows(), "asymptotic_profile");
  const double nx = x0.norm();
  if (nx == 0.0) throw Error(ErrorCode::InvalidArgument, "asymptotic_profile: initial state is zero");

  const SpectralData spec = eigen_spectrum(a, tol);
  const JordanForm jf = assemble_jordan(spec);
  const Index n = a.rows();

  // Chain heads can be tiny next to unit eigenvectors; solve with unit columns.
  const RVector col_norms = jf.basis.colwise().norm().transpose();
  if ((col_norms.array() == 0.0).any()) throw Error(ErrorCode::ExpansionFailure, "asymptotic_profile: zero chain vector");
  Eigen::ColPivHouseholderQR<CMatrix> qr(jf.basis * col_norms.cwiseInverse().asDiagonal());
  const CVector coords = col_norms.cwiseInverse().asDiagonal() * qr.solve(x0);
  const double resid = (jf.basis * coords - x0).norm();
  if (!coords.allFinite() || qr.rank() < n || resid > tol.tol_chain_rel * nx * std::max(1.0, std::sqrt(double(n))))
    throw Error(ErrorCode::ExpansionFailure, "asymptotic_profile: chain coordinates not solvable (residual " +
                                                 format_double(resid) + ")");

  std::vector<ChainSlot> slots;
  slots.reserve(static_cast<std::size_t>(n));
  std::size_t chain_id = 0;
  for (const auto& cluster : spec.clusters) {
    for (const auto& chain : cluster.chains) {
      const int r = chain.rank();
      for (int j = 0; j < r; ++j) slots.push_back({cluster.eigenvalue, chain_id, j + 1, chain.eigenvector()});
      ++chain_id;
    }
  }

  const double floor = tol.coeff_floor * nx;
  auto active = [&](Index i) { return std::abs(coords(i)) * jf.basis.col(i).norm() > floor; };

  double alpha = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i)
    if (active(i)) alpha = std::max(alpha, slots[i].eigenvalue.real());
  if (!std::isfinite(alpha)) throw Error(ErrorCode::ExpansionFailure, "asymptotic_profile: all chain coordinates vanish");
  const double band = std::max(spec.cluster_radius, 1e-14);
  auto top_real = [&](Index i) { return slots[i].eigenvalue.real() >= alpha - band; };

  // Highest power of t comes from the deepest active coordinate among the maximal real parts.
  int depth = 0;
  for (Index i = 0; i < n; ++i)
    if (active(i) && top_real(i)) depth = std::max(depth, slots[i].depth);

  AsymptoticProfile prof;
  prof.alpha = alpha;
  prof.nu = depth - 1;
  const double scale = 1.0 / factorial(prof.nu);
  for (Index i = 0; i < n; ++i) {
    if (!active(i) || !top_real(i) || slots[i].depth != depth) continue;
    const double beta = slots[i].eigenvalue.imag();
    const Complex c = coords(i) * scale;
    // Chains of the same eigenvalue share beta: merge into one eigenvector term.
    auto same = std::find_if(prof.terms.begin(), prof.terms.end(),
                             [&](const ProfileTerm& t) { return std::abs(t.beta - beta) <= band; });
    if (same == prof.terms.end()) {
      prof.terms.push_back({c, beta, c * slots[i].eigenvector});
    } else {
      same->w += c * slots[i].eigenvector;
    }
  }
  for (auto& term : prof.terms) {
    const double nw = term.w.norm();
    term.coefficient = nw;
    term.w /= nw;
  }
  std::sort(prof.terms.begin(), prof.terms.end(), [](const ProfileTerm& p, const ProfileTerm& q) { return p.beta < q.beta; });
  return prof;
}

GrowthEstimate estimate_growth(const FlowTrajectory& traj) {
  if (traj.size() == 0) throw Error(ErrorCode::InsufficientData, "estimate_growth: empty trajectory");
  const double t_max = traj.times.back();
  if (t_max < 10.0) throw Error(ErrorCode::InsufficientData, "estimate_growth: t_max must be at least 10");
  // Second half of the time range; geometric grids are thin there, so fall
  // back to the last three quarters when it holds fewer than 20 samples.
  std::vector<std::size_t> tail;
  for (double from : {t_max / 2, t_max / 4}) {
    tail.clear();
    for (std::size_t i = 0; i < traj.size(); ++i)
      if (traj.times[i] >= from && std::isfinite(traj.log_norms[i])) tail.push_back(i);
    if (tail.size() >= 20) break;
  }
  if (tail.size() < 20) throw Error(ErrorCode::InsufficientData, "estimate_growth: fewer than 20 tail samples");

  const Index m = static_cast<Index>(tail.size());
  RMatrix design(m, 3);
  RVector rhs(m);
  for (Index r = 0; r < m; ++r) {
    const double t = traj.times[tail[r]];
    design(r, 0) = t;
    design(r, 1) = std::log(t);
    design(r, 2) = 1.0;
    rhs(r) = traj.log_norms[tail[r]];
  }
  const RVector coef = design.colPivHouseholderQr().solve(rhs);
  GrowthEstimate g;
  g.alpha_hat = coef(0) - traj.alpha_used;
  g.nu_fit = coef(1);
  g.nu_hat = std::max(0, static_cast<int>(std::lround(coef(1))));
  g.samples = tail.size();
  return g;
}

GammaResidual gamma_residual(const CMatrix& a, const AsymptoticProfile& profile, const CVector& x0, double t) {
  require_square(a, "gamma_residual");
  require_dim(x0.size(), a.rows(), "gamma_residual");
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma_residual: t must be positive");
  const ScaledVector s = flow_apply_scaled(a, t, x0);
  const double log_factor = s.log_scale - profile.alpha * t - profile.nu * std::log(t);
  const CVector scaled = std::isfinite(log_factor) ? CVector(std::exp(log_factor) * s.direction)
                                                   : CVector(CVector::Zero(x0.size()));
  const CVector g = profile.gamma(t);
  GammaResidual out;
  out.residual = (scaled - g).norm();
  const double ng = g.norm();
  out.relative = ng > 0.0 ? out.residual / ng : std::numeric_limits<double>::infinity();

  constexpr double h = 1e-5;
  const Index n = a.rows();
  const CVector fd = (profile.gamma(t + h) - profile.gamma(t - h)) / (2 * h);
  const CVector rhs = (a - profile.alpha * CMatrix::Identity(n, n)) * g;
  out.ode_residual = ng > 0.0 ? (fd - rhs).norm() / ng : std::numeric_limits<double>::infinity();
  out.ode_ok = out.ode_residual <= 1e-6;
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_double17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string trajectory_csv(const FlowTrajectory& traj) {
  const Index n = traj.states.empty() ? 0 : traj.states.front().size();
  std::string out = "t";
  for (Index i = 0; i < n; ++i) out += ",re_" + std::to_string(i) + ",im_" + std::to_string(i);
  out += ",log_norm\n";
  for (std::size_t r = 0; r < traj.size(); ++r) {
    out += format_double17(traj.times[r]);
    for (Index i = 0; i < n; ++i) {
      out += ',';
      out += format_double17(traj.states[r](i).real());
      out += ',';
      out += format_double17(traj.states[r](i).imag());
    }
    out += ',';
    out += format_double17(traj.log_norms[r]);
    out += '\n';
  }
  return out;
}

}  // namespace conespec

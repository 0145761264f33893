#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "conespec/dynamics.hpp"
#include "conespec/numeric_core.hpp"
#include "conespec/positivity.hpp"
#include "test_support.hpp"

using namespace conespec;
using namespace std::complex_literals;

namespace {

CVector cv(std::initializer_list<Complex> xs) {
  CVector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (Complex x : xs) v(i++) = x;
  return v;
}

CMatrix cm2(Complex a, Complex b, Complex c, Complex d) {
  CMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

// A = S diag(mu) S^{-1} with S a mild perturbation of the identity.
struct Diagonalizable {
  CMatrix a;
  CMatrix s;
  CVector mu;
};

Diagonalizable similar_diagonal(const CVector& mu, std::mt19937_64& rng) {
  const Index n = mu.size();
  CMatrix r = testing_support::random_complex(n, n, rng);
  const CMatrix s = CMatrix::Identity(n, n) + 0.4 * r / r.norm();
  return {s * mu.asDiagonal() * s.inverse(), s, mu};
}

// Closed-form t^{-nu} e^{-alpha t} x(t) - Gamma(t) for a diagonalizable A:
// everything outside the real part alpha, scaled by e^{-alpha t}.
double expansion_residual(const Diagonalizable& d, const CVector& x0, double alpha, double t) {
  const CVector c = d.s.partialPivLu().solve(x0);
  CVector r = CVector::Zero(x0.size());
  for (Index k = 0; k < c.size(); ++k)
    if (d.mu(k).real() < alpha - 1e-9) r += c(k) * std::exp((d.mu(k) - alpha) * t) * d.s.col(k);
  return r.norm();
}

}  // namespace

TEST_CASE("dynamics: evolve examples") {
  const CMatrix zero = CMatrix::Zero(2, 2);
  const FlowTrajectory a = evolve(zero, 1.0, cv({1, 0}), {1.0}, false);
  CHECK(std::abs(a.states[0](0) - std::exp(1.0)) < 1e-14);
  CHECK(std::abs(a.states[0](1)) == 0.0);

  const CMatrix d = cm2(2, 0, 0, 1);
  const FlowTrajectory b = evolve(d, -2.0, cv({1, 1}), {1.0, 10.0, 40.0});
  CHECK((b.states.back() - cv({1, 0})).norm() < 1e-12);
  // log ||x(40)|| = log sqrt(1 + e^{-80}) after the shift.
  CHECK(std::abs(b.log_norms.back()) < 1e-14);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(std::abs(b.states[i].norm() - 1.0) < 1e-13);

  CHECK_THROWS_AS(evolve(d, 0.0, cv({0, 0}), {1.0}), Error);
  CHECK_THROWS_AS(evolve(d, 0.0, cv({1, 0}), {2.0, 1.0}), Error);
  CHECK_THROWS_AS(evolve(d, 0.0, cv({1, 0}), {}), Error);
  CHECK_THROWS_AS(evolve(d, 0.0, cv({1, 0}), {400.0}, false), Error);
  CHECK_NOTHROW(evolve(d, 0.0, cv({1, 0}), {400.0}, true));
}

TEST_CASE("dynamics: normalized and raw modes agree with a series oracle") {
  std::mt19937_64 rng(4101);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + trial % 5;
    const CMatrix a = testing_support::random_complex(n, n, rng, 0.5);
    const CVector x0 = testing_support::random_complex(n, 1, rng);
    const double shift = std::uniform_real_distribution<double>(-1, 1)(rng);
    const std::vector<double> grid = linear_grid(0.0, 3.0, 7);
    const FlowTrajectory raw = evolve(a, shift, x0, grid, false);
    const FlowTrajectory nrm = evolve(a, shift, x0, grid, true);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const CVector oracle = std::exp(shift * grid[i]) * testing_support::taylor_flow(a, grid[i], x0);
      CHECK((raw.states[i] - oracle).norm() <= 1e-10 * oracle.norm());
      CHECK(projective_angle(raw.states[i], nrm.states[i]) < 1e-10);
      CHECK((nrm.value(i) - oracle).norm() <= 1e-10 * oracle.norm());
      CHECK(std::abs(nrm.log_norms[i] - std::log(oracle.norm())) < 1e-10);
    }
  }
}

TEST_CASE("dynamics: grids") {
  const auto g = default_monitor_grid();
  REQUIRE(g.size() == 200);
  CHECK(g.front() == doctest::Approx(0.01));
  CHECK(g.back() == 40.0);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  const auto l = linear_grid(0, 1, 5);
  CHECK(l[2] == 0.5);
  CHECK_THROWS_AS(geometric_grid(0.0, 1.0, 3), Error);
}

TEST_CASE("dynamics: cone invariance monitoring") {
  const ConeSpec c2 = ConeSpec::complexified(ConeSpec::orthant(2));
  RMatrix b(2, 2);
  b << 2, 1, 1, 2;
  const auto pos = monitor_cone_invariance(evolve(complexify(b), 0.0, cv({1, 1}), linear_grid(0, 5, 100)), c2);
  CHECK(pos.violations == 0);
  CHECK(pos.max_violation <= 1e-12);

  // cosh / sinh flow: the second coordinate becomes negative immediately.
  const CMatrix swap = cm2(0, -1, -1, 0);
  const FlowTrajectory traj = evolve(swap, 0.0, cv({1, 0}), default_monitor_grid());
  const auto neg = monitor_cone_invariance(traj, c2);
  CHECK(neg.violations > 0);
  CHECK(neg.max_violation > 0.5);  // -tanh(t) / sqrt(1 + tanh^2) -> -1/sqrt(2)
  CHECK(neg.worst_time > 10.0);

  const auto triv = monitor_cone_invariance(evolve(CMatrix::Zero(2, 2), 0.0, cv({1, 2}), default_monitor_grid()), c2);
  CHECK(triv.invariant());
  CHECK(triv.samples == 200);
}

TEST_CASE("dynamics: cone invariance for certified positive operators") {
  std::mt19937_64 rng(4102);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + trial % 4;
    const RMatrix b = testing_support::random_real(n, n, rng, 0.0, 1.0) - 0.7 * RMatrix::Identity(n, n);
    // Metzler generator: e^{Bt} is nonnegative, so the flow keeps the orthant.
    const ConeSpec k = ConeSpec::complexified(ConeSpec::orthant(n));
    const CVector x0 = (testing_support::random_real(n, 1, rng, 0.0, 1.0).cast<Complex>() +
                        1i * testing_support::random_real(n, 1, rng, 0.0, 1.0).cast<Complex>());
    const auto rep = monitor_cone_invariance(evolve(complexify(b), 0.0, x0, default_monitor_grid()), k);
    CHECK(rep.invariant());
  }
}

TEST_CASE("dynamics: asymptotic profile examples") {
  const CMatrix j2 = cm2(2, 1, 0, 2);
  const AsymptoticProfile p1 = asymptotic_profile(j2, cv({0, 1}));
  CHECK(p1.alpha == doctest::Approx(2.0));
  CHECK(p1.nu == 1);
  REQUIRE(p1.terms.size() == 1);
  // x(t) = e^{2t}(e2 + t e1) so Gamma = e1.
  CHECK((p1.gamma(0.3) - cv({1, 0})).norm() < 1e-8);

  const AsymptoticProfile p2 = asymptotic_profile(cm2(1, 0, 0, 2), cv({1, 1}));
  CHECK(p2.alpha == doctest::Approx(2.0));
  CHECK(p2.nu == 0);
  REQUIRE(p2.terms.size() == 1);
  CHECK((p2.gamma(5.0) - cv({0, 1})).norm() < 1e-12);

  const AsymptoticProfile p3 = asymptotic_profile(cm2(0, -1, 1, 0), cv({1, 0}));
  CHECK(std::abs(p3.alpha) < 1e-12);
  CHECK(p3.nu == 0);
  REQUIRE(p3.terms.size() == 2);
  CHECK(p3.terms[0].beta == doctest::Approx(-1.0));
  CHECK(p3.terms[1].beta == doctest::Approx(1.0));
  // The rotation is its own profile: Gamma(t) = (cos t, sin t).
  for (double t : {0.0, 0.7, 2.0}) CHECK((p3.gamma(t) - cv({std::cos(t), std::sin(t)})).norm() < 1e-12);

  // Coefficients below the floor count as absent.
  const AsymptoticProfile p4 = asymptotic_profile(cm2(1, 0, 0, 2), cv({1, 1e-15}));
  CHECK(p4.alpha == doctest::Approx(1.0));

  CHECK_THROWS_AS(asymptotic_profile(j2, cv({0, 0})), Error);
}

TEST_CASE("dynamics: gamma residual examples") {
  const CMatrix j2 = cm2(2, 1, 0, 2);
  const CVector e2 = cv({0, 1});
  const AsymptoticProfile p = asymptotic_profile(j2, e2);
  double prev = 1e300;
  for (double t : {10.0, 20.0, 40.0}) {
    const GammaResidual r = gamma_residual(j2, p, e2, t);
    CHECK(r.residual == doctest::Approx(1.0 / t).epsilon(1e-6));
    CHECK(r.residual < prev);
    CHECK(r.ode_ok);
    prev = r.residual;
  }

  // Exact eigenvector of the dominant real eigenvalue.
  RMatrix b(2, 2);
  b << 2, 1, 1, 2;
  const CVector v = cv({1, 1}) / std::sqrt(2.0);
  const AsymptoticProfile pv = asymptotic_profile(complexify(b), v);
  CHECK(pv.alpha == doctest::Approx(3.0));
  for (double t : {1.0, 10.0, 40.0}) CHECK(gamma_residual(complexify(b), pv, v, t).residual < 1e-10);
}

TEST_CASE("dynamics: residual decays like the spectral gap") {
  std::mt19937_64 rng(4103);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 3 + trial % 4;
    CVector mu(n);
    mu(0) = Complex(ud(rng), 0.0);
    const double gap = 0.1 + 0.9 * ud(rng);
    for (Index k = 1; k < n; ++k) mu(k) = Complex(mu(0).real() - gap - 1.5 * ud(rng), 3 * ud(rng) - 1.5);
    const Diagonalizable d = similar_diagonal(mu, rng);
    const CVector x0 = testing_support::random_complex(n, 1, rng);
    const AsymptoticProfile p = asymptotic_profile(d.a, x0);
    CHECK(p.alpha == doctest::Approx(mu(0).real()).epsilon(1e-9));
    CHECK(p.nu == 0);
    double prev = 1e300;
    for (double t : {10.0, 20.0, 30.0, 40.0}) {
      const GammaResidual r = gamma_residual(d.a, p, x0, t);
      const double oracle = expansion_residual(d, x0, mu(0).real(), t);
      CHECK(std::abs(r.residual - oracle) <= 1e-8 * x0.norm() + 1e-6 * oracle);
      CHECK(r.ode_ok);
      CHECK(r.residual <= prev + 1e-12 * x0.norm());
      prev = r.residual;
    }
  }
}

TEST_CASE("dynamics: estimate_growth examples") {
  const std::vector<double> grid = linear_grid(0.0, 40.0, 200);
  const GrowthEstimate g1 = estimate_growth(evolve(cm2(2, 0, 0, 1), 0.0, cv({1, 1}), grid));
  CHECK(std::abs(g1.alpha_hat - 2.0) <= 0.01);
  CHECK(g1.nu_hat == 0);

  const GrowthEstimate g2 = estimate_growth(evolve(cm2(2, 1, 0, 2), 0.0, cv({0, 1}), grid));
  CHECK(std::abs(g2.alpha_hat - 2.0) <= 0.01);
  CHECK(g2.nu_hat == 1);

  const GrowthEstimate g3 = estimate_growth(evolve(cm2(0, -1, 1, 0), 0.0, cv({1, 0}), grid));
  CHECK(std::abs(g3.alpha_hat) <= 0.01);
  CHECK(g3.nu_hat == 0);

  // The trajectory's shift is removed from the estimate.
  const GrowthEstimate g4 = estimate_growth(evolve(cm2(2, 1, 0, 2), -2.0, cv({0, 1}), grid));
  CHECK(std::abs(g4.alpha_hat - 2.0) <= 0.01);

  CHECK_THROWS_AS(estimate_growth(evolve(cm2(2, 0, 0, 1), 0.0, cv({1, 1}), linear_grid(0, 5, 100))), Error);
  CHECK_THROWS_AS(estimate_growth(evolve(cm2(2, 0, 0, 1), 0.0, cv({1, 1}), linear_grid(0, 40, 20))), Error);
}

TEST_CASE("dynamics: regression agrees with the profile") {
  std::mt19937_64 rng(4104);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const std::vector<double> grid = linear_grid(0.0, 40.0, 200);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 3 + trial % 3;
    CMatrix a;
    if (trial % 2 == 0) {
      CVector mu(n);
      mu(0) = Complex(2 * ud(rng) - 1, 2 * ud(rng) - 1);
      const double gap = 0.1 + ud(rng);
      for (Index k = 1; k < n; ++k) mu(k) = Complex(mu(0).real() - gap - ud(rng), 2 * ud(rng) - 1);
      a = similar_diagonal(mu, rng).a;
    } else {
      // Dominant Jordan block of size 2 or 3. A strong coupling keeps the O(1/t)
      // corrections of log ||x(t)|| small on [10, 40]; size 3 uses a milder one
      // since rounding splits the triple eigenvalue by (eps ||A|| s^2)^{1/3}.
      const Index size = std::min<Index>(n, trial % 3 == 0 ? 3 : 2);
      CMatrix j = CMatrix::Zero(n, n);
      const Complex lead(ud(rng), ud(rng));
      for (Index k = 0; k < size; ++k) {
        j(k, k) = lead;
        if (k > 0) j(k - 1, k) = size == 2 ? 200.0 + 200.0 * ud(rng) : 30.0 + 30.0 * ud(rng);
      }
      for (Index k = size; k < n; ++k) j(k, k) = Complex(lead.real() - 0.5 - ud(rng), ud(rng));
      const CMatrix s = similar_diagonal(CVector::Ones(n), rng).s;
      a = s * j * s.inverse();
    }
    const CVector x0 = testing_support::random_complex(n, 1, rng);
    const AsymptoticProfile p = asymptotic_profile(a, x0);
    const GrowthEstimate g = estimate_growth(evolve(a, 0.0, x0, grid));
    CHECK(std::abs(g.alpha_hat - p.alpha) <= 1e-2);
    CHECK(g.nu_hat == p.nu);
    ++checked;
  }
  CHECK(checked == 40);
}

TEST_CASE("dynamics: gamma never vanishes") {
  std::mt19937_64 rng(4105);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 3;
    CVector mu(n);
    mu << Complex(0.5, 1.0), Complex(0.5, -0.4), Complex(-0.5, 0.0);
    const Diagonalizable d = similar_diagonal(mu, rng);
    const CVector x0 = testing_support::random_complex(n, 1, rng);
    const AsymptoticProfile p = asymptotic_profile(d.a, x0);
    REQUIRE(p.terms.size() == 2);
    double min_beta = 1e300;
    for (const auto& t : p.terms) min_beta = std::min(min_beta, std::abs(t.beta));
    const double horizon = 4 * std::numbers::pi / min_beta;
    double min_norm = 1e300;
    for (int i = 0; i <= 4000; ++i) min_norm = std::min(min_norm, p.gamma(horizon * i / 4000).norm());
    CHECK(min_norm > 1e-3);
  }
}

TEST_CASE("dynamics: profile of a positive flow stays in the cone") {
  std::mt19937_64 rng(4106);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + trial % 4;
    const RMatrix b = testing_support::random_real(n, n, rng, 0.0, 1.0);
    const ConeSpec k = ConeSpec::complexified(ConeSpec::orthant(n));
    const CMatrix a = complexify(b);
    REQUIRE(certify_positive(a, k).verdict == CertVerdict::Certified);
    const CVector x0 = testing_support::random_real(n, 1, rng, 0.0, 1.0).cast<Complex>() +
                       1i * testing_support::random_real(n, 1, rng, 0.0, 1.0).cast<Complex>();
    const AsymptoticProfile p = asymptotic_profile(a, x0);
    for (double t : {0.0, 1.0, 5.0, 17.0}) {
      const CVector g = p.gamma(t);
      CHECK(member(k, g, 10 * Tolerances{}.tol_cone));
    }
  }
}

TEST_CASE("dynamics: trajectory csv") {
  const FlowTrajectory traj = evolve(cm2(0, -1, 1, 0), 0.0, cv({1, 0}), {0.0, 0.5});
  const std::string csv = trajectory_csv(traj);
  const std::string header = "t,re_0,im_0,re_1,im_1,log_norm\n";
  REQUIRE(csv.substr(0, header.size()) == header);
  CHECK(csv.find("\n0,1,0,0,0,0\n") != std::string::npos);
  CHECK(csv.find("\r") == std::string::npos);
  CHECK(format_double17(0.1) == "0.10000000000000001");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

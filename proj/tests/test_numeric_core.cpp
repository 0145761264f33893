#include <algorithm>
#include <cmath>
#include <random>

#include "conespec/numeric_core.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace conespec;
using testing_support::random_complex;
using testing_support::random_unitary;
using testing_support::taylor_flow;

namespace {

CMatrix mat2(Complex a, Complex b, Complex c, Complex d) {
  CMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

void check_spectral_invariants(const CMatrix& a, const SpectralData& s) {
  int total = 0;
  for (const auto& c : s.clusters) {
    total += c.algebraic;
    CHECK(c.geometric >= 1);
    CHECK(c.geometric <= c.algebraic);
    int chain_total = 0;
    for (const auto& ch : c.chains) {
      chain_total += ch.rank();
      const Index n = a.rows();
      const CMatrix shifted = a - ch.eigenvalue * CMatrix::Identity(n, n);
      const double tol_chain = 1e-8 * std::max(1.0, s.norm);
      for (int k = 0; k + 1 < ch.rank(); ++k) {
        CHECK((shifted * ch.chain[k] - ch.chain[k + 1]).norm() <= tol_chain * std::max(1.0, ch.chain[k].norm()));
      }
      CHECK((shifted * ch.eigenvector()).norm() <= tol_chain);
      CHECK(ch.eigenvector().norm() == doctest::Approx(1.0));
    }
    CHECK(chain_total == c.algebraic);
  }
  CHECK(total == a.rows());
  double rmax = 0;
  for (const auto& c : s.clusters) rmax = std::max(rmax, std::abs(c.eigenvalue));
  CHECK(s.spectral_radius == doctest::Approx(rmax).epsilon(1e-6));
  const JordanForm jf = assemble_jordan(s);
  CHECK((a * jf.basis - jf.basis * jf.jordan).norm() <= 1e-8 * std::max(1.0, s.norm) * jf.basis.norm());
}

}  // namespace

TEST_CASE("eigen_spectrum: symmetric 2x2") {
  const CMatrix a = mat2(2, 1, 1, 2);
  const SpectralData s = eigen_spectrum(a);
  REQUIRE(s.clusters.size() == 2);
  CHECK(s.clusters[0].eigenvalue.real() == doctest::Approx(3.0));
  CHECK(s.clusters[1].eigenvalue.real() == doctest::Approx(1.0));
  for (const auto& c : s.clusters) {
    CHECK(c.algebraic == 1);
    CHECK(c.geometric == 1);
  }
  CHECK(s.spectral_radius == doctest::Approx(3.0));
  const CVector w = s.dominant().chains[0].eigenvector();
  CHECK(w(0).real() == doctest::Approx(std::sqrt(0.5)));
  CHECK(std::abs(w(0).imag()) < 1e-14);
  check_spectral_invariants(a, s);
}

TEST_CASE("eigen_spectrum: identity has three rank-one chains") {
  const CMatrix a = CMatrix::Identity(3, 3);
  const SpectralData s = eigen_spectrum(a);
  REQUIRE(s.clusters.size() == 1);
  CHECK(s.clusters[0].algebraic == 3);
  CHECK(s.clusters[0].geometric == 3);
  REQUIRE(s.clusters[0].chains.size() == 3);
  for (const auto& ch : s.clusters[0].chains) CHECK(ch.rank() == 1);
  check_spectral_invariants(a, s);
}

TEST_CASE("eigen_spectrum: Jordan block") {
  const CMatrix a = mat2(2, 1, 0, 2);
  const SpectralData s = eigen_spectrum(a);
  REQUIRE(s.clusters.size() == 1);
  CHECK(s.clusters[0].algebraic == 2);
  CHECK(s.clusters[0].geometric == 1);
  REQUIRE(s.clusters[0].chains.size() == 1);
  CHECK(s.clusters[0].chains[0].rank() == 2);
  check_spectral_invariants(a, s);
}

TEST_CASE("eigen_spectrum: hidden Jordan structure under unitary similarity") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    CMatrix j = CMatrix::Zero(7, 7);
    // J3(1.5) + J2(-0.7) + diag(0.3, 0.2i)
    j(0, 0) = j(1, 1) = j(2, 2) = 1.5;
    j(0, 1) = j(1, 2) = 1.0;
    j(3, 3) = j(4, 4) = -0.7;
    j(3, 4) = 1.0;
    j(5, 5) = 0.3;
    j(6, 6) = Complex(0.0, 0.2);
    const CMatrix q = random_unitary(7, rng);
    const CMatrix a = q * j * q.adjoint();
    const SpectralData s = eigen_spectrum(a);
    REQUIRE(s.clusters.size() == 4);
    CHECK(s.clusters[0].algebraic == 3);
    CHECK(s.clusters[0].geometric == 1);
    CHECK(s.clusters[0].max_rank() == 3);
    CHECK(s.clusters[1].algebraic == 2);
    CHECK(s.clusters[1].max_rank() == 2);
    check_spectral_invariants(a, s);
  }
}

TEST_CASE("eigen_spectrum: strongly coupled Jordan block next to distinct eigenvalues") {
  std::mt19937_64 rng(2207);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 5;
    CMatrix j = CMatrix::Zero(n, n);
    const Complex lead(0.5, 0.3);
    j(0, 0) = j(1, 1) = lead;
    j(0, 1) = 200.0 + 10.0 * trial;
    j(2, 2) = Complex(-0.2, 0.8);
    j(3, 3) = Complex(0.1, -0.4);
    j(4, 4) = Complex(-0.6, 0.1);
    CMatrix r = random_complex(n, n, rng);
    const CMatrix s = CMatrix::Identity(n, n) + 0.4 * r / r.norm();
    const CMatrix a = s * j * s.inverse();
    const SpectralData spec = eigen_spectrum(a);
    REQUIRE(spec.clusters.size() == 4);
    const auto idx = spec.find(lead);
    REQUIRE(idx.has_value());
    CHECK(spec.clusters[*idx].algebraic == 2);
    CHECK(spec.clusters[*idx].geometric == 1);
    check_spectral_invariants(a, spec);
  }
}

TEST_CASE("eigen_spectrum: random matrices satisfy structural invariants") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 1 + trial % 12;
    const CMatrix a = random_complex(n, n, rng);
    const SpectralData s = eigen_spectrum(a);
    check_spectral_invariants(a, s);
  }
}

TEST_CASE("eigen_spectrum: non-square input") {
  CHECK_THROWS_AS(eigen_spectrum(CMatrix::Zero(2, 3)), Error);
}

TEST_CASE("flow_apply examples") {
  CVector x0(2);
  x0 << 1.0, 1.0;
  CHECK(flow_apply(CMatrix::Zero(2, 2), 3.7, x0).isApprox(x0));
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -1.0;
  const CVector y = flow_apply(d, std::log(2.0), x0);
  CHECK(std::abs(y(0) - 2.0) < 1e-13);
  CHECK(std::abs(y(1) - 0.5) < 1e-13);
}

TEST_CASE("flow_apply matches the Taylor-series oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix a = random_complex(6, 6, rng, 1.0 / std::sqrt(6.0));
    const CVector x0 = random_complex(6, 1, rng);
    const CVector got = flow_apply(a, 1.0, x0);
    const CVector want = taylor_flow(a, 1.0, x0);
    CHECK((got - want).norm() <= 1e-10 * want.norm());
  }
}

TEST_CASE("flow_apply semigroup law") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ud(0.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 2 + trial % 6;
    const CMatrix a = random_complex(n, n, rng, 0.7);
    const CVector x = random_complex(n, 1, rng);
    const double s = ud(rng), t = ud(rng);
    const CVector lhs = flow_apply(a, s + t, x);
    const CVector rhs = flow_apply(a, s, flow_apply(a, t, x));
    CHECK((lhs - rhs).norm() <= 1e-8 * x.norm() * std::exp((s + t) * operator_norm(a)));
  }
}

TEST_CASE("flow_apply at large times stays finite in scaled form") {
  CMatrix a = mat2(2, 1, 0, 2);
  CVector x0(2);
  x0 << 0.0, 1.0;
  const ScaledVector s = flow_apply_scaled(a, 1000.0, x0);
  // x(t) = e^{2t}(t e1 + e2)
  CHECK(s.log_scale == doctest::Approx(2000.0 + std::log(std::hypot(1000.0, 1.0))).epsilon(1e-12));
  CHECK(std::abs(s.direction(1) / s.direction(0) - 1.0 / 1000.0) < 1e-12);
  CHECK_THROWS_AS(flow_apply(a, 1000.0, x0), Error);
}

TEST_CASE("distance_to_subspace examples and homogeneity") {
  CMatrix m(2, 1);
  m << 0.0, 1.0;
  const SubspaceBasis sub = SubspaceBasis::span(m);
  CVector x(2);
  x << 1.0, 0.0;
  CHECK(distance_to_subspace(x, sub) == doctest::Approx(1.0));
  CHECK(distance_to_subspace(CVector(2.0 * x), sub) == doctest::Approx(2.0));
  CVector inside(2);
  inside << 0.0, Complex(3.0, -1.0);
  CHECK(distance_to_subspace(inside, sub) < 1e-15);
  CHECK_THROWS_AS(distance_to_subspace(CVector::Ones(3), sub), Error);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ud(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    const SubspaceBasis s = SubspaceBasis::span(random_complex(6, 1 + trial % 5, rng));
    const CVector v = random_complex(6, 1, rng);
    const double lambda = ud(rng);
    const double d = distance_to_subspace(v, s);
    CHECK(std::abs(distance_to_subspace(CVector(lambda * v), s) - lambda * d) <= 1e-12 * std::max(1.0, lambda * d));
  }
}

TEST_CASE("invariant_split examples") {
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = 3.0;
  a(1, 1) = 0.5;
  const InvariantSplit sp = invariant_split(a, 1.0);
  REQUIRE(sp.outer.dim() == 1);
  REQUIRE(sp.inner.dim() == 1);
  CHECK(std::abs(std::abs(sp.outer.basis(0, 0)) - 1.0) < 1e-14);
  CHECK(std::abs(std::abs(sp.inner.basis(1, 0)) - 1.0) < 1e-14);

  const InvariantSplit all = invariant_split(a, 4.0);
  CHECK(all.outer.dim() == 0);
  CHECK(all.inner.dim() == 2);
  CHECK_THROWS_AS(invariant_split(a, 3.0), Error);
}

TEST_CASE("invariant_split on random matrices") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const CMatrix a = random_complex(6, 6, rng);
    const SpectralData s = eigen_spectrum(a);
    // Split halfway between two consecutive moduli.
    std::vector<double> mods;
    for (const auto& c : s.clusters) mods.push_back(std::abs(c.eigenvalue));
    std::sort(mods.begin(), mods.end());
    const std::size_t cut = 1 + trial % (mods.size() - 1);
    if (mods[cut] - mods[cut - 1] < 1e-3) continue;
    const double rho = 0.5 * (mods[cut] + mods[cut - 1]);
    const InvariantSplit sp = invariant_split(a, rho);
    CHECK(sp.inner.dim() + sp.outer.dim() == 6);
    CHECK(sp.outer.dim() == static_cast<Index>(mods.size() - cut));
    const double na = operator_norm(a);
    for (const SubspaceBasis* x : {&sp.inner, &sp.outer}) {
      for (Index j = 0; j < x->dim(); ++j) {
        const CVector v = x->basis.col(j);
        CHECK(distance_to_subspace(CVector(a * v), *x) <= 1e-9 * na * v.norm());
      }
    }
    CMatrix both(6, 6);
    both << sp.inner.basis, sp.outer.basis;
    Eigen::BDCSVD<CMatrix> svd(both);
    CHECK(svd.singularValues()(5) > 1e-9);
  }
}

TEST_CASE("multiplicities") {
  const Multiplicities j = multiplicities(mat2(2, 1, 0, 2), Complex(2.0, 0.0));
  CHECK(j.algebraic == 2);
  CHECK(j.geometric == 1);
  const Multiplicities id = multiplicities(CMatrix::Identity(3, 3), Complex(1.0, 0.0));
  CHECK(id.algebraic == 3);
  CHECK(id.geometric == 3);
  CHECK_THROWS_AS(multiplicities(mat2(2, 1, 0, 2), Complex(5.0, 0.0)), Error);

  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix v = random_complex(5, 5, rng);
    CMatrix d = CMatrix::Zero(5, 5);
    for (int i = 0; i < 5; ++i) d(i, i) = Complex(i + 1.0, 0.5 * i);
    const CMatrix a = v * d * v.inverse();
    for (int i = 0; i < 5; ++i) {
      const Multiplicities m = multiplicities(a, d(i, i));
      CHECK(m.algebraic == 1);
      CHECK(m.geometric == 1);
    }
  }
}

TEST_CASE("phase normalization and projective angle") {
  CVector v(3);
  v << Complex(0, 2), Complex(0, -2), 1.0;
  const CVector u = phase_normalized(v);
  CHECK(u.norm() == doctest::Approx(1.0));
  CHECK(std::abs(u(0).imag()) < 1e-15);
  CHECK(u(0).real() > 0);
  CHECK(projective_angle(v, Complex(0.3, -2.0) * v) < 1e-15);
  CVector e1 = CVector::Zero(3), e2 = CVector::Zero(3);
  e1(0) = 1;
  e2(1) = 1;
  CHECK(projective_angle(e1, e2) == doctest::Approx(M_PI / 2));
}

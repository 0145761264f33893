#include <doctest.h>

#include <random>

#include "conespec/lp.hpp"

using namespace conespec;

namespace {

// Brute force: the polyhedron {Ax = b, x >= 0} is nonempty iff some basic
// solution (support of size <= rows) is nonnegative.
bool vertex_oracle(const RMatrix& a, const RVector& b) {
  const Index n = a.cols();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<Index> cols;
    for (Index j = 0; j < n; ++j)
      if (mask & (1u << j)) cols.push_back(j);
    if (static_cast<Index>(cols.size()) > a.rows()) continue;
    RMatrix sub(a.rows(), static_cast<Index>(cols.size()));
    for (size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Index>(k)) = a.col(cols[k]);
    if (cols.empty()) {
      if (b.cwiseAbs().maxCoeff() <= 1e-12) return true;
      continue;
    }
    Eigen::ColPivHouseholderQR<RMatrix> qr(sub);
    if (qr.rank() < sub.cols()) continue;
    RVector xs = qr.solve(b);
    RVector resid = sub * xs - b;
    if (resid.cwiseAbs().maxCoeff() > 1e-9 * (1 + b.cwiseAbs().maxCoeff())) continue;
    if (xs.minCoeff() >= -1e-12) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("lp: simple feasible and infeasible systems") {
  RMatrix a(1, 2);
  a << 1, 1;
  RVector b(1);
  b << 1;
  auto x = lp_feasible(a, b, {true, true}, std::nullopt);
  REQUIRE(x);
  CHECK((a * *x - b).norm() < 1e-12);
  CHECK(x->minCoeff() >= 0);

  b << -1;
  CHECK_FALSE(lp_feasible(a, b, {true, true}, std::nullopt));
  // A free variable rescues it.
  auto y = lp_feasible(a, b, {true, false}, std::nullopt);
  REQUIRE(y);
  CHECK((a * *y - b).norm() < 1e-12);
}

TEST_CASE("lp: pointedness of a cone via normalized kernel") {
  // Generators e1, -e1, e2 span a non-pointed cone.
  RMatrix g(2, 3);
  g << 1, -1, 0, 0, 0, 1;
  RVector ones = RVector::Ones(3);
  auto lam = lp_feasible(g, RVector::Zero(2), {true, true, true}, ones);
  REQUIRE(lam);
  CHECK((g * *lam).norm() < 1e-12);
  CHECK(lam->sum() == doctest::Approx(1.0));

  g << 1, 1, 0, 0, 1, 1;
  CHECK_FALSE(lp_feasible(g, RVector::Zero(2), {true, true, true}, ones));
}

TEST_CASE("lp: zero rows and dimension checks") {
  RMatrix a = RMatrix::Zero(2, 2);
  RVector b = RVector::Zero(2);
  CHECK(lp_feasible(a, b, {true, true}, std::nullopt));
  b(1) = 1;
  CHECK_FALSE(lp_feasible(a, b, {true, true}, std::nullopt));
  CHECK_THROWS_AS(lp_feasible(a, RVector::Zero(3), {true, true}, std::nullopt), Error);
  CHECK_THROWS_AS(lp_feasible(a, b, {true}, std::nullopt), Error);
}

TEST_CASE("lp: random systems agree with vertex enumeration") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> small(-3, 3);
  int feasible = 0, infeasible = 0;
  for (int trial = 0; trial < 600; ++trial) {
    const Index m = 1 + trial % 3;
    const Index n = 2 + trial % 5;
    RMatrix a(m, n);
    RVector b(m);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < n; ++j) a(i, j) = small(rng);
      b(i) = small(rng);
    }
    std::vector<bool> nonneg(static_cast<size_t>(n), true);
    const bool expected = vertex_oracle(a, b);
    auto x = lp_feasible(a, b, nonneg, std::nullopt);
    CHECK(x.has_value() == expected);
    if (x) {
      CHECK((a * *x - b).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(x->minCoeff() >= 0);
      ++feasible;
    } else {
      ++infeasible;
    }
  }
  CHECK(feasible > 50);
  CHECK(infeasible > 50);
}

TEST_CASE("lp: degenerate problems terminate") {
  // Many duplicated constraints with zero right-hand side.
  RMatrix a(6, 4);
  a << 1, -1, 0, 0, 1, -1, 0, 0, 0, 1, -1, 0, 0, 1, -1, 0, 0, 0, 1, -1, 0, 0, 1, -1;
  RVector b = RVector::Zero(6);
  auto x = lp_feasible(a, b, {true, true, true, true}, RVector::Ones(4));
  REQUIRE(x);
  CHECK(x->isApprox(RVector::Constant(4, 0.25), 1e-12));
}

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "conespec/cones.hpp"
#include "conespec/lp.hpp"
#include "cone_oracles.hpp"
#include "test_support.hpp"

using namespace conespec;
using namespace std::complex_literals;
using namespace testing_support;

namespace {

constexpr double kPi = std::numbers::pi;

CVector cv(std::initializer_list<Complex> xs) {
  CVector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (Complex x : xs) v(i++) = x;
  return v;
}

RMatrix rm(Index rows, Index cols, std::initializer_list<double> xs) {
  RMatrix m(rows, cols);
  auto it = xs.begin();
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = *it++;
  return m;
}

}  // namespace

TEST_CASE("cones: member examples") {
  const ConeSpec o2 = ConeSpec::orthant(2);
  CHECK(member(o2, cv({1, 0})));
  CHECK_FALSE(member(o2, cv({1, -0.1})));
  CHECK_FALSE(member(o2, cv({1.0 + 0.1i, 1})));

  const ConeSpec c2 = ConeSpec::complexified(o2);
  CHECK(member(c2, cv({1.0 + 1i, 2})));
  CHECK_FALSE(member(c2, cv({1.0 - 1i, 2})));

  const ConeSpec wedge = ConeSpec::polyhedral(RMatrix(), rm(2, 2, {1, 1, 1, -1}));
  CHECK(member(wedge, cv({1, 0.5})));
  CHECK_FALSE(member(wedge, cv({0.4, 1})));
  CHECK(wedge.real_generators().cols() == 2);

  CHECK_THROWS_AS(member(o2, cv({1, 2, 3})), Error);
}

TEST_CASE("cones: construction validation") {
  CHECK_THROWS_AS(ConeSpec::orthant(0), Error);
  // (1,0), (-1,0) is not pointed.
  CHECK_THROWS_AS(ConeSpec::polyhedral(rm(2, 2, {1, -1, 0, 0}), RMatrix()), Error);
  // A generator outside the given facets.
  CHECK_THROWS_AS(ConeSpec::polyhedral(rm(2, 1, {-1, 1}), rm(1, 2, {1, 0})), Error);
  CHECK_THROWS_AS(ConeSpec::complexified(ConeSpec::complexified(ConeSpec::orthant(2))), Error);
  CMatrix t = CMatrix::Identity(2, 2);
  t(1, 1) = 1e-12;
  CHECK_THROWS_AS(ConeSpec::transformed(t, ConeSpec::orthant(2)), Error);
  try {
    ConeSpec::polyhedral(rm(2, 2, {1, -1, 0, 0}), RMatrix());
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidCone);
  }
}

TEST_CASE("cones: generator and facet conversion agree") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + trial % 3;
    RMatrix g(n, n + 2);
    for (Index j = 0; j < g.cols(); ++j) {
      for (Index i = 0; i < n; ++i) g(i, j) = nd(rng);
      g(0, j) = std::abs(g(0, j)) + 0.5;
    }
    const ConeSpec k = ConeSpec::polyhedral(g, RMatrix());
    REQUIRE(k.has_facets());
    const ConeSpec back = ConeSpec::polyhedral(RMatrix(), k.real_facets());
    for (int s = 0; s < 50; ++s) {
      RVector x(n);
      for (Index i = 0; i < n; ++i) x(i) = nd(rng);
      const bool by_lp = lp_feasible(g, x, std::vector<bool>(static_cast<size_t>(g.cols()), true), std::nullopt)
                             .has_value();
      const bool by_facets = member(k, x.cast<Complex>());
      const double margin = (k.real_facets() * x).cwiseAbs().minCoeff() / x.norm();
      if (margin > 1e-6) {
        CHECK(by_lp == by_facets);
        CHECK(member(back, x.cast<Complex>()) == by_facets);
      }
    }
  }
}

TEST_CASE("cones: homogeneity and convexity of membership") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> scale(1e-3, 10.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ConeSpec c3 = ConeSpec::complexified(ConeSpec::orthant(3));
  const CMatrix t = CMatrix::Identity(3, 3) + 0.3 * testing_support::random_complex(3, 3, rng);
  const ConeSpec tr = ConeSpec::transformed(t, c3);
  for (const ConeSpec* k : {&c3, &tr}) {
    const CMatrix& g = k->member_generators();
    for (int trial = 0; trial < 200; ++trial) {
      CVector x = CVector::Zero(3), y = CVector::Zero(3);
      for (Index j = 0; j < g.cols(); ++j) {
        x += unit(rng) * g.col(j);
        y += unit(rng) * g.col(j);
      }
      CHECK(member(*k, x));
      CHECK(member(*k, y));
      CHECK(member(*k, CVector(x + y)));
      const double s = scale(rng);
      CHECK(member(*k, CVector(s * x)) == member(*k, x));
      const CVector z = testing_support::random_complex(3, 1, rng);
      CHECK(member(*k, CVector(s * z)) == member(*k, z));
    }
  }
}

TEST_CASE("cones: interior examples") {
  const ConeSpec c2 = ConeSpec::complexified(ConeSpec::orthant(2));
  CHECK(interior_member(c2, cv({1.0 + 1i, 2.0 + 3i}), 1e-9));
  CHECK_FALSE(interior_member(c2, cv({1, 2.0 + 3i}), 1e-9));

  const ConeSpec t2 = ConeSpec::transformed(2.0 * CMatrix::Identity(2, 2), c2);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    CVector x = testing_support::random_complex(2, 1, rng);
    if (trial % 3 == 0) x = x.cwiseAbs().cast<Complex>() + CVector::Constant(2, 1i * 0.5);
    CHECK(interior_member(t2, x, 1e-9) == interior_member(c2, CVector(x / 2.0), 1e-9));
  }

  // Real cones: the interior is relative to the real subspace.
  const ConeSpec o2 = ConeSpec::orthant(2);
  CHECK(interior_member(o2, cv({1, 2})));
  CHECK_FALSE(interior_member(o2, cv({1, 0})));
  CHECK_FALSE(interior_member(o2, cv({1.0 + 1i, 1})));

  const ConeSpec ray = ConeSpec::polyhedral(rm(2, 1, {1, 0}), RMatrix());
  CHECK_FALSE(ray.solid());
  CHECK_THROWS_AS(interior_member(ray, cv({1, 0})), Error);
}

TEST_CASE("cones: arc_feasible examples") {
  const ArcSet one = arc_feasible({1.0 + 1i});
  REQUIRE(one.arcs.size() == 1);
  CHECK(one.arcs[0].width() == doctest::Approx(kPi / 2));
  CHECK(one.arcs[0].start == doctest::Approx(7 * kPi / 4));
  CHECK(one.contains(0.0));
  CHECK(one.contains(-kPi / 4 + 1e-9));
  CHECK_FALSE(one.contains(-kPi / 4));
  CHECK_FALSE(one.contains(kPi / 4));

  CHECK(arc_feasible({1.0, 1i}).empty());
  CHECK(arc_feasible({}).measure() == doctest::Approx(2 * kPi));
  CHECK(arc_feasible({1.0, 0.0}).empty());
  // Closed arcs touch at a single phase.
  const ArcSet touch = arc_feasible({1.0, 1i}, true);
  REQUIRE(touch.arcs.size() == 1);
  CHECK(touch.arcs[0].width() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(touch.contains(touch.arcs[0].start));
}

TEST_CASE("cones: arc_feasible matches a grid scan") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> count(1, 6);
  std::uniform_real_distribution<double> angle(0, 2 * kPi);
  std::uniform_real_distribution<double> spread(0, 0.6 * kPi);
  const int grid = 10000;
  int disagreements = 0;
  int feasible = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    // Cluster arguments so that roughly half of the sets are feasible.
    const double centre = angle(rng);
    const double width = spread(rng);
    std::uniform_real_distribution<double> local(centre - width, centre + width);
    std::vector<Complex> values;
    for (int k = count(rng); k > 0; --k) values.push_back(std::polar(0.1 + angle(rng), local(rng)));
    const ArcSet arcs = arc_feasible(values);
    const bool scan = grid_feasible(values, grid);
    if (!arcs.empty()) ++feasible;
    if (arcs.empty() != !scan) {
      // Only tolerated when the feasible arc is thinner than the grid spacing.
      const bool thin = !arcs.empty() && arcs.measure() < 2 * 2 * kPi / grid;
      CHECK(thin);
      ++disagreements;
    }
    // Pointwise agreement away from endpoints.
    for (int g = 0; g < grid; g += 97) {
      const double phi = 2 * kPi * g / grid;
      if (distance_to_endpoint(arcs, values, phi) < 2 * kPi / grid) continue;
      bool ok = true;
      for (Complex c : values) {
        const Complex w = std::polar(1.0, phi) * c;
        ok = ok && w.real() > 0 && w.imag() > 0;
      }
      CHECK(arcs.contains(phi) == ok);
    }
  }
  CHECK(disagreements <= 10);
  CHECK(feasible > 200);
  CHECK(feasible < 800);
}

TEST_CASE("cones: circle_align examples") {
  const ConeSpec c2 = ConeSpec::complexified(ConeSpec::orthant(2));
  const CVector xi = cv({1i, 1i});
  const auto z = circle_align(xi, c2, true);
  REQUIRE(z);
  CHECK(std::abs(std::abs(*z) - 1.0) < 1e-14);
  CHECK(member(c2, CVector(*z * xi)));
  // -i is one of the admissible phases.
  const ArcSet arcs = arc_feasible({1i, 1i}, true);
  CHECK(arcs.contains(std::arg(Complex(0, -1)) + 2 * kPi));

  CHECK_FALSE(circle_align(cv({1, -1}), c2, true));
  CHECK_FALSE(circle_align(cv({1, -1}), c2, false));

  // Real cone: alignment is a phase rotation onto a real vector.
  const ConeSpec o2 = ConeSpec::orthant(2);
  const auto zr = circle_align(cv({-1.0 - 1i, -2.0 - 2i}), o2, false);
  REQUIRE(zr);
  CHECK(interior_member(o2, CVector(*zr * cv({-1.0 - 1i, -2.0 - 2i}))));
  CHECK_FALSE(circle_align(cv({1, 1i}), o2, true));
}

TEST_CASE("cones: circle_align agrees with a grid oracle") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> mag(0.1, 2.0), ang(0.01, kPi / 2 - 0.01), any(0, 2 * kPi);
  const ConeSpec c4 = ConeSpec::complexified(ConeSpec::orthant(4));
  for (int trial = 0; trial < 200; ++trial) {
    CVector xi(4);
    const bool quadrant = trial % 2 == 0;
    for (Index i = 0; i < 4; ++i) xi(i) = std::polar(mag(rng), quadrant ? ang(rng) : any(rng));
    std::vector<Complex> values(xi.data(), xi.data() + 4);
    const auto z = circle_align(xi, c4, false);
    CHECK(z.has_value() == grid_feasible(values, 10000));
    if (z) {
      CHECK(interior_member(c4, CVector(*z * xi)));
      if (quadrant) CHECK(std::abs(std::arg(*z)) < kPi / 2);
    }
    if (quadrant) CHECK(z.has_value());
  }
}

TEST_CASE("cones: cone_meets_subspace examples") {
  const ConeSpec o2 = ConeSpec::orthant(2);
  const auto w = cone_meets_subspace(o2, SubspaceBasis::span(cv({1, 1})));
  REQUIRE(w);
  CHECK(projective_angle(*w, cv({1, 1})) < 1e-10);
  CHECK(member(o2, *w));
  CHECK_FALSE(cone_meets_subspace(o2, SubspaceBasis::span(cv({1, -1}))));

  const ConeSpec wedge = ConeSpec::polyhedral(RMatrix(), rm(2, 2, {1, 1, 1, -1}));
  CHECK_FALSE(cone_meets_subspace(wedge, SubspaceBasis::span(cv({0, 1}))));

  const ConeSpec h_only = ConeSpec::polyhedral(RMatrix(), RMatrix::Identity(5, 5));
  CHECK_FALSE(h_only.has_generators());
  CHECK_THROWS_AS(cone_meets_subspace(h_only, SubspaceBasis::whole(5)), Error);
}

TEST_CASE("cones: subspace witnesses on complexified cones") {
  const ConeSpec c3 = ConeSpec::complexified(ConeSpec::orthant(3));
  // span{(1, i, 0)} contains (1, i, 0), which is in P + iP.
  const auto w = cone_meets_subspace(c3, SubspaceBasis::span(cv({1, 1i, 0})));
  REQUIRE(w);
  CHECK(member(c3, *w, 1e-8));
  CHECK(distance_to_subspace(*w, SubspaceBasis::span(cv({1, 1i, 0}))) < 1e-9);
  CHECK_FALSE(cone_meets_subspace(c3, SubspaceBasis::span(cv({1, -1, 0}))));
}

TEST_CASE("cones: norm decay along the projected flow") {
  // Cone x1 >= |x2| misses span{e2}; points approaching the subspace must shrink.
  const ConeSpec wedge = ConeSpec::polyhedral(RMatrix(), rm(2, 2, {1, 1, 1, -1}));
  const SubspaceBasis x0 = SubspaceBasis::span(cv({0, 1}));
  REQUIRE_FALSE(cone_meets_subspace(wedge, x0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  const CMatrix& g = wedge.member_generators();
  double min_ratio = 1e300;
  for (int trial = 0; trial < 2000; ++trial) {
    const CVector x = u(rng) * g.col(0) + u(rng) * g.col(1);
    if (x.norm() == 0) continue;
    min_ratio = std::min(min_ratio, distance_to_subspace(x, x0) / x.norm());
  }
  CHECK(min_ratio > 0.5);
  // Any sequence in the cone with d -> 0 therefore has norm <= d / min_ratio -> 0.
  for (double d : {1e-1, 1e-3, 1e-6}) {
    const CVector x = (g.col(0) + g.col(1)) * (d / distance_to_subspace(CVector(g.col(0) + g.col(1)), x0));
    CHECK(x.norm() <= d / min_ratio + 1e-15);
  }
}

TEST_CASE("cones: restricted cones") {
  const ConeSpec o3 = ConeSpec::orthant(3);
  CMatrix q(3, 2);
  q << 1 / std::sqrt(2.0), 0, 1 / std::sqrt(2.0), 0, 0, 1;
  const ConeSpec r = ConeSpec::restricted(q, o3);
  CHECK(r.dim() == 2);
  CHECK(r.solid());
  CHECK(member(r, cv({1, 1})));
  CHECK_FALSE(member(r, cv({-1, 1})));
  CHECK(interior_member(r, cv({1, 1})));
  CHECK(r.member_generators().cols() == 2);
  // The plane x1 = -x2 meets the orthant only along e3: not solid there.
  CMatrix q2(3, 2);
  q2 << 1 / std::sqrt(2.0), 0, -1 / std::sqrt(2.0), 0, 0, 1;
  const ConeSpec r2 = ConeSpec::restricted(q2, o3);
  CHECK_FALSE(r2.solid());
  CHECK(r2.member_generators().cols() == 1);
  CHECK(cone_meets_subspace(r2, SubspaceBasis::whole(2)));
}

TEST_CASE("cones: projectively_proper examples") {
  const ProperVerdicts o = projectively_proper(ConeSpec::orthant(4), DecompositionSpec::coordinates(4));
  CHECK(o.proper);
  CHECK(o.per_index == std::vector<bool>{true, true, true, true});

  const ConeSpec k = ConeSpec::polyhedral(rm(2, 2, {1, 1, 1, -1}), RMatrix());
  const ProperVerdicts v = projectively_proper(k, DecompositionSpec::coordinates(2));
  CHECK_FALSE(v.proper);
  CHECK(v.per_index == std::vector<bool>{true, false});

  DecompositionSpec bad = DecompositionSpec::coordinates(2);
  bad.subspaces[1] = bad.subspaces[0];
  CHECK_THROWS_AS(projectively_proper(k, bad), Error);
}

TEST_CASE("cones: projectively_proper matches circuit enumeration") {
  std::mt19937_64 rng(42);
  int improper = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const Index n = 2 + trial % 5;
    const RandomPolyhedral inst = random_polyhedral(rng, n);
    const ConeSpec k = ConeSpec::polyhedral(inst.g, RMatrix());
    const ProperVerdicts v = projectively_proper(k, to_decomposition(inst.blocks));
    const std::vector<bool> expected = oracle_proper(inst.g, inst.blocks);
    CHECK(v.per_index == expected);
    if (!v.proper) ++improper;
  }
  CHECK(improper > 20);
}

TEST_CASE("cones: find_proper_subcone examples") {
  const ConeSpec k = ConeSpec::polyhedral(rm(2, 2, {1, 1, 1, -1}), RMatrix());
  DecompositionSpec whole;
  whole.subspaces.push_back(SubspaceBasis::whole(2));
  CHECK(find_proper_subcone(k, whole).indices == std::vector<std::size_t>{0});

  const ProperSubcone p = find_proper_subcone(k, DecompositionSpec::coordinates(2));
  CHECK(p.indices == std::vector<std::size_t>{0});
  CHECK(p.cone.dim() == 1);
  CHECK(projective_angle(p.witness, cv({1, 0})) < 1e-9);
  CHECK(member(p.cone, cv({1})));
  CHECK_FALSE(member(p.cone, cv({-1})));

  const ProperSubcone o = find_proper_subcone(ConeSpec::orthant(4), DecompositionSpec::blocks({1, 2, 1}));
  CHECK(o.indices == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("cones: find_proper_subcone agrees with exhaustive subset search") {
  std::mt19937_64 rng(77);
  int reduced = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + trial % 5;
    const RandomPolyhedral inst = random_polyhedral(rng, n);
    const ConeSpec k = ConeSpec::polyhedral(inst.g, RMatrix());
    const DecompositionSpec d = to_decomposition(inst.blocks);
    const ProperSubcone p = find_proper_subcone(k, d);
    if (p.indices.size() < inst.blocks.size()) ++reduced;

    // Re-check with the library predicates.
    CHECK(projectively_proper(p.cone, p.decomposition).proper);
    CHECK(cone_meets_subspace(k, p.span).has_value());
    CHECK(member(k, p.witness, 1e-8));

    // Independent check of the returned index set.
    RMatrix cols(n, 0);
    std::vector<RMatrix> sub_blocks;
    for (std::size_t i : p.indices) {
      RMatrix grown(n, cols.cols() + inst.blocks[i].cols());
      grown << cols, inst.blocks[i];
      cols = grown;
    }
    const RMatrix q = cols.householderQr().householderQ() * RMatrix::Identity(n, cols.cols());
    for (std::size_t i : p.indices) sub_blocks.push_back(q.transpose() * inst.blocks[i]);
    const RMatrix rays = oracle_section_rays(inst.g, q);
    REQUIRE(rays.cols() > 0);
    for (bool b : oracle_proper(rays, sub_blocks)) CHECK(b);

    // Some subset is always admissible; the full set is chosen exactly when it is proper.
    const std::vector<bool> full = oracle_proper(inst.g, inst.blocks);
    const bool all_proper = std::all_of(full.begin(), full.end(), [](bool b) { return b; });
    CHECK(all_proper == (p.indices.size() == inst.blocks.size()));
  }
  CHECK(reduced > 10);
}

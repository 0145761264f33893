#include "conespec/cones.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "conespec/lp.hpp"

namespace conespec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHalfPi = 0.5 * std::numbers::pi;
constexpr std::size_t kExtremeRaySubsetCap = 400000;

double wrap_angle(double phi) {
  double r = std::fmod(phi, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

template <class M>
void normalize_rows(M& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    const double nr = m.row(i).norm();
    if (nr > 0) m.row(i) /= nr;
  }
}

template <class M>
void normalize_cols(M& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    const double nc = m.col(j).norm();
    if (nc > 0) m.col(j) /= nc;
  }
}

// Row basis of m (scaled by singular values), dropping directions below
// rel_tol * max(1, sigma_max). The null space is preserved up to that level.
RMatrix compress_rows(const RMatrix& m, double rel_tol = 1e-10) {
  if (m.rows() == 0 || m.cols() == 0) return RMatrix(0, m.cols());
  Eigen::BDCSVD<RMatrix> svd(m, Eigen::ComputeThinV);
  const RVector& s = svd.singularValues();
  const double cut = rel_tol * std::max(1.0, s.size() ? s(0) : 0.0);
  Index r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  return s.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
}

Index numerical_rank(const RMatrix& m, double rel_tol = 1e-10) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<RMatrix> svd(m);
  const RVector& s = svd.singularValues();
  Index r = 0;
  while (r < s.size() && s(r) > rel_tol * std::max(1.0, s(0))) ++r;
  return r;
}

// Calls f(subset) for every k-subset of {0..m-1} in lexicographic order.
template <class F>
void for_each_subset(Index m, Index k, F&& f) {
  if (k > m || k < 0) return;
  std::vector<Index> idx(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    f(idx);
    Index i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

std::size_t binomial(Index m, Index k) {
  if (k < 0 || k > m) return 0;
  double r = 1.0;
  for (Index i = 1; i <= k; ++i) r = r * static_cast<double>(m - k + i) / static_cast<double>(i);
  return r > 1e18 ? static_cast<std::size_t>(1e18) : static_cast<std::size_t>(std::llround(r));
}

// Adds unit vector v to cols unless a positive multiple is already present.
template <class V>
void push_unique_direction(std::vector<V>& cols, V v, double tol = 1e-9) {
  v /= v.norm();
  for (const auto& c : cols)
    if ((c - v).norm() <= tol) return;
  cols.push_back(std::move(v));
}

// Extreme rays of { x : H x >= 0 } (H must have full column rank).
RMatrix rays_from_facets(const RMatrix& h) {
  const Index n = h.cols();
  if (numerical_rank(h) < n) throw Error(ErrorCode::InvalidCone, "polyhedral: facets do not define a pointed cone");
  RMatrix hn = h;
  normalize_rows(hn);
  std::vector<RVector> rays;
  for_each_subset(hn.rows(), n - 1, [&](const std::vector<Index>& s) {
    RMatrix sub(static_cast<Index>(s.size()), n);
    for (std::size_t k = 0; k < s.size(); ++k) sub.row(static_cast<Index>(k)) = hn.row(s[k]);
    RVector d;
    if (s.empty()) {
      d = RVector::Ones(1);
    } else {
      Eigen::JacobiSVD<RMatrix> svd(sub, Eigen::ComputeFullV);
      if (numerical_rank(sub) != n - 1) return;
      d = svd.matrixV().col(n - 1);
    }
    for (double sign : {1.0, -1.0}) {
      const RVector v = sign * d;
      if ((hn * v).minCoeff() >= -1e-10) push_unique_direction(rays, v);
    }
  });
  if (rays.empty()) throw Error(ErrorCode::InvalidCone, "polyhedral: facets describe the zero cone");
  RMatrix g(n, static_cast<Index>(rays.size()));
  for (std::size_t k = 0; k < rays.size(); ++k) g.col(static_cast<Index>(k)) = rays[k];
  return g;
}

// Facet rows of cone(G) for a pointed generator set. Equalities of a
// lower-dimensional cone appear as pairs of opposite rows.
RMatrix facets_from_rays(const RMatrix& g) {
  const Index n = g.rows();
  Eigen::JacobiSVD<RMatrix> svd(g, Eigen::ComputeFullU);
  const Index r = numerical_rank(g);
  const RMatrix u = svd.matrixU().leftCols(r);
  std::vector<RVector> rows;
  for (Index k = r; k < n; ++k) {
    rows.push_back(svd.matrixU().col(k));
    rows.push_back(-svd.matrixU().col(k));
  }
  const RMatrix y = u.transpose() * g;
  RMatrix yn = y;
  normalize_cols(yn);
  for_each_subset(yn.cols(), r - 1, [&](const std::vector<Index>& s) {
    RVector a;
    if (s.empty()) {
      a = RVector::Ones(1);
    } else {
      RMatrix sub(r, static_cast<Index>(s.size()));
      for (std::size_t k = 0; k < s.size(); ++k) sub.col(static_cast<Index>(k)) = yn.col(s[k]);
      if (numerical_rank(sub) != r - 1) return;
      Eigen::JacobiSVD<RMatrix> sv(sub.transpose(), Eigen::ComputeFullV);
      a = sv.matrixV().col(r - 1);
    }
    for (double sign : {1.0, -1.0}) {
      const RVector v = sign * a;
      if ((v.transpose() * yn).minCoeff() >= -1e-10) push_unique_direction(rows, RVector(u * v));
    }
  });
  RMatrix h(static_cast<Index>(rows.size()), n);
  for (std::size_t k = 0; k < rows.size(); ++k) h.row(static_cast<Index>(k)) = rows[k].transpose();
  return h;
}

}  // namespace

const char* to_string(ConeKind kind) {
  switch (kind) {
    case ConeKind::Orthant: return "orthant";
    case ConeKind::PolyhedralReal: return "polyhedral";
    case ConeKind::Complexified: return "complexified";
    case ConeKind::Transformed: return "transformed";
    case ConeKind::Restricted: return "restricted";
  }
  return "unknown";
}

struct ConeSpec::Node {
  ConeKind kind = ConeKind::Orthant;
  Index dim = 0;
  bool solid = false;
  bool real_type = true;
  std::optional<ConeSpec> base;
  CMatrix transform;
  CMatrix transform_inverse;
  RMatrix gens;
  RMatrix facets;
  std::optional<FacetForm> form;
  std::optional<ConicRepresentation> conic;

  mutable std::once_flag members_once;
  mutable std::optional<CMatrix> members;
};

ConeSpec ConeSpec::orthant(Index n) {
  if (n <= 0) throw Error(ErrorCode::InvalidCone, "orthant: dimension must be positive");
  auto node = std::make_shared<Node>();
  node->kind = ConeKind::Orthant;
  node->dim = n;
  node->solid = true;
  node->real_type = true;
  node->gens = RMatrix::Identity(n, n);
  node->facets = RMatrix::Identity(n, n);
  node->form = FacetForm{false, CMatrix::Identity(n, n), CMatrix::Identity(n, n)};
  node->conic = ConicRepresentation{CMatrix::Identity(n, n), RMatrix(0, n)};
  return ConeSpec(std::move(node));
}

ConeSpec ConeSpec::polyhedral(const RMatrix& generators, const RMatrix& facets, const Tolerances& tol) {
  const bool have_g = generators.cols() > 0;
  const bool have_h = facets.rows() > 0;
  if (!have_g && !have_h) throw Error(ErrorCode::InvalidCone, "polyhedral: needs generators or facets");
  const Index n = have_g ? generators.rows() : facets.cols();
  if (n <= 0) throw Error(ErrorCode::InvalidCone, "polyhedral: dimension must be positive");
  if (have_g && have_h && facets.cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "polyhedral: generators and facets disagree on dimension");
  if ((have_g && !generators.allFinite()) || (have_h && !facets.allFinite()))
    throw Error(ErrorCode::InvalidCone, "polyhedral: non-finite data");

  auto node = std::make_shared<Node>();
  node->kind = ConeKind::PolyhedralReal;
  node->dim = n;
  node->real_type = true;
  node->gens = have_g ? generators : (n <= 4 ? rays_from_facets(facets) : RMatrix(n, 0));
  if (have_g)
    for (Index j = 0; j < generators.cols(); ++j)
      if (generators.col(j).norm() == 0.0) throw Error(ErrorCode::InvalidCone, "polyhedral: zero generator");

  if (node->gens.cols() > 0) {
    RMatrix g = node->gens;
    normalize_cols(g);
    if (lp_feasible(g, RVector::Zero(n), std::vector<bool>(static_cast<std::size_t>(g.cols()), true),
                    RVector::Ones(g.cols()), tol.tol_lp)) {
      throw Error(ErrorCode::InvalidCone, "polyhedral: generators do not span a pointed cone");
    }
    node->conic = ConicRepresentation{g.cast<Complex>(), RMatrix(0, g.cols())};
  } else if (numerical_rank(facets) < n) {
    throw Error(ErrorCode::InvalidCone, "polyhedral: facets do not define a pointed cone");
  }

  node->facets = have_h ? facets : (n <= 4 ? facets_from_rays(node->gens) : RMatrix(0, n));
  if (node->facets.rows() > 0) {
    RMatrix h = node->facets;
    normalize_rows(h);
    if (node->gens.cols() > 0) {
      RMatrix g = node->gens;
      normalize_cols(g);
      if ((h * g).minCoeff() < -tol.tol_cone * 10)
        throw Error(ErrorCode::InvalidCone, "polyhedral: a generator violates a facet");
    }
    node->form = FacetForm{false, h.cast<Complex>(), CMatrix::Identity(n, n)};
  }

  if (node->gens.cols() > 0) {
    node->solid = numerical_rank(node->gens) == n;
  } else {
    node->solid = has_interior(*node->form, tol.tol_lp);
  }
  return ConeSpec(std::move(node));
}

ConeSpec ConeSpec::complexified(const ConeSpec& base) {
  if (base.kind() != ConeKind::Orthant && base.kind() != ConeKind::PolyhedralReal)
    throw Error(ErrorCode::InvalidCone, "complexified: base must be a real orthant or polyhedral cone");
  auto node = std::make_shared<Node>();
  node->kind = ConeKind::Complexified;
  node->dim = base.dim();
  node->solid = base.solid();
  node->real_type = false;
  node->base = base;
  if (base.has_facets()) node->form = FacetForm{true, base.facet_form().rows, CMatrix(0, 0)};
  if (base.has_generators()) {
    const CMatrix& g = base.conic().generators;
    CMatrix gg(g.rows(), 2 * g.cols());
    gg << g, Complex(0, 1) * g;
    node->conic = ConicRepresentation{gg, RMatrix(0, gg.cols())};
  }
  return ConeSpec(std::move(node));
}

ConeSpec ConeSpec::transformed(const CMatrix& t, const ConeSpec& base, const Tolerances& tol) {
  require_square(t, "transformed");
  require_dim(t.rows(), base.dim(), "transformed");
  if (!t.allFinite()) throw Error(ErrorCode::InvalidCone, "transformed: non-finite transform");
  Eigen::JacobiSVD<CMatrix> svd(t);
  const RVector& s = svd.singularValues();
  if (s(s.size() - 1) <= 0.0 || s(0) / s(s.size() - 1) > tol.cond_cap)
    throw Error(ErrorCode::InvalidCone, "transformed: transform is singular or too ill-conditioned");

  auto node = std::make_shared<Node>();
  node->kind = ConeKind::Transformed;
  node->dim = base.dim();
  node->solid = base.solid();
  node->real_type = base.real_type();
  node->base = base;
  node->transform = t;
  node->transform_inverse = t.partialPivLu().inverse();
  if (base.has_facets()) {
    const FacetForm& f = base.facet_form();
    CMatrix rows = f.rows * node->transform_inverse;
    normalize_rows(rows);
    CMatrix reality = f.complex_type ? CMatrix(0, 0) : CMatrix(f.reality * node->transform_inverse);
    node->form = FacetForm{f.complex_type, rows, reality};
  }
  if (base.has_generators()) {
    const ConicRepresentation& c = base.conic();
    CMatrix g = t * c.generators;
    // Rescaling a column rescales its multiplier; keep constraints consistent.
    RMatrix constraints = c.constraints;
    for (Index j = 0; j < g.cols(); ++j) {
      const double nc = g.col(j).norm();
      if (nc > 0) {
        g.col(j) /= nc;
        if (constraints.rows() > 0) constraints.col(j) /= nc;
      }
    }
    node->conic = ConicRepresentation{g, constraints};
  }
  return ConeSpec(std::move(node));
}

ConeSpec ConeSpec::restricted(const CMatrix& q, const ConeSpec& base, const Tolerances& tol) {
  require_dim(q.rows(), base.dim(), "restricted");
  if (q.cols() == 0) throw Error(ErrorCode::InvalidCone, "restricted: empty subspace");
  if ((q.adjoint() * q - CMatrix::Identity(q.cols(), q.cols())).norm() > 1e-8)
    throw Error(ErrorCode::InvalidArgument, "restricted: basis must have orthonormal columns");

  auto node = std::make_shared<Node>();
  node->kind = ConeKind::Restricted;
  node->dim = q.cols();
  node->real_type = base.real_type();
  node->base = base;
  node->transform = q;
  node->transform_inverse = q.adjoint();
  if (base.has_facets()) {
    const FacetForm& f = base.facet_form();
    // Facets that vanish on range(Q) constrain nothing there and are dropped.
    const CMatrix full = f.rows * q;
    std::vector<Index> keep;
    for (Index i = 0; i < full.rows(); ++i)
      if (full.row(i).norm() >= 1e-12) keep.push_back(i);
    CMatrix rows(static_cast<Index>(keep.size()), q.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) rows.row(static_cast<Index>(i)) = full.row(keep[i]);
    normalize_rows(rows);
    CMatrix reality = f.complex_type ? CMatrix(0, 0) : CMatrix(f.reality * q);
    node->form = FacetForm{f.complex_type, rows, reality};
  }
  if (base.has_generators()) {
    const ConicRepresentation& c = base.conic();
    const CMatrix outside = c.generators - q * (q.adjoint() * c.generators);
    RMatrix stacked(c.constraints.rows() + 2 * outside.rows(), c.generators.cols());
    stacked << c.constraints, realify(outside);
    node->conic = ConicRepresentation{q.adjoint() * c.generators, compress_rows(stacked)};
  }
  node->solid = node->form ? has_interior(*node->form, tol.tol_lp) : false;
  return ConeSpec(std::move(node));
}

ConeKind ConeSpec::kind() const { return node_->kind; }
Index ConeSpec::dim() const { return node_->dim; }
bool ConeSpec::solid() const { return node_->solid; }
bool ConeSpec::real_type() const { return node_->real_type; }

const ConeSpec& ConeSpec::base() const {
  if (!node_->base) throw Error(ErrorCode::InvalidArgument, "cone has no base");
  return *node_->base;
}

const CMatrix& ConeSpec::transform() const { return node_->transform; }
const CMatrix& ConeSpec::transform_inverse() const { return node_->transform_inverse; }
const RMatrix& ConeSpec::real_generators() const { return node_->gens; }
const RMatrix& ConeSpec::real_facets() const { return node_->facets; }
bool ConeSpec::has_facets() const { return node_->form.has_value(); }
bool ConeSpec::has_generators() const { return node_->conic.has_value(); }

const FacetForm& ConeSpec::facet_form() const {
  if (!node_->form) throw Error(ErrorCode::RepresentationMissing, "cone has no facet description");
  return *node_->form;
}

const ConicRepresentation& ConeSpec::conic() const {
  if (!node_->conic) throw Error(ErrorCode::RepresentationMissing, "cone has no generator description");
  return *node_->conic;
}

const CMatrix& ConeSpec::member_generators() const {
  const ConicRepresentation& rep = conic();
  if (!rep.constrained()) return rep.generators;
  std::call_once(node_->members_once, [&] {
    // Extreme rays of { lam >= 0, C lam = 0 } have minimal support.
    const Index m = rep.size();
    const Index r = numerical_rank(rep.constraints);
    std::size_t work = 0;
    for (Index s = 1; s <= std::min(m, r + 1); ++s) work += binomial(m, s);
    if (work > kExtremeRaySubsetCap) return;
    std::vector<CVector> rays;
    for (Index s = 1; s <= std::min(m, r + 1); ++s) {
      for_each_subset(m, s, [&](const std::vector<Index>& sub) {
        RMatrix cs(rep.constraints.rows(), s);
        for (Index k = 0; k < s; ++k) cs.col(k) = rep.constraints.col(sub[static_cast<std::size_t>(k)]);
        RVector lam;
        if (cs.rows() == 0) {
          if (s != 1) return;
          lam = RVector::Ones(1);
        } else {
          Eigen::JacobiSVD<RMatrix> svd(cs, Eigen::ComputeFullV);
          if (numerical_rank(cs) != s - 1) return;
          lam = svd.matrixV().col(s - 1);
        }
        if (lam.sum() < 0) lam = -lam;
        if (lam.minCoeff() <= 1e-12 * lam.cwiseAbs().maxCoeff()) return;
        CVector y = CVector::Zero(rep.generators.rows());
        for (Index k = 0; k < s; ++k) y += lam(k) * rep.generators.col(sub[static_cast<std::size_t>(k)]);
        if (y.norm() <= 1e-12) return;
        push_unique_direction(rays, y);
      });
    }
    CMatrix out(rep.generators.rows(), static_cast<Index>(rays.size()));
    for (std::size_t k = 0; k < rays.size(); ++k) out.col(static_cast<Index>(k)) = rays[k];
    node_->members = out;
  });
  if (!node_->members) throw Error(ErrorCode::RepresentationMissing, "extreme-ray enumeration exceeds the size cap");
  return *node_->members;
}

double violation(const ConeSpec& k, const CVector& x) {
  require_dim(x.size(), k.dim(), "violation");
  const double nx = x.norm();
  if (nx == 0.0) return 0.0;
  if (!k.has_facets()) return member(k, x, 1e-9) ? 0.0 : 1.0;
  const FacetForm& f = k.facet_form();
  const CVector c = f.rows * x;
  double v = 0.0;
  for (Index i = 0; i < c.size(); ++i) {
    v = std::max(v, -c(i).real());
    if (f.complex_type) v = std::max(v, -c(i).imag());
  }
  v /= nx;
  if (!f.complex_type) {
    const CVector u = f.reality * x;
    const double nu = u.norm();
    if (nu > 0) v = std::max(v, u.imag().cwiseAbs().maxCoeff() / nu);
  }
  return v;
}

bool member(const ConeSpec& k, const CVector& x, double tol) {
  require_dim(x.size(), k.dim(), "member");
  const double nx = x.norm();
  if (nx == 0.0) return true;
  if (k.has_facets()) return violation(k, x) <= tol;
  switch (k.kind()) {
    case ConeKind::PolyhedralReal: {
      if (x.imag().cwiseAbs().maxCoeff() > tol * nx) return false;
      const RMatrix& g = k.real_generators();
      return lp_feasible(g, x.real(), std::vector<bool>(static_cast<std::size_t>(g.cols()), true), std::nullopt,
                         tol)
          .has_value();
    }
    case ConeKind::Complexified:
      return member(k.base(), x.real().cast<Complex>(), tol) && member(k.base(), x.imag().cast<Complex>(), tol);
    case ConeKind::Transformed:
      return member(k.base(), k.transform_inverse() * x, tol);
    case ConeKind::Restricted:
      return member(k.base(), k.transform() * x, tol);
    case ConeKind::Orthant:
      break;
  }
  throw Error(ErrorCode::RepresentationMissing, "member: no usable representation");
}

bool interior_member(const ConeSpec& k, const CVector& x, double margin, double tol) {
  require_dim(x.size(), k.dim(), "interior_member");
  if (!k.solid() || !k.has_facets()) throw Error(ErrorCode::NotSolid, "interior_member: cone has no usable interior");
  const double nx = x.norm();
  if (nx == 0.0) return false;
  const FacetForm& f = k.facet_form();
  const CVector c = f.rows * x;
  const double bound = margin * nx;
  for (Index i = 0; i < c.size(); ++i) {
    if (!(c(i).real() > bound)) return false;
    if (f.complex_type && !(c(i).imag() > bound)) return false;
  }
  if (!f.complex_type) {
    const CVector u = f.reality * x;
    if (u.imag().cwiseAbs().maxCoeff() > tol * u.norm()) return false;
  }
  return true;
}

bool has_interior(const FacetForm& form, double tol_lp) {
  const CMatrix& l = form.rows;
  const Index m = l.rows();
  const Index n = l.cols();
  for (Index i = 0; i < m; ++i)
    if (l.row(i).norm() == 0.0) return false;
  if (m == 0) return form.complex_type ? true : n > 0;
  // Variables: y = a + ib (free), then one slack per inequality.
  const Index per = form.complex_type ? 2 : 1;
  const Index reality_rows = form.complex_type ? 0 : form.reality.rows();
  const Index nvar = 2 * n + per * m;
  RMatrix a = RMatrix::Zero(per * m + reality_rows, nvar);
  RVector b = RVector::Zero(a.rows());
  for (Index i = 0; i < m; ++i) {
    a.block(i, 0, 1, n) = l.row(i).real();
    a.block(i, n, 1, n) = -l.row(i).imag();
    a(i, 2 * n + i) = -1.0;
    b(i) = 1.0;
    if (form.complex_type) {
      a.block(m + i, 0, 1, n) = l.row(i).imag();
      a.block(m + i, n, 1, n) = l.row(i).real();
      a(m + i, 2 * n + m + i) = -1.0;
      b(m + i) = 1.0;
    }
  }
  for (Index i = 0; i < reality_rows; ++i) {
    a.block(per * m + i, 0, 1, n) = form.reality.row(i).imag();
    a.block(per * m + i, n, 1, n) = form.reality.row(i).real();
  }
  std::vector<bool> nonneg(static_cast<std::size_t>(nvar), true);
  for (Index j = 0; j < 2 * n; ++j) nonneg[static_cast<std::size_t>(j)] = false;
  return lp_feasible(a, b, nonneg, std::nullopt, tol_lp).has_value();
}

double Arc::midpoint() const { return wrap_angle(start + 0.5 * width()); }

bool Arc::contains(double phi) const {
  if (width() >= kTwoPi) return true;
  const double d = wrap_angle(phi - start);
  if (d == 0.0) return !start_open;
  if (d < width()) return true;
  if (d == width()) return !end_open;
  return false;
}

double ArcSet::measure() const {
  double m = 0.0;
  for (const Arc& a : arcs) m += a.width();
  return m;
}

bool ArcSet::contains(double phi) const {
  return std::any_of(arcs.begin(), arcs.end(), [&](const Arc& a) { return a.contains(phi); });
}

ArcSet ArcSet::full_circle() { return ArcSet{{Arc{0.0, kTwoPi, false, true}}}; }

ArcSet arc_feasible(const std::vector<Complex>& values, bool closed, double zero_tol) {
  bool constrained = false;
  double lo = 0.0, hi = 0.0;
  for (const Complex& c : values) {
    if (std::abs(c) <= zero_tol) {
      if (closed) continue;
      return ArcSet{};
    }
    double a = wrap_angle(-std::arg(c));
    if (!constrained) {
      lo = a;
      hi = a + kHalfPi;
      constrained = true;
      continue;
    }
    while (a < lo - std::numbers::pi) a += kTwoPi;
    while (a >= lo + std::numbers::pi) a -= kTwoPi;
    lo = std::max(lo, a);
    hi = std::min(hi, a + kHalfPi);
    if (closed ? hi < lo : hi <= lo) return ArcSet{};
  }
  if (!constrained) return ArcSet::full_circle();
  const double start = wrap_angle(lo);
  return ArcSet{{Arc{start, start + (hi - lo), !closed, !closed}}};
}

std::optional<Complex> circle_align(const CVector& xi, const ConeSpec& k, bool closed, const Tolerances& tol) {
  require_dim(xi.size(), k.dim(), "circle_align");
  const double nx = xi.norm();
  if (nx == 0.0) return std::nullopt;
  const FacetForm& f = k.facet_form();
  if (!closed && !k.solid()) return std::nullopt;
  const CVector c = f.rows * xi;
  const CVector u = f.complex_type ? CVector() : CVector(f.reality * xi);

  auto accepts = [&](Complex z) {
    if (!f.complex_type) {
      const double nu = u.norm();
      if (nu == 0.0 || (z * u).imag().cwiseAbs().maxCoeff() > tol.tol_cone * nu) return false;
    }
    const double bound = closed ? -tol.tol_cone * nx : tol.tol_cone * nx;
    for (Index i = 0; i < c.size(); ++i) {
      const Complex w = z * c(i);
      if (closed ? w.real() < bound : !(w.real() > bound)) return false;
      if (f.complex_type && (closed ? w.imag() < bound : !(w.imag() > bound))) return false;
    }
    return true;
  };

  if (f.complex_type) {
    std::vector<Complex> values(c.data(), c.data() + c.size());
    const ArcSet arcs = arc_feasible(values, closed, closed ? tol.tol_cone * nx : 0.0);
    if (!arcs.empty() && (closed || arcs.arcs.front().width() > 2 * tol.arc_margin)) {
      const Complex z = std::polar(1.0, arcs.arcs.front().midpoint());
      if (accepts(z)) return z;
    }
  } else {
    Index j = 0;
    u.cwiseAbs().maxCoeff(&j);
    if (std::abs(u(j)) > 0) {
      const Complex phase = std::polar(1.0, -std::arg(u(j)));
      for (double sign : {1.0, -1.0})
        if (accepts(sign * phase)) return sign * phase;
    }
  }

  for (int g = 0; g < tol.arc_grid; ++g) {
    const Complex z = std::polar(1.0, kTwoPi * g / tol.arc_grid);
    if (accepts(z)) return z;
  }
  return std::nullopt;
}

std::optional<RVector> conic_lp(const ConicRepresentation& rep, const RMatrix& extra_rows, double tol_lp) {
  const Index m = rep.size();
  RMatrix rows(rep.constraints.rows() + extra_rows.rows(), m);
  rows << rep.constraints, extra_rows;
  const RMatrix eq = compress_rows(rows);
  return lp_feasible(eq, RVector::Zero(eq.rows()), std::vector<bool>(static_cast<std::size_t>(m), true),
                     RVector::Ones(m), tol_lp);
}

std::optional<CVector> cone_meets_subspace(const ConeSpec& k, const SubspaceBasis& m, const Tolerances& tol) {
  require_dim(m.ambient_dim, k.dim(), "cone_meets_subspace");
  const ConicRepresentation& rep = k.conic();
  if (m.empty()) return std::nullopt;
  const CMatrix outside = rep.generators - m.basis * (m.basis.adjoint() * rep.generators);
  const auto lam = conic_lp(rep, realify(outside), tol.tol_lp);
  if (!lam) return std::nullopt;
  CVector w = rep.generators * lam->cast<Complex>();
  if (w.norm() <= 1e-12) throw Error(ErrorCode::NumericalFailure, "cone_meets_subspace: degenerate witness");
  w /= w.norm();
  // Remove the residual component outside M left by the LP tolerance.
  w = m.basis * (m.basis.adjoint() * w);
  return w / w.norm();
}

Index DecompositionSpec::ambient_dim() const { return subspaces.empty() ? 0 : subspaces.front().ambient_dim; }

void DecompositionSpec::validate(double rank_tol) const {
  if (subspaces.empty()) throw Error(ErrorCode::InvalidArgument, "decomposition: no subspaces");
  const Index n = ambient_dim();
  Index total = 0;
  for (const auto& s : subspaces) {
    if (s.ambient_dim != n) throw Error(ErrorCode::DimensionMismatch, "decomposition: ambient dimensions differ");
    if (s.empty()) throw Error(ErrorCode::InvalidArgument, "decomposition: empty summand");
    total += s.dim();
  }
  if (total != n) throw Error(ErrorCode::InvalidArgument, "decomposition: dimensions do not sum to the ambient one");
  CMatrix b(n, n);
  Index off = 0;
  for (const auto& s : subspaces) {
    b.middleCols(off, s.dim()) = s.basis;
    off += s.dim();
  }
  Eigen::JacobiSVD<CMatrix> svd(b);
  if (svd.singularValues()(n - 1) <= rank_tol) throw Error(ErrorCode::InvalidArgument, "decomposition: not a direct sum");
}

DecompositionSpec DecompositionSpec::blocks(const std::vector<Index>& sizes) {
  Index n = 0;
  for (Index s : sizes) n += s;
  DecompositionSpec d;
  Index off = 0;
  for (Index s : sizes) {
    CMatrix q = CMatrix::Zero(n, s);
    q.middleRows(off, s).setIdentity();
    d.subspaces.push_back(SubspaceBasis::from_orthonormal(q));
    off += s;
  }
  return d;
}

DecompositionSpec DecompositionSpec::coordinates(Index n) { return blocks(std::vector<Index>(static_cast<std::size_t>(n), 1)); }

ProperVerdicts projectively_proper(const ConeSpec& k, const DecompositionSpec& d, const Tolerances& tol) {
  d.validate();
  require_dim(d.ambient_dim(), k.dim(), "projectively_proper");
  const ConicRepresentation& rep = k.conic();
  const Index n = k.dim();
  const Index m = rep.size();
  CMatrix b(n, n);
  Index off = 0;
  for (const auto& s : d.subspaces) {
    b.middleCols(off, s.dim()) = s.basis;
    off += s.dim();
  }
  const CMatrix coords = b.partialPivLu().solve(rep.generators);

  ProperVerdicts out;
  off = 0;
  for (const auto& s : d.subspaces) {
    const CMatrix proj = coords.middleRows(off, s.dim());
    off += s.dim();
    const RMatrix eq = compress_rows(realify(proj));
    bool pointed = true;
    if (eq.rows() == 0) {
      pointed = true;  // the projection is {0}
    } else if (!rep.constrained()) {
      // Generators with vanishing projection do not contribute to the projected cone.
      std::vector<Index> live;
      for (Index j = 0; j < m; ++j)
        if (proj.col(j).norm() > 1e-10) live.push_back(j);
      RMatrix sub(eq.rows(), static_cast<Index>(live.size()));
      for (std::size_t j = 0; j < live.size(); ++j) sub.col(static_cast<Index>(j)) = eq.col(live[j]);
      pointed = live.empty() || !lp_feasible(sub, RVector::Zero(sub.rows()),
                                             std::vector<bool>(live.size(), true),
                                             RVector::Ones(static_cast<Index>(live.size())), tol.tol_lp);
    } else {
      // Pi P meets -Pi P outside 0 iff lam, mu feasible with L(lam + mu) = 0 and L lam != 0.
      const RMatrix& c = rep.constraints;
      for (Index j = 0; j < eq.rows() && pointed; ++j) {
        RMatrix a = RMatrix::Zero(2 * c.rows() + eq.rows() + 1, 2 * m);
        a.block(0, 0, c.rows(), m) = c;
        a.block(c.rows(), m, c.rows(), m) = c;
        a.block(2 * c.rows(), 0, eq.rows(), m) = eq;
        a.block(2 * c.rows(), m, eq.rows(), m) = eq;
        a.block(2 * c.rows() + eq.rows(), 0, 1, m) = eq.row(j) / eq.row(j).norm();
        RVector rhs = RVector::Zero(a.rows());
        rhs(a.rows() - 1) = 1.0;
        if (lp_feasible(a, rhs, std::vector<bool>(static_cast<std::size_t>(2 * m), true), std::nullopt, tol.tol_lp))
          pointed = false;
      }
    }
    out.per_index.push_back(pointed);
    out.proper = out.proper && pointed;
  }
  return out;
}

ProperSubcone find_proper_subcone(const ConeSpec& k, const DecompositionSpec& d, const Tolerances& tol) {
  d.validate();
  require_dim(d.ambient_dim(), k.dim(), "find_proper_subcone");
  std::vector<std::size_t> kept(d.size());
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = i;

  while (true) {
    ProperSubcone out{kept, SubspaceBasis::whole(k.dim()), k, {}, {}};
    if (kept.size() == d.size()) {
      out.decomposition = d;
    } else {
      CMatrix cols(k.dim(), 0);
      for (std::size_t i : kept) {
        CMatrix grown(k.dim(), cols.cols() + d.subspaces[i].dim());
        grown << cols, d.subspaces[i].basis;
        cols = grown;
      }
      out.span = SubspaceBasis::span(cols);
      out.cone = ConeSpec::restricted(out.span.basis, k, tol);
      for (std::size_t i : kept)
        out.decomposition.subspaces.push_back(SubspaceBasis::span(out.span.basis.adjoint() * d.subspaces[i].basis));
    }
    const auto witness = cone_meets_subspace(k, out.span, tol);
    if (!witness) throw Error(ErrorCode::ProofMismatch, "find_proper_subcone: intersection became trivial");
    out.witness = *witness;

    const ProperVerdicts v = projectively_proper(out.cone, out.decomposition, tol);
    if (v.proper) return out;
    std::size_t drop = 0;
    while (v.per_index[drop]) ++drop;
    kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(drop));
    if (kept.empty()) throw Error(ErrorCode::ProofMismatch, "find_proper_subcone: every summand dropped");
  }
}

}  // namespace conespec

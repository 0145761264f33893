#include "conespec/positivity.hpp"

#include <algorithm>
#include <sstream>

#include "conespec/random.hpp"

namespace conespec {

namespace {

constexpr std::size_t kMaxWitnesses = 32;
constexpr Index kMaxMidpointGenerators = 64;

// Describes why y fails membership: worst facet or the reality constraint.
std::string failure_reason(const ConeSpec& k, const CVector& y) {
  if (!k.has_facets()) return "outside cone";
  const FacetForm& f = k.facet_form();
  const CVector c = f.rows * y;
  Index worst = -1;
  double worst_value = 0.0;
  bool imag_part = false;
  for (Index i = 0; i < c.size(); ++i) {
    if (c(i).real() < worst_value) {
      worst_value = c(i).real();
      worst = i;
      imag_part = false;
    }
    if (f.complex_type && c(i).imag() < worst_value) {
      worst_value = c(i).imag();
      worst = i;
      imag_part = true;
    }
  }
  std::ostringstream os;
  if (worst < 0) {
    os << "reality constraint";
  } else {
    os << "facet " << worst << (imag_part ? " (imaginary part)" : "") << " value " << worst_value;
  }
  return os.str();
}

bool theorem_backed(const CMatrix& a, const ConeSpec& k, const Tolerances& tol) {
  if (!k.solid() || !k.has_facets()) return false;
  switch (k.kind()) {
    case ConeKind::Transformed:
      return theorem_backed(k.transform_inverse() * a * k.transform(), k.base(), tol);
    case ConeKind::Complexified: {
      // Complexification of a strongly positive real operator.
      const ConeSpec& p = k.base();
      // Imaginary parts at rounding level (e.g. after a similarity round trip) are tolerated.
      const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
      if (a.imag().cwiseAbs().maxCoeff() <= tol.tol_cone * scale && p.solid() && p.has_generators()) {
        const CMatrix b = a.real().cast<Complex>();
        const CMatrix& g = p.member_generators();
        bool all = true;
        for (Index j = 0; j < g.cols() && all; ++j) all = interior_member(p, b * g.col(j), tol.tol_cone, tol.tol_cone);
        if (all) return true;
      }
      break;
    }
    default:
      break;
  }
  // Every generator mapped into the interior: A x in int K for all x, so z = 1 works.
  if (!k.has_generators()) return false;
  const CMatrix& g = k.member_generators();
  for (Index j = 0; j < g.cols(); ++j)
    if (!interior_member(k, a * g.col(j), tol.tol_cone, tol.tol_cone)) return false;
  return g.cols() > 0;
}

void push_unique(std::vector<CVector>& out, const CVector& v) {
  if (v.norm() == 0.0) return;
  const CVector u = v / v.norm();
  for (const auto& w : out)
    if ((w - u).norm() <= 1e-12) return;
  out.push_back(u);
}

// Points of K with a real and an imaginary block: i * (sum of base generators) first.
void structured_probes(const ConeSpec& k, std::vector<CVector>& out, const CMatrix& map) {
  switch (k.kind()) {
    case ConeKind::Complexified: {
      const CMatrix& g = k.base().member_generators();
      const CVector e = g.rowwise().sum();
      push_unique(out, map * (Complex(0, 1) * e));
      push_unique(out, map * e);
      return;
    }
    case ConeKind::Transformed:
      structured_probes(k.base(), out, map * k.transform());
      return;
    default:
      push_unique(out, map * k.member_generators().rowwise().sum());
      return;
  }
}

}  // namespace

const char* to_string(CertVerdict v) {
  switch (v) {
    case CertVerdict::Certified: return "Certified";
    case CertVerdict::Violated: return "Violated";
    case CertVerdict::Undecided: return "Undecided";
  }
  return "Undecided";
}

const char* to_string(CertMethod m) {
  switch (m) {
    case CertMethod::GeneratorExact: return "GeneratorExact";
    case CertMethod::ProbeSampled: return "ProbeSampled";
    case CertMethod::TheoremBacked: return "TheoremBacked";
  }
  return "GeneratorExact";
}

CMatrix complexify(const RMatrix& b) {
  if (b.rows() != b.cols()) throw Error(ErrorCode::DimensionMismatch, "complexify: matrix must be square");
  return b.cast<Complex>();
}

RMatrix decomplexify(const CMatrix& a, double tol) {
  if (a.size() > 0 && a.imag().cwiseAbs().maxCoeff() > tol)
    throw Error(ErrorCode::InvalidArgument, "decomplexify: matrix has a nonzero imaginary part");
  return a.real();
}

PositivityCertificate certify_positive(const CMatrix& a, const ConeSpec& k, const Tolerances& tol) {
  require_square(a, "certify_positive");
  require_dim(a.rows(), k.dim(), "certify_positive");
  const CMatrix& g = k.member_generators();
  PositivityCertificate cert;
  cert.method = CertMethod::GeneratorExact;
  cert.verdict = CertVerdict::Certified;
  for (Index j = 0; j < g.cols(); ++j) {
    const CVector img = a * g.col(j);
    ++cert.probes_used;
    if (!member(k, img, 10 * tol.tol_cone)) {
      cert.verdict = CertVerdict::Violated;
      if (cert.witnesses.size() < kMaxWitnesses) cert.witnesses.push_back({g.col(j), img, failure_reason(k, img)});
    }
  }
  return cert;
}

std::optional<Complex> rotational_strong_positivity_at(const CMatrix& a, const ConeSpec& k, const CVector& x,
                                                       const Tolerances& tol) {
  require_square(a, "rotational_strong_positivity_at");
  require_dim(a.rows(), k.dim(), "rotational_strong_positivity_at");
  if (x.norm() == 0.0 || !member(k, x, 10 * tol.tol_cone))
    throw Error(ErrorCode::NotInCone, "rotational_strong_positivity_at: probe is not a nonzero cone point");
  if (!k.solid()) throw Error(ErrorCode::NotSolid, "rotational_strong_positivity_at: cone has empty interior");
  return circle_align(a * x, k, false, tol);
}

std::vector<CVector> deterministic_probes(const ConeSpec& k) {
  std::vector<CVector> out;
  structured_probes(k, out, CMatrix::Identity(k.dim(), k.dim()));
  const CMatrix& g = k.member_generators();
  for (Index j = 0; j < g.cols(); ++j) push_unique(out, g.col(j));
  for (Index j = 0; j < g.cols(); ++j) {
    const CVector ig = Complex(0, 1) * g.col(j);
    if (member(k, ig, 1e-12)) push_unique(out, ig);
  }
  const Index m = std::min(g.cols(), kMaxMidpointGenerators);
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j) push_unique(out, CVector(0.5 * (g.col(i) + g.col(j))));
  return out;
}

CVector random_cone_point(const ConeSpec& k, std::uint64_t seed, std::uint64_t index) {
  const CMatrix& g = k.member_generators();
  CounterRng rng = CounterRng(seed).substream(index);
  CVector x = CVector::Zero(k.dim());
  bool any = false;
  for (Index j = 0; j < g.cols(); ++j) {
    const bool take = rng.uniform() < 0.5;
    const double c = rng.uniform();
    if (take) {
      x += c * g.col(j);
      any = true;
    }
  }
  if (!any || x.norm() == 0.0) {
    const Index j = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(g.cols()));
    x = g.col(j);
  }
  return x / x.norm();
}

PositivityCertificate certify_rotational_strong_positivity(const CMatrix& a, const ConeSpec& k,
                                                           const Tolerances& tol, std::uint64_t seed) {
  require_square(a, "certify_rotational_strong_positivity");
  require_dim(a.rows(), k.dim(), "certify_rotational_strong_positivity");
  if (!k.solid() || !k.has_facets())
    throw Error(ErrorCode::NotSolid, "certify_rotational_strong_positivity: cone needs an interior and facets");

  PositivityCertificate cert;
  if (theorem_backed(a, k, tol)) {
    cert.verdict = CertVerdict::Certified;
    cert.method = CertMethod::TheoremBacked;
    return cert;
  }

  const PositivityCertificate pos = certify_positive(a, k, tol);
  if (pos.verdict == CertVerdict::Violated) {
    cert = pos;
    for (auto& w : cert.witnesses) w.reason = "not positive: " + w.reason;
    return cert;
  }

  cert.method = CertMethod::ProbeSampled;
  cert.verdict = CertVerdict::Undecided;
  auto probe = [&](const CVector& x) {
    ++cert.probes_used;
    if (!rotational_strong_positivity_at(a, k, x, tol)) {
      cert.verdict = CertVerdict::Violated;
      if (cert.witnesses.size() < kMaxWitnesses)
        cert.witnesses.push_back({x, a * x, "no unit phase reaches the interior"});
    }
  };
  for (const CVector& x : deterministic_probes(k)) probe(x);
  for (int i = 0; i < tol.probes; ++i) probe(random_cone_point(k, seed, static_cast<std::uint64_t>(i)));
  return cert;
}

StrongPositivityCheck check_eq_1_1(const CMatrix& a, const ConeSpec& k, int probes, std::uint64_t seed,
                                   const Tolerances& tol) {
  require_square(a, "check_eq_1_1");
  require_dim(a.rows(), k.dim(), "check_eq_1_1");
  if (!k.solid() || !k.has_facets()) throw Error(ErrorCode::NotSolid, "check_eq_1_1: cone needs an interior");
  StrongPositivityCheck out;
  auto probe = [&](const CVector& x) {
    if (!out.holds) return;
    ++out.probes_used;
    const CVector y = a * x;
    if (!interior_member(k, y, tol.tol_cone, tol.tol_cone)) {
      out.holds = false;
      out.witness = x;
      out.image = y;
    }
  };
  for (const CVector& x : deterministic_probes(k)) probe(x);
  for (int i = 0; i < probes; ++i) probe(random_cone_point(k, seed, static_cast<std::uint64_t>(i)));

  // With a complex interior, an eigenvector in K of a positive eigenvalue can be
  // rotated onto the boundary, so strong positivity cannot hold.
  if (!k.real_type() && k.has_generators()) {
    const SpectralData spec = eigen_spectrum(a, tol);
    for (const EigenCluster& c : spec.clusters) {
      const double mag = std::max(1.0, std::abs(c.eigenvalue));
      if (std::abs(c.eigenvalue.imag()) > 1e-9 * mag || c.eigenvalue.real() <= 1e-9 * mag) continue;
      CMatrix vecs(a.rows(), static_cast<Index>(c.chains.size()));
      for (std::size_t j = 0; j < c.chains.size(); ++j) vecs.col(static_cast<Index>(j)) = c.chains[j].eigenvector();
      if (cone_meets_subspace(k, SubspaceBasis::span(vecs), tol)) {
        out.obstruction_applies = true;
        break;
      }
    }
  }
  out.consistent = !(out.obstruction_applies && out.holds);
  return out;
}

}  // namespace conespec

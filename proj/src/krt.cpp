#include "conespec/krt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "conespec/numeric_core.hpp"

namespace conespec {

namespace {

double pair_residual(const CMatrix& a, const CVector& w, double r) { return (a * w - r * w).norm() / w.norm(); }

// Eigenpair from a unit direction w: Rayleigh quotient, then one inverse
// iteration step kept only when it lowers the residual.
EigenpairCertificate finish_pair(const CMatrix& a, const ConeSpec& k, CVector w, PairMethod method) {
  w /= w.norm();
  Complex rq = w.dot(a * w);
  double res = pair_residual(a, w, rq.real());
  const Index n = a.rows();
  const CVector y = (a - rq * CMatrix::Identity(n, n)).partialPivLu().solve(w);
  if (y.allFinite() && y.norm() > 0.0) {
    CVector u = y / y.norm();
    const Complex c = w.dot(u);
    if (std::abs(c) > 0.0) u *= std::conj(c) / std::abs(c);
    const Complex ru = u.dot(a * u);
    const double res_u = pair_residual(a, u, ru.real());
    if (res_u < res && violation(k, u) <= std::max(violation(k, w), 1e-12)) {
      w = u;
      rq = ru;
      res = res_u;
    }
  }
  EigenpairCertificate cert;
  cert.r = rq.real();
  cert.r_imag = rq.imag();
  cert.w = w;
  cert.residual = res;
  cert.cone_membership = violation(k, w);
  cert.method = method;
  return cert;
}

CVector default_seed(const ConeSpec& k) {
  const CMatrix& g = k.member_generators();
  if (g.cols() == 0) throw Error(ErrorCode::RepresentationMissing, "cone has no generators to seed the flow");
  const CVector s = g.rowwise().sum();
  return s / s.norm();
}

EigenpairCertificate direct_pair(const CMatrix& a, const ConeSpec& k, const Tolerances& tol) {
  const SpectralData spec = eigen_spectrum(a, tol);
  const EigenCluster& dom = spec.dominant();
  std::vector<CVector> vecs;
  for (const auto& ch : dom.chains) vecs.push_back(ch.eigenvector());
  for (const auto& v : vecs) {
    if (auto z = circle_align(v, k, true, tol)) return finish_pair(a, k, *z * v, PairMethod::DirectSpectral);
  }
  if (vecs.size() > 1) {
    CMatrix m(a.rows(), static_cast<Index>(vecs.size()));
    for (std::size_t j = 0; j < vecs.size(); ++j) m.col(static_cast<Index>(j)) = vecs[j];
    if (auto hit = cone_meets_subspace(k, SubspaceBasis::span(m), tol))
      return finish_pair(a, k, *hit, PairMethod::DirectSpectral);
  }
  throw Error(ErrorCode::NoConvergence, "no eigenvector of the dominant eigenvalue lies in the cone");
}

EigenpairCertificate flow_pair(const CMatrix& a, const ConeSpec& k, const ExtractionConfig& cfg) {
  const CVector x0 = cfg.seed ? CVector(*cfg.seed / cfg.seed->norm()) : default_seed(k);
  std::vector<CVector> dirs;
  double t = cfg.t0;
  for (int step = 0; step <= cfg.max_doublings; ++step, t *= 2.0) {
    const ScaledVector s = flow_apply_scaled(a, t, x0);
    if (s.direction.norm() == 0.0) throw Error(ErrorCode::NoConvergence, "flow of the seed vanishes");
    dirs.push_back(s.direction);
    const int have = static_cast<int>(dirs.size());
    if (have <= cfg.stable_window) continue;
    bool stable = true;
    for (int j = 1; j <= cfg.stable_window && stable; ++j)
      stable = projective_angle(dirs.back(), dirs[have - 1 - j]) <= cfg.tol.tol_dir;
    if (stable) {
      EigenpairCertificate cert = finish_pair(a, k, dirs.back(), PairMethod::FlowExtraction);
      cert.t_final = t;
      return cert;
    }
  }
  throw Error(ErrorCode::NoConvergence, "projective direction did not settle within the doubling schedule");
}

EvidenceValue vec_ev(const CVector& v) { return EvidenceValue::vec(v); }

Assertion make_assertion(std::string name, Verdict v, bool asserted) {
  Assertion a;
  a.name = std::move(name);
  a.verdict = v;
  a.asserted = asserted;
  return a;
}

Verdict from_cert(CertVerdict v) {
  switch (v) {
    case CertVerdict::Certified: return Verdict::Pass;
    case CertVerdict::Violated: return Verdict::Fail;
    case CertVerdict::Undecided: return Verdict::Undecided;
  }
  return Verdict::Undecided;
}

Assertion cert_assertion(const std::string& name, const PositivityCertificate& c, bool asserted) {
  Assertion a = make_assertion(name, from_cert(c.verdict), asserted);
  a.evidence["method"] = EvidenceValue::str(to_string(c.method));
  a.evidence["probes_used"] = EvidenceValue::integral(c.probes_used);
  a.evidence["witness_count"] = EvidenceValue::integral(static_cast<long long>(c.witnesses.size()));
  if (!c.witnesses.empty()) {
    a.witness = c.witnesses.front().input;
    a.evidence["witness_image"] = vec_ev(c.witnesses.front().image);
    a.evidence["reason"] = EvidenceValue::str(c.witnesses.front().reason);
  }
  return a;
}

// Index of the cluster carrying r_sigma: the largest-modulus cluster on the positive real axis.
std::optional<std::size_t> perron_cluster(const SpectralData& spec) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < spec.clusters.size(); ++i) {
    const Complex mu = spec.clusters[i].eigenvalue;
    const double slack = std::max(spec.cluster_radius, 1e-9 * std::max(1.0, std::abs(mu)));
    if (std::abs(mu.imag()) > slack || mu.real() < -slack) continue;
    if (!best || std::abs(mu) > std::abs(spec.clusters[*best].eigenvalue)) best = i;
  }
  return best;
}

struct Overrides {
  std::optional<PositivityCertificate> positivity;
  std::optional<PositivityCertificate> rotational;
};

CertificationReport certify_3_6_impl(const CMatrix& a, const ConeSpec& k, const Tolerances& tol, std::uint64_t seed,
                                     const Overrides& ov) {
  require_square(a, "certify_theorem_3_6");
  require_dim(a.rows(), k.dim(), "certify_theorem_3_6");
  CertificationReport rep;
  rep.theorem = "3.6";
  rep.tolerances = tol;
  rep.seed = seed;
  const SpectralData spec = eigen_spectrum(a, tol);
  rep.spectrum = summarize_spectrum(spec);

  rep.positivity = ov.positivity ? *ov.positivity : certify_positive(a, k, tol);
  rep.assertions.push_back(cert_assertion("positive", rep.positivity, true));
  const bool positive = rep.positivity.verdict != CertVerdict::Violated;

  if (k.solid() && k.has_facets()) {
    rep.rotational = ov.rotational ? *ov.rotational : certify_rotational_strong_positivity(a, k, tol, seed);
    rep.assertions.push_back(cert_assertion("rotational_strong_positivity", *rep.rotational, true));
  } else {
    Assertion r = make_assertion("rotational_strong_positivity", Verdict::Undecided, true);
    r.evidence["reason"] = EvidenceValue::str("cone has empty interior");
    rep.assertions.push_back(r);
  }
  const bool strong = rep.rotational && rep.rotational->verdict == CertVerdict::Certified;

  // (a) dominant eigenpair in the cone.
  {
    Assertion as = make_assertion("dominant_eigenpair", Verdict::Undecided, positive);
    if (!positive) {
      as.evidence["reason"] = EvidenceValue::str("operator is not positive");
    } else {
      try {
        ExtractionConfig cfg;
        cfg.tol = tol;
        try {
          rep.dominant = extract_perron_pair(a, k, cfg);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoConvergence) throw;
          cfg.method = PairMethod::DirectSpectral;
          rep.dominant = extract_perron_pair(a, k, cfg);
        }
        const EigenpairCertificate& p = *rep.dominant;
        const double rs = spec.spectral_radius;
        const double scale = std::max(1.0, rs);
        const bool ok = p.residual <= tol.tol_pair * scale && std::abs(p.r_imag) <= tol.tol_pair * scale &&
                        std::abs(p.r - rs) <= tol.tol_pair * scale && p.cone_membership <= 10 * tol.tol_cone;
        as.verdict = ok ? Verdict::Pass : Verdict::Fail;
        as.evidence["r"] = EvidenceValue::num(p.r);
        as.evidence["r_sigma"] = EvidenceValue::num(rs);
        as.evidence["residual"] = EvidenceValue::num(p.residual);
        as.evidence["cone_membership"] = EvidenceValue::num(p.cone_membership);
        as.evidence["method"] = EvidenceValue::str(to_string(p.method));
        if (!ok) as.witness = p.w;
      } catch (const Error& e) {
        as.evidence["reason"] = EvidenceValue::str(e.what());
      }
    }
    rep.assertions.push_back(as);
  }

  std::optional<std::size_t> rc;
  if (rep.dominant) rc = spec.find(Complex(rep.dominant->r, 0.0));
  if (!rc) rc = perron_cluster(spec);

  auto undecided = [&](const std::string& name, const std::string& why) {
    Assertion as = make_assertion(name, Verdict::Undecided, strong);
    as.evidence["reason"] = EvidenceValue::str(why);
    rep.assertions.push_back(as);
  };
  if (!rc) {
    for (const char* name : {"spectral_gap", "no_other_eigenvector_in_cone", "multiplicities_equal",
                             "eigenvectors_rotate_to_interior"})
      undecided(name, "no eigenvalue on the positive real axis");
    return rep;
  }
  const EigenCluster& dom = spec.clusters[*rc];
  const double rs = std::abs(dom.eigenvalue);

  // (b) spectral gap over the spectrum with one copy of r_sigma removed.
  {
    Assertion as = make_assertion("spectral_gap", Verdict::Pass, strong);
    double m = 0.0;
    Complex culprit = 0.0;
    std::optional<CVector> wit;
    for (std::size_t i = 0; i < spec.clusters.size(); ++i) {
      if (i == *rc) continue;
      const double mod = std::abs(spec.clusters[i].eigenvalue);
      if (mod > m) {
        m = mod;
        culprit = spec.clusters[i].eigenvalue;
        wit = spec.clusters[i].chains.front().eigenvector();
      }
    }
    const bool repeated = dom.algebraic >= 2;
    if (repeated) {
      m = rs;
      culprit = dom.eigenvalue;
      wit = dom.chains.size() >= 2 ? dom.chains[1].eigenvector() : dom.chains.front().chain.front();
    }
    if (repeated || m >= rs * (1 + tol.gap_tol)) {
      as.verdict = Verdict::Fail;
    } else if (m >= rs * (1 - tol.gap_tol)) {
      as.verdict = Verdict::Undecided;
    }
    as.evidence["r_sigma"] = EvidenceValue::num(rs);
    as.evidence["max_other_modulus"] = EvidenceValue::num(m);
    as.evidence["repeated_r_sigma"] = EvidenceValue::integral(repeated ? 1 : 0);
    if (m > 0.0) as.evidence["nearest_eigenvalue"] = EvidenceValue::complex(culprit);
    if (as.verdict == Verdict::Fail) as.witness = wit;
    rep.assertions.push_back(as);
  }

  // (c) no generalized eigenvector of another eigenvalue meets the cone.
  {
    Assertion as = make_assertion("no_other_eigenvector_in_cone", Verdict::Pass, strong);
    int checked = 0;
    try {
      for (std::size_t i = 0; i < spec.clusters.size() && as.verdict == Verdict::Pass; ++i) {
        if (i == *rc) continue;
        const EigenCluster& c = spec.clusters[i];
        ++checked;
        if (auto hit = cone_meets_subspace(k, c.invariant_subspace, tol)) {
          as.verdict = Verdict::Fail;
          as.witness = *hit;
          as.evidence["eigenvalue"] = EvidenceValue::complex(c.eigenvalue);
          break;
        }
        for (const auto& ch : c.chains) {
          for (const auto& v : ch.chain) {
            if (auto z = circle_align(v, k, true, tol)) {
              as.verdict = Verdict::Fail;
              as.witness = CVector(*z * v);
              as.evidence["eigenvalue"] = EvidenceValue::complex(c.eigenvalue);
              break;
            }
          }
          if (as.verdict == Verdict::Fail) break;
        }
      }
    } catch (const Error& e) {
      as.verdict = Verdict::Undecided;
      as.evidence["reason"] = EvidenceValue::str(e.what());
    }
    as.evidence["clusters_checked"] = EvidenceValue::integral(checked);
    rep.assertions.push_back(as);
  }

  // (d) algebraic and geometric multiplicities of r_sigma coincide.
  {
    const bool eq = dom.algebraic == dom.geometric;
    Assertion as = make_assertion("multiplicities_equal", eq ? Verdict::Pass : Verdict::Fail, strong);
    as.evidence["algebraic"] = EvidenceValue::integral(dom.algebraic);
    as.evidence["geometric"] = EvidenceValue::integral(dom.geometric);
    if (!eq) {
      const auto longest = std::max_element(dom.chains.begin(), dom.chains.end(),
                                            [](const EigenChain& x, const EigenChain& y) { return x.rank() < y.rank(); });
      as.witness = longest->chain.front();
    }
    rep.assertions.push_back(as);
  }

  // (e) every eigenvector of r_sigma rotates into the interior.
  {
    Assertion as = make_assertion("eigenvectors_rotate_to_interior", Verdict::Pass, strong);
    if (!k.solid() || !k.has_facets()) {
      as.verdict = Verdict::Undecided;
      as.evidence["reason"] = EvidenceValue::str("cone has empty interior");
    } else {
      int count = 0;
      for (const auto& ch : dom.chains) {
        ++count;
        if (!circle_align(ch.eigenvector(), k, false, tol)) {
          as.verdict = Verdict::Fail;
          as.witness = ch.eigenvector();
          break;
        }
      }
      as.evidence["eigenvectors"] = EvidenceValue::integral(count);
    }
    rep.assertions.push_back(as);
  }
  return rep;
}

void prefix_into(CertificationReport& into, const CertificationReport& from, const std::string& prefix) {
  for (Assertion a : from.assertions) {
    a.name = prefix + a.name;
    into.assertions.push_back(std::move(a));
  }
}

}  // namespace

const char* to_string(PairMethod m) {
  return m == PairMethod::FlowExtraction ? "FlowExtraction" : "DirectSpectral";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "Pass";
    case Verdict::Fail: return "Fail";
    case Verdict::Undecided: return "Undecided";
  }
  return "Undecided";
}

EvidenceValue EvidenceValue::num(double v) {
  EvidenceValue e;
  e.type = Type::Number;
  e.number = v;
  return e;
}

EvidenceValue EvidenceValue::integral(long long v) {
  EvidenceValue e;
  e.type = Type::Integer;
  e.integer = v;
  return e;
}

EvidenceValue EvidenceValue::str(std::string v) {
  EvidenceValue e;
  e.type = Type::Text;
  e.text = std::move(v);
  return e;
}

EvidenceValue EvidenceValue::complex(Complex v) {
  EvidenceValue e;
  e.type = Type::Scalar;
  e.scalar = v;
  return e;
}

EvidenceValue EvidenceValue::vec(CVector v) {
  EvidenceValue e;
  e.type = Type::Vector;
  e.vector = std::move(v);
  return e;
}

bool CertificationReport::failed() const {
  return std::any_of(assertions.begin(), assertions.end(),
                     [](const Assertion& a) { return a.asserted && a.verdict == Verdict::Fail; });
}

bool CertificationReport::undecided() const {
  return std::any_of(assertions.begin(), assertions.end(),
                     [](const Assertion& a) { return a.asserted && a.verdict == Verdict::Undecided; });
}

const Assertion* CertificationReport::find(const std::string& name) const {
  for (const auto& a : assertions)
    if (a.name == name) return &a;
  return nullptr;
}

SpectrumSummary summarize_spectrum(const SpectralData& spec) {
  SpectrumSummary s;
  for (const auto& c : spec.clusters) s.clusters.push_back({c.eigenvalue, c.algebraic, c.geometric});
  s.spectral_radius = spec.spectral_radius;
  if (!spec.clusters.empty()) s.dominant = spec.dominant().eigenvalue;
  return s;
}

EigenpairCertificate extract_perron_pair(const CMatrix& a, const ConeSpec& k, const ExtractionConfig& config) {
  require_square(a, "extract_perron_pair");
  require_dim(a.rows(), k.dim(), "extract_perron_pair");
  if (certify_positive(a, k, config.tol).verdict == CertVerdict::Violated)
    throw Error(ErrorCode::NotPositive, "extract_perron_pair: operator does not map the cone into itself");
  if (config.method == PairMethod::DirectSpectral) return direct_pair(a, k, config.tol);
  return flow_pair(a, k, config);
}

CertificationReport certify_theorem_3_6(const CMatrix& a, const ConeSpec& k, const Tolerances& tol,
                                        std::uint64_t seed) {
  return certify_3_6_impl(a, k, tol, seed, {});
}

CertificationReport certify_theorem_1_1(const CMatrix& a, const ConeSpec& k, double rho, const Tolerances& tol,
                                        std::uint64_t seed) {
  require_square(a, "certify_theorem_1_1");
  require_dim(a.rows(), k.dim(), "certify_theorem_1_1");
  CertificationReport rep;
  rep.theorem = "1.1";
  rep.tolerances = tol;
  rep.seed = seed;
  const SpectralData spec = eigen_spectrum(a, tol);
  rep.spectrum = summarize_spectrum(spec);
  if (!(rho > 0.0) || !(rho < spec.spectral_radius))
    throw Error(ErrorCode::InvalidArgument, "certify_theorem_1_1: rho must lie in (0, r_sigma)");

  const InvariantSplit split = invariant_split(a, rho);
  const Index n = a.rows();
  const Index k1 = split.outer.dim();
  rep.extra["rho"] = EvidenceValue::num(rho);
  rep.extra["x1_dim"] = EvidenceValue::integral(k1);
  rep.extra["x0_dim"] = EvidenceValue::integral(split.inner.dim());

  rep.positivity = certify_positive(a, k, tol);
  rep.assertions.push_back(cert_assertion("positive", rep.positivity, true));
  const bool positive = rep.positivity.verdict != CertVerdict::Violated;
  // Full-space rotational positivity is reported but not required: the
  // argument only needs it on the dominant part.
  if (k.solid() && k.has_facets()) {
    rep.rotational = certify_rotational_strong_positivity(a, k, tol, seed);
    rep.assertions.push_back(cert_assertion("rotational_strong_positivity", *rep.rotational, false));
  }

  Assertion meets = make_assertion("cone_meets_x1", Verdict::Fail, positive);
  const auto hit = cone_meets_subspace(k, split.outer, tol);
  if (hit) {
    meets.verdict = Verdict::Pass;
    meets.evidence["witness"] = EvidenceValue::vec(*hit);
  }
  rep.assertions.push_back(meets);
  if (!hit) return rep;

  const CMatrix& q = split.outer.basis;
  const CMatrix a1 = q.adjoint() * a * q;
  rep.extra["invariance_residual"] =
      EvidenceValue::num((a * q - q * a1).norm() / std::max(1.0, operator_norm(a)));
  const ConeSpec k1_cone = ConeSpec::restricted(q, k, tol);

  Assertion solid = make_assertion("restricted_cone_solid", k1_cone.solid() ? Verdict::Pass : Verdict::Fail, false);
  solid.evidence["dim"] = EvidenceValue::integral(k1);
  rep.assertions.push_back(solid);

  Overrides ov;
  // A K in K and A X1 in X1 give A1 K1 in K1; rotational strong positivity on K
  // restricts to K1 as well, since int K meet X1 lies in the relative interior.
  if (rep.positivity.verdict == CertVerdict::Certified) ov.positivity = rep.positivity;
  if (rep.rotational && rep.rotational->verdict == CertVerdict::Certified) ov.rotational = rep.rotational;
  const CertificationReport sub = certify_3_6_impl(a1, k1_cone, tol, seed, ov);
  prefix_into(rep, sub, "restricted.");

  if (sub.dominant) {
    EigenpairCertificate p = *sub.dominant;
    CVector w = q * p.w;
    w /= w.norm();
    p.w = w;
    p.residual = pair_residual(a, w, p.r);
    p.cone_membership = violation(k, w);
    rep.dominant = p;
  }
  (void)n;
  return rep;
}

CertificationReport certify_real_kr(const RMatrix& b, const ConeSpec& p, const Tolerances& tol, std::uint64_t seed) {
  if (p.kind() != ConeKind::Orthant && p.kind() != ConeKind::PolyhedralReal)
    throw Error(ErrorCode::InvalidCone, "certify_real_kr: cone must be a real orthant or polyhedral cone");
  const CMatrix a = complexify(b);
  CertificationReport rep = certify_3_6_impl(a, ConeSpec::complexified(p), tol, seed, {});
  rep.theorem = "real-kr";

  // Strong positivity of B: every generator of P maps into int P.
  Assertion sp = make_assertion("strongly_positive", Verdict::Pass, false);
  const CMatrix& g = p.member_generators();
  for (Index j = 0; j < g.cols(); ++j) {
    const CVector img = a * g.col(j);
    if (!interior_member(p, img, tol.tol_cone, tol.tol_cone)) {
      sp.verdict = Verdict::Fail;
      sp.witness = CVector(g.col(j));
      sp.evidence["witness_image"] = EvidenceValue::vec(img);
      break;
    }
  }
  const bool strong = sp.verdict == Verdict::Pass;
  rep.assertions.push_back(sp);

  const SpectralData spec = eigen_spectrum(a, tol);
  const auto rc = rep.dominant ? spec.find(Complex(rep.dominant->r, 0.0)) : perron_cluster(spec);
  Assertion simple = make_assertion("simple", Verdict::Undecided, strong);
  if (rc) {
    const EigenCluster& c = spec.clusters[*rc];
    simple.verdict = c.algebraic == 1 && c.geometric == 1 ? Verdict::Pass : Verdict::Fail;
    simple.evidence["algebraic"] = EvidenceValue::integral(c.algebraic);
    simple.evidence["geometric"] = EvidenceValue::integral(c.geometric);
    if (simple.verdict == Verdict::Fail) simple.witness = c.chains.back().eigenvector();
  }
  rep.assertions.push_back(simple);

  Assertion interior = make_assertion("eigenvector_interior", Verdict::Undecided, strong);
  if (rep.dominant) {
    const CVector xi = phase_normalized(rep.dominant->w).real().cast<Complex>();
    interior.evidence["eigenvector"] = EvidenceValue::vec(xi);
    interior.evidence["in_cone"] = EvidenceValue::integral(member(p, xi, 10 * tol.tol_cone) ? 1 : 0);
    interior.verdict = interior_member(p, xi, tol.tol_cone, tol.tol_cone) ? Verdict::Pass : Verdict::Fail;
    if (interior.verdict == Verdict::Fail) interior.witness = xi;
  }
  rep.assertions.push_back(interior);
  return rep;
}

CertificationReport analyze(const CMatrix& a, const ConeSpec& k, const Tolerances& tol, std::uint64_t seed) {
  require_square(a, "analyze");
  require_dim(a.rows(), k.dim(), "analyze");
  CertificationReport rep;
  rep.theorem = "analyze";
  rep.tolerances = tol;
  rep.seed = seed;
  rep.spectrum = summarize_spectrum(eigen_spectrum(a, tol));
  rep.positivity = certify_positive(a, k, tol);
  rep.assertions.push_back(cert_assertion("positive", rep.positivity, false));
  Assertion pair = make_assertion("dominant_eigenpair", Verdict::Undecided, false);
  if (rep.positivity.verdict != CertVerdict::Violated) {
    ExtractionConfig cfg;
    cfg.tol = tol;
    try {
      try {
        rep.dominant = extract_perron_pair(a, k, cfg);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoConvergence) throw;
        cfg.method = PairMethod::DirectSpectral;
        rep.dominant = extract_perron_pair(a, k, cfg);
      }
      pair.verdict = rep.dominant->residual <= tol.tol_pair * std::max(1.0, rep.spectrum.spectral_radius)
                         ? Verdict::Pass
                         : Verdict::Fail;
      pair.evidence["r"] = EvidenceValue::num(rep.dominant->r);
      pair.evidence["residual"] = EvidenceValue::num(rep.dominant->residual);
    } catch (const Error& e) {
      pair.evidence["reason"] = EvidenceValue::str(e.what());
    }
  } else {
    pair.evidence["reason"] = EvidenceValue::str("operator is not positive");
  }
  rep.assertions.push_back(pair);
  return rep;
}

MTauDiagnostic m_tau_probe(const CMatrix& a, const ConeSpec& k, const CVector& xi, const CVector& eta,
                           const std::vector<double>& t_grid, const MTauConfig& config) {
  require_square(a, "m_tau_probe");
  require_dim(a.rows(), k.dim(), "m_tau_probe");
  require_dim(xi.size(), k.dim(), "m_tau_probe");
  require_dim(eta.size(), k.dim(), "m_tau_probe");
  const double scale = std::max(1.0, operator_norm(a));
  for (const CVector* v : {&xi, &eta}) {
    if (v->norm() == 0.0) throw Error(ErrorCode::NotEigenvectors, "m_tau_probe: zero vector");
    const Complex rq = v->dot(a * *v) / v->squaredNorm();
    if ((a * *v - rq * *v).norm() / v->norm() > config.tol.tol_pair * scale)
      throw Error(ErrorCode::NotEigenvectors, "m_tau_probe: residual exceeds tol_pair");
  }
  const FacetForm& f = k.facet_form();
  const CVector fa = f.rows * xi, fb = f.rows * eta;
  const CVector ra = f.complex_type ? CVector() : CVector(f.reality * xi);
  const CVector rb = f.complex_type ? CVector() : CVector(f.reality * eta);
  const double nxi2 = xi.squaredNorm(), neta2 = eta.squaredNorm();
  const Complex cross = xi.dot(eta);

  auto viol = [&](double p1, double p2, double t) {
    const Complex z1 = std::polar(1.0, p1), z2 = std::polar(1.0, p2);
    const double n2 = nxi2 + t * t * neta2 + 2.0 * t * (std::conj(z1) * z2 * cross).real();
    const double nx = std::sqrt(std::max(n2, 0.0));
    if (nx == 0.0) return std::numeric_limits<double>::infinity();
    double v = 0.0;
    for (Index i = 0; i < fa.size(); ++i) {
      const Complex c = z1 * fa(i) + t * z2 * fb(i);
      v = std::max(v, -c.real());
      if (f.complex_type) v = std::max(v, -c.imag());
    }
    v /= nx;
    if (!f.complex_type && ra.size() > 0) {
      const CVector u = z1 * ra + t * z2 * rb;
      const double nu = u.norm();
      if (nu > 0) v = std::max(v, u.imag().cwiseAbs().maxCoeff() / nu);
    }
    return v;
  };

  MTauDiagnostic out;
  const int g = std::max(config.phase_grid, 4);
  const double h0 = 2.0 * std::numbers::pi / g;
  for (double t : t_grid) {
    double best = std::numeric_limits<double>::infinity();
    double b1 = 0.0, b2 = 0.0;
    for (int i = 0; i < g && best > 0.0; ++i)
      for (int j = 0; j < g; ++j) {
        const double v = viol(i * h0, j * h0, t);
        if (v < best) {
          best = v;
          b1 = i * h0;
          b2 = j * h0;
          if (best == 0.0) break;
        }
      }
    // Pattern search around the best cell.
    double h = h0;
    for (int s = 0; s < config.refine_steps && best > 0.0; ++s) {
      bool moved = false;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const double v = viol(b1 + di * h, b2 + dj * h, t);
          if (v < best) {
            best = v;
            b1 += di * h;
            b2 += dj * h;
            moved = true;
          }
        }
      if (!moved) h *= 0.5;
    }
    MTauSample smp;
    smp.t = t;
    smp.min_violation = best;
    smp.feasible = best <= 10 * config.tol.tol_cone;
    smp.z1 = std::polar(1.0, b1);
    smp.z2 = std::polar(1.0, b2);
    out.samples.push_back(smp);
  }
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    if (out.samples[i].feasible) continue;
    out.tau_upper = out.samples[i].t;
    if (i > 0) {
      out.tau_lower = out.samples[i - 1].t;
      out.contact = out.samples[i - 1];
    }
    break;
  }
  if (!out.tau_upper && !out.samples.empty()) {
    out.tau_lower = out.samples.back().t;
    out.contact = out.samples.back();
  }
  return out;
}

SearchRecord search_instance(const Instance& inst, Index n, std::uint64_t seed, const Tolerances& tol) {
  SearchRecord rec;
  rec.n = n;
  rec.seed = seed;
  try {
    const PositivityCertificate pos = certify_positive(inst.matrix, inst.cone, tol);
    if (pos.verdict == CertVerdict::Violated) {
      rec.status = "excluded-positivity";
      return rec;
    }
    const PositivityCertificate rsp = certify_rotational_strong_positivity(inst.matrix, inst.cone, tol, seed);
    rec.rotational_verdict = to_string(rsp.verdict);
    if (rsp.verdict == CertVerdict::Violated) {
      rec.status = "excluded-rotational";
      return rec;
    }
    const SpectralData spec = eigen_spectrum(inst.matrix, tol);
    const auto rc = perron_cluster(spec);
    if (!rc) throw Error(ErrorCode::NumericalFailure, "no eigenvalue on the positive real axis");
    const EigenCluster& c = spec.clusters[*rc];
    rec.r_sigma = std::abs(c.eigenvalue);
    rec.algebraic = c.algebraic;
    rec.geometric = c.geometric;
    rec.status = "included";
  } catch (const std::exception& e) {
    rec.status = "error";
    rec.error = e.what();
  }
  return rec;
}

SearchReport search_counterexample(const SearchConfig& config, const std::vector<SearchRecord>& done,
                                   const std::function<void(const SearchRecord&)>& progress) {
  struct Job {
    Index n;
    std::uint64_t seed;
    std::size_t corpus_index;
  };
  std::vector<Job> jobs;
  if (!config.corpus.empty()) {
    for (std::size_t i = 0; i < config.corpus.size(); ++i)
      jobs.push_back({config.corpus[i].matrix.rows(), config.corpus[i].seed.value_or(i), i});
  } else {
    for (Index n = config.n_min; n <= config.n_max; ++n)
      for (std::uint64_t s = config.seed_begin; s < config.seed_end; ++s) jobs.push_back({n, s, 0});
  }
  std::sort(jobs.begin(), jobs.end(),
            [](const Job& x, const Job& y) { return x.n != y.n ? x.n < y.n : x.seed < y.seed; });

  auto instance_of = [&](const Job& j) {
    return config.corpus.empty() ? generate_instance(config.family, j.n, j.seed) : config.corpus[j.corpus_index];
  };

  std::vector<std::optional<SearchRecord>> results(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i)
    for (const auto& r : done)
      if (r.n == jobs[i].n && r.seed == jobs[i].seed) results[i] = r;

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      if (results[i]) continue;
      SearchRecord rec;
      try {
        rec = search_instance(instance_of(jobs[i]), jobs[i].n, jobs[i].seed, config.tol);
      } catch (const std::exception& e) {
        rec.n = jobs[i].n;
        rec.seed = jobs[i].seed;
        rec.status = "error";
        rec.error = e.what();
      }
      std::lock_guard<std::mutex> lock(mu);
      results[i] = rec;
      if (progress) progress(rec);
    }
  };
  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(jobs.size(), 1))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  SearchReport rep;
  rep.config = config;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const SearchRecord& r = *results[i];
    rep.records.push_back(r);
    if (r.status != "included") continue;
    ++rep.histogram[r.geometric];
    if (r.geometric >= 2) rep.findings.push_back({r, instance_of(jobs[i])});
  }
  return rep;
}

}  // namespace conespec

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conespec/cones.hpp"

namespace conespec {

enum class CertVerdict { Certified, Violated, Undecided };
enum class CertMethod { GeneratorExact, ProbeSampled, TheoremBacked };

const char* to_string(CertVerdict v);
const char* to_string(CertMethod m);

struct PositivityWitness {
  CVector input;
  CVector image;
  std::string reason;
};

struct PositivityCertificate {
  CertVerdict verdict = CertVerdict::Undecided;
  CertMethod method = CertMethod::GeneratorExact;
  std::vector<PositivityWitness> witnesses;
  int probes_used = 0;
};

/// A(x + iy) = Bx + iBy.
CMatrix complexify(const RMatrix& b);

/// Real part of a matrix whose imaginary part vanishes; throws InvalidArgument otherwise.
RMatrix decomplexify(const CMatrix& a, double tol = 0.0);

/// A K subset of K, checked on every generator of K.
PositivityCertificate certify_positive(const CMatrix& a, const ConeSpec& k, const Tolerances& tol = {});

/// Unit z with z A x in the interior of K, if one exists.
std::optional<Complex> rotational_strong_positivity_at(const CMatrix& a, const ConeSpec& k, const CVector& x,
                                                       const Tolerances& tol = {});

/// Rotational strong positivity over all of K minus the origin. Certified only
/// when a sufficient condition holds; probe campaigns yield Undecided or Violated.
PositivityCertificate certify_rotational_strong_positivity(const CMatrix& a, const ConeSpec& k,
                                                           const Tolerances& tol = {}, std::uint64_t seed = 0);

struct StrongPositivityCheck {
  bool holds = true;                 // A x in int K on every probe
  std::optional<CVector> witness;    // first probe with A x outside int K
  std::optional<CVector> image;
  int probes_used = 0;
  /// A positive real eigenvalue has an eigenvector in K (complex interior only),
  /// so `holds` must be false.
  bool obstruction_applies = false;
  bool consistent = true;
};

/// Strong positivity A (K minus 0) in int K, probed.
StrongPositivityCheck check_eq_1_1(const CMatrix& a, const ConeSpec& k, int probes, std::uint64_t seed = 0,
                                   const Tolerances& tol = {});

/// Deterministic probe points of K: structured sums, generators, i * generators
/// that stay in K, and pairwise midpoints.
std::vector<CVector> deterministic_probes(const ConeSpec& k);

/// Random conic combination of member generators over a random support.
CVector random_cone_point(const ConeSpec& k, std::uint64_t seed, std::uint64_t index);

}  // namespace conespec

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conespec/instances.hpp"
#include "conespec/positivity.hpp"

namespace conespec {

enum class PairMethod { FlowExtraction, DirectSpectral };
enum class Verdict { Pass, Fail, Undecided };

const char* to_string(PairMethod m);
const char* to_string(Verdict v);

/// Dominant eigenpair (r, w) with w in the cone.
struct EigenpairCertificate {
  double r = 0.0;
  double r_imag = 0.0;  // imaginary part of the Rayleigh quotient, kept as evidence
  CVector w;            // unit norm
  double residual = 0.0;         // ||A w - r w|| / ||w||
  double cone_membership = 0.0;  // violation(K, w)
  PairMethod method = PairMethod::FlowExtraction;
  double t_final = 0.0;  // flow time at which the direction settled
};

struct ExtractionConfig {
  PairMethod method = PairMethod::FlowExtraction;
  std::optional<CVector> seed;  // defaults to the sum of member generators
  double t0 = 0.5;
  int max_doublings = 80;
  /// Doublings over which the direction has to stay within tol_dir (a factor 16 in t).
  int stable_window = 4;
  Tolerances tol;
};

EigenpairCertificate extract_perron_pair(const CMatrix& a, const ConeSpec& k, const ExtractionConfig& config = {});

/// Evidence values are numbers, strings, complex scalars or complex vectors.
struct EvidenceValue {
  enum class Type { Number, Text, Scalar, Vector, Integer } type = Type::Number;
  double number = 0.0;
  long long integer = 0;
  std::string text;
  Complex scalar;
  CVector vector;

  static EvidenceValue num(double v);
  static EvidenceValue integral(long long v);
  static EvidenceValue str(std::string v);
  static EvidenceValue complex(Complex v);
  static EvidenceValue vec(CVector v);
};

struct Assertion {
  std::string name;
  Verdict verdict = Verdict::Undecided;
  bool asserted = true;  // false: informational only
  std::map<std::string, EvidenceValue> evidence;
  std::optional<CVector> witness;  // concrete vector behind a Fail, when there is one
};

struct SpectrumEntry {
  Complex eigenvalue;
  int algebraic = 0;
  int geometric = 0;
};

struct SpectrumSummary {
  std::vector<SpectrumEntry> clusters;
  double spectral_radius = 0.0;
  Complex dominant;
};

SpectrumSummary summarize_spectrum(const SpectralData& spec);

struct CertificationReport {
  std::string theorem;  // "3.6", "1.1", "real-kr" or "analyze"
  std::string input_digest;
  PositivityCertificate positivity;
  std::optional<PositivityCertificate> rotational;
  std::vector<Assertion> assertions;
  SpectrumSummary spectrum;
  std::optional<EigenpairCertificate> dominant;
  Tolerances tolerances;
  std::uint64_t seed = 0;
  std::map<std::string, EvidenceValue> extra;  // e.g. split dimensions

  /// Any asserted Fail.
  bool failed() const;
  /// Any asserted Undecided.
  bool undecided() const;
  const Assertion* find(const std::string& name) const;
};

CertificationReport certify_theorem_3_6(const CMatrix& a, const ConeSpec& k, const Tolerances& tol = {},
                                        std::uint64_t seed = 0);

/// Splits at rho, restricts to the dominant invariant subspace X1 and certifies
/// there. Assertions of the restricted problem carry the prefix "restricted.".
CertificationReport certify_theorem_1_1(const CMatrix& a, const ConeSpec& k, double rho, const Tolerances& tol = {},
                                        std::uint64_t seed = 0);

/// Real operator B on a real cone P, through its complexification.
CertificationReport certify_real_kr(const RMatrix& b, const ConeSpec& p, const Tolerances& tol = {},
                                    std::uint64_t seed = 0);

/// Spectral summary, positivity certificate and dominant pair.
CertificationReport analyze(const CMatrix& a, const ConeSpec& k, const Tolerances& tol = {}, std::uint64_t seed = 0);

struct MTauSample {
  double t = 0.0;
  bool feasible = false;
  double min_violation = 0.0;  // best relative violation over the phase torus
  Complex z1, z2;              // phases attaining it
};

struct MTauDiagnostic {
  std::vector<MTauSample> samples;
  /// Bracket for tau = inf { t : M(t) misses K }: last feasible grid time before
  /// the first infeasible one, and that infeasible time (absent if none).
  std::optional<double> tau_lower;
  std::optional<double> tau_upper;
  std::optional<MTauSample> contact;  // last feasible sample: boundary contact witness
};

struct MTauConfig {
  int phase_grid = 360;
  int refine_steps = 40;
  Tolerances tol;
};

/// Decides M(t) = { z1 xi + t z2 eta : |z1| = |z2| = 1 } meets K on each grid time.
MTauDiagnostic m_tau_probe(const CMatrix& a, const ConeSpec& k, const CVector& xi, const CVector& eta,
                           const std::vector<double>& t_grid, const MTauConfig& config = {});

struct SearchConfig {
  std::string family = "complexified";
  Index n_min = 2;
  Index n_max = 8;
  std::uint64_t seed_begin = 0;
  std::uint64_t seed_end = 100;  // exclusive
  Tolerances tol;
  int threads = 0;  // 0: hardware concurrency
  /// Instances of a user corpus replace generated ones when nonempty.
  std::vector<Instance> corpus;
};

struct SearchRecord {
  Index n = 0;
  std::uint64_t seed = 0;
  std::string status;  // included, excluded-positivity, excluded-rotational, error
  std::string rotational_verdict;
  double r_sigma = 0.0;
  int algebraic = 0;
  int geometric = 0;
  std::string error;
};

struct SearchFinding {
  SearchRecord record;
  Instance instance;
};

struct SearchReport {
  SearchConfig config;
  std::vector<SearchRecord> records;  // ordered by (n, seed)
  std::vector<SearchFinding> findings;  // geometric multiplicity >= 2
  std::map<int, int> histogram;         // geometric multiplicity -> included count
};

/// Evaluates one instance of a campaign.
SearchRecord search_instance(const Instance& inst, Index n, std::uint64_t seed, const Tolerances& tol);

/// Explores the geometric multiplicity of r_sigma; records and never asserts.
/// Records already present in `done` are reused instead of recomputed.
SearchReport search_counterexample(const SearchConfig& config, const std::vector<SearchRecord>& done = {},
                                   const std::function<void(const SearchRecord&)>& progress = {});

}  // namespace conespec

#include "conespec/core.hpp"

#include <cstdlib>
#include <string_view>

namespace conespec {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::SplitOnSpectrum: return "SplitOnSpectrum";
    case ErrorCode::NotAnEigenvalue: return "NotAnEigenvalue";
    case ErrorCode::NotSolid: return "NotSolid";
    case ErrorCode::RepresentationMissing: return "RepresentationMissing";
    case ErrorCode::ProofMismatch: return "ProofMismatch";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::NotInCone: return "NotInCone";
    case ErrorCode::ExpansionFailure: return "ExpansionFailure";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotPositive: return "NotPositive";
    case ErrorCode::NotEigenvectors: return "NotEigenvectors";
    case ErrorCode::UnknownFamily: return "UnknownFamily";
    case ErrorCode::InvalidCone: return "InvalidCone";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Tolerances Tolerances::strict() {
  Tolerances t;
  t.tol_exp = 1e-12;
  t.tol_chain_rel = 1e-10;
  t.tol_cone = 1e-11;
  t.tol_lp = 1e-11;
  t.arc_margin = 1e-12;
  t.tol_pair = 1e-10;
  t.tol_dir = 1e-12;
  t.gap_tol = 1e-9;
  t.probes = 1024;
  return t;
}

Tolerances Tolerances::from_environment() {
  const char* profile = std::getenv("CONESPEC_TOLERANCE_PROFILE");
  if (profile == nullptr) return {};
  std::string_view p(profile);
  if (p.empty() || p == "default") return {};
  if (p == "strict") return strict();
  throw Error(ErrorCode::InvalidArgument, "unknown tolerance profile '" + std::string(p) + "'");
}

}  // namespace conespec

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace conespec {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorCode {
  DimensionMismatch,
  NonConvergence,
  Overflow,
  SplitOnSpectrum,
  NotAnEigenvalue,
  NotSolid,
  RepresentationMissing,
  ProofMismatch,
  NumericalFailure,
  NotInCone,
  ExpansionFailure,
  InsufficientData,
  NoConvergence,
  NotPositive,
  NotEigenvectors,
  UnknownFamily,
  InvalidCone,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Numerical thresholds shared by every module. Relative quantities are
/// scaled by the operator norm or the vector norm at the point of use.
struct Tolerances {
  // numeric core
  double tol_exp = 1e-10;
  double tol_ortho = 1e-12;
  double tol_chain_rel = 1e-8;    // times ||A||
  double tol_rank_rel = 1e-9;     // times ||A||
  double cluster_rel = 1e-7;      // times max(1, r_sigma)
  // cones
  double tol_cone = 1e-9;         // times ||x||
  double tol_lp = 1e-9;
  double cond_cap = 1e8;
  double arc_margin = 1e-10;      // radians
  int arc_grid = 10000;
  // dynamics
  double coeff_floor = 1e-12;     // times ||x0||
  // krt
  double tol_pair = 1e-8;
  double tol_dir = 1e-10;
  double gap_tol = 1e-7;
  // positivity
  int probes = 256;

  static Tolerances strict();
  /// Reads CONESPEC_TOLERANCE_PROFILE ("default" or "strict").
  static Tolerances from_environment();
};

inline void require_square(const CMatrix& a, const char* where) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, std::string(where) + ": matrix must be square and nonempty");
  }
}

inline void require_dim(Index got, Index want, const char* where) {
  if (got != want) {
    throw Error(ErrorCode::DimensionMismatch, std::string(where) + ": expected dimension " +
                                                  std::to_string(want) + ", got " + std::to_string(got));
  }
}

}  // namespace conespec

#pragma once

#include <optional>
#include <vector>

#include "conespec/core.hpp"

namespace conespec {

/// Orthonormal basis (columns) of a subspace of C^n.
struct SubspaceBasis {
  Index ambient_dim = 0;
  CMatrix basis;

  Index dim() const { return basis.cols(); }
  bool empty() const { return basis.cols() == 0; }

  static SubspaceBasis empty_in(Index n);
  static SubspaceBasis whole(Index n);
  /// Orthonormalizes the column span of `vectors`, dropping directions whose
  /// singular value falls below `rank_tol` times the largest one.
  static SubspaceBasis span(const CMatrix& vectors, double rank_tol = 1e-10);
  /// Wraps columns that are already orthonormal to within `tol_ortho`.
  static SubspaceBasis from_orthonormal(CMatrix q, double tol_ortho = 1e-12);
};

/// Generalized eigenvector chain xi, (A - mu) xi, ..., (A - mu)^{rank-1} xi.
/// The last element is an eigenvector; it carries unit norm and fixed phase.
struct EigenChain {
  Complex eigenvalue;
  std::vector<CVector> chain;

  int rank() const { return static_cast<int>(chain.size()); }
  const CVector& eigenvector() const { return chain.back(); }
};

struct EigenCluster {
  Complex eigenvalue;             // cluster centre
  std::vector<Complex> members;   // raw Schur eigenvalues merged into the centre
  int algebraic = 0;
  int geometric = 0;
  std::vector<EigenChain> chains;
  SubspaceBasis invariant_subspace;  // generalized eigenspace, orthonormal

  int max_rank() const;
};

struct SpectralData {
  std::vector<EigenCluster> clusters;
  double spectral_radius = 0.0;
  double norm = 0.0;           // ||A||_2
  double tol_rank = 0.0;       // absolute rank threshold used for kernels
  double cluster_radius = 0.0; // absolute clustering radius

  Index dim() const;
  /// Cluster with largest modulus; ties are broken towards the largest real part.
  std::size_t dominant_index() const;
  const EigenCluster& dominant() const { return clusters[dominant_index()]; }
  /// Cluster whose members lie within the merge radius of `mu`.
  std::optional<std::size_t> find(Complex mu) const;
};

/// Basis V (chains stored eigenvector-first) and upper Jordan matrix J with A V ~ V J.
struct JordanForm {
  CMatrix basis;
  CMatrix jordan;
};

struct SchurForm {
  CMatrix unitary;     // U
  CMatrix triangular;  // T, A = U T U^*
};

double operator_norm(const CMatrix& a);

SchurForm complex_schur(const CMatrix& a);

/// Reorders a complex Schur form so that the selected diagonal entries come
/// first, preserving their relative order. Uses adjacent Givens swaps.
void reorder_schur(SchurForm& schur, const std::vector<bool>& select);

SpectralData eigen_spectrum(const CMatrix& a, const Tolerances& tol = {});

JordanForm assemble_jordan(const SpectralData& spectrum);

/// Value e^{log_scale} * direction; direction has unit norm (or is zero).
struct ScaledVector {
  CVector direction;
  double log_scale = 0.0;

  CVector value() const;
};

/// e^{At} x0 evaluated in shift-normalized form, never overflowing.
ScaledVector flow_apply_scaled(const CMatrix& a, double t, const CVector& x0);

/// e^{At} x0. Throws Overflow when the result is not representable.
CVector flow_apply(const CMatrix& a, double t, const CVector& x0);

template <class Derived>
double distance_to_subspace(const Eigen::MatrixBase<Derived>& x, const SubspaceBasis& m) {
  require_dim(x.size(), m.ambient_dim, "distance_to_subspace");
  if (m.empty()) return x.norm();
  const CVector v = x.template cast<Complex>();
  return (v - m.basis * (m.basis.adjoint() * v)).norm();
}

struct InvariantSplit {
  SubspaceBasis inner;  // generalized eigenspaces with |mu| < rho
  SubspaceBasis outer;  // generalized eigenspaces with |mu| > rho
};

InvariantSplit invariant_split(const CMatrix& a, double rho, double tol = 1e-9);

struct Multiplicities {
  int algebraic = 0;
  int geometric = 0;
};

Multiplicities multiplicities(const CMatrix& a, Complex mu, const Tolerances& tol = {});
Multiplicities multiplicities(const CMatrix& a, const SpectralData& spectrum, Complex mu);

/// Unit norm, first entry of largest magnitude made real positive.
CVector phase_normalized(const CVector& v);

/// Angle between the complex lines spanned by u and v, in [0, pi/2].
double projective_angle(const CVector& u, const CVector& v);

/// Stacks real and imaginary parts: [Re M; Im M].
template <class Derived>
RMatrix realify(const Eigen::MatrixBase<Derived>& m) {
  RMatrix out(2 * m.rows(), m.cols());
  out.topRows(m.rows()) = m.real();
  out.bottomRows(m.rows()) = m.imag();
  return out;
}

}  // namespace conespec

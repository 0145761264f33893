#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "conespec/core.hpp"
#include "conespec/numeric_core.hpp"

namespace conespec {

enum class ConeKind { Orthant, PolyhedralReal, Complexified, Transformed, Restricted };

const char* to_string(ConeKind kind);

/// Facet description of a cone in C^n.
///
/// Complex type: y is in the cone iff every value (rows * y)_k lies in the
/// closed first quadrant. Real type: y is in the cone iff reality * y is a
/// real vector and Re (rows * y) >= 0. Rows have unit norm unless they vanish.
struct FacetForm {
  bool complex_type = false;
  CMatrix rows;
  CMatrix reality;
};

/// { G lam : lam >= 0, C lam = 0 } with unit-norm generator columns.
struct ConicRepresentation {
  CMatrix generators;
  RMatrix constraints;

  Index size() const { return generators.cols(); }
  bool constrained() const { return constraints.rows() > 0; }
};

class ConeSpec {
 public:
  static ConeSpec orthant(Index n);
  /// Real polyhedral cone from generator columns and/or facet rows. Either
  /// may be empty; the missing one is enumerated when n <= 4.
  static ConeSpec polyhedral(const RMatrix& generators, const RMatrix& facets, const Tolerances& tol = {});
  /// P + iP for a real base cone P.
  static ConeSpec complexified(const ConeSpec& base);
  /// T K = { T x : x in K }; cond(T) must stay below cond_cap.
  static ConeSpec transformed(const CMatrix& t, const ConeSpec& base, const Tolerances& tol = {});
  /// { y in C^k : Q y in K } for Q with orthonormal columns, i.e. K meet range(Q)
  /// in the coordinates of Q.
  static ConeSpec restricted(const CMatrix& q, const ConeSpec& base, const Tolerances& tol = {});

  ConeKind kind() const;
  Index dim() const;
  bool solid() const;
  /// True when the cone consists of real vectors (after any transform).
  bool real_type() const;

  const ConeSpec& base() const;
  /// T for Transformed, Q for Restricted.
  const CMatrix& transform() const;
  const CMatrix& transform_inverse() const;
  /// Generator columns and facet rows of a PolyhedralReal cone.
  const RMatrix& real_generators() const;
  const RMatrix& real_facets() const;

  bool has_facets() const;
  bool has_generators() const;
  /// Throws RepresentationMissing when the cone has no facet description.
  const FacetForm& facet_form() const;
  /// Throws RepresentationMissing when the cone has no generator description.
  const ConicRepresentation& conic() const;
  /// Generators that individually lie in the cone (columns). For restricted
  /// cones these are the extreme rays, enumerated on first use; throws
  /// RepresentationMissing when enumeration is too large.
  const CMatrix& member_generators() const;

  struct Node;

 private:
  explicit ConeSpec(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Relative membership defect of x (0 when x is in the cone).
double violation(const ConeSpec& k, const CVector& x);

/// Membership with tolerance `tol` relative to ||x||.
bool member(const ConeSpec& k, const CVector& x, double tol = 1e-9);

/// All facet values strictly above margin * ||x||, with reality enforced to `tol`.
bool interior_member(const ConeSpec& k, const CVector& x, double margin = 1e-9, double tol = 1e-9);

/// Whether some point has all facet values strictly positive (LP).
bool has_interior(const FacetForm& form, double tol_lp = 1e-9);

struct Arc {
  double start = 0.0;  // in [0, 2pi)
  double end = 0.0;    // start < end <= start + 2pi; may exceed 2pi when the arc wraps
  bool start_open = true;
  bool end_open = true;

  double width() const { return end - start; }
  double midpoint() const;
  bool contains(double phi) const;
};

struct ArcSet {
  std::vector<Arc> arcs;

  bool empty() const { return arcs.empty(); }
  double measure() const;
  bool contains(double phi) const;
  static ArcSet full_circle();
};

/// Phases phi with e^{i phi} c_k in the first quadrant for every k. Open
/// quadrant by default; in closed mode values with |c_k| <= zero_tol impose
/// no constraint, in open mode they make the set empty.
ArcSet arc_feasible(const std::vector<Complex>& values, bool closed = false, double zero_tol = 0.0);

/// Unit scalar z with z xi in the cone (closed) or its interior (open).
std::optional<Complex> circle_align(const CVector& xi, const ConeSpec& k, bool closed, const Tolerances& tol = {});

/// Feasibility kernel for { lam >= 0, C lam = 0, E G lam = 0, sum lam = 1 }.
std::optional<RVector> conic_lp(const ConicRepresentation& rep, const RMatrix& extra_rows, double tol_lp);

/// Nonzero point of K in the subspace M, if any.
std::optional<CVector> cone_meets_subspace(const ConeSpec& k, const SubspaceBasis& m, const Tolerances& tol = {});

/// Direct sum decomposition of C^n.
struct DecompositionSpec {
  std::vector<SubspaceBasis> subspaces;

  Index ambient_dim() const;
  std::size_t size() const { return subspaces.size(); }
  /// Throws InvalidArgument unless the subspaces form a direct sum of the whole space.
  void validate(double rank_tol = 1e-10) const;
  /// Coordinate blocks of the given sizes.
  static DecompositionSpec blocks(const std::vector<Index>& sizes);
  static DecompositionSpec coordinates(Index n);
};

struct ProperVerdicts {
  bool proper = true;
  std::vector<bool> per_index;
};

/// Pointedness of every projection Pi_i K along the remaining summands.
ProperVerdicts projectively_proper(const ConeSpec& k, const DecompositionSpec& d, const Tolerances& tol = {});

struct ProperSubcone {
  std::vector<std::size_t> indices;  // retained summands, ascending
  SubspaceBasis span;                // orthonormal basis of their sum
  ConeSpec cone;                     // K meet span, in the coordinates of span
  DecompositionSpec decomposition;   // retained summands in those coordinates
  CVector witness;                   // nonzero point of the subcone, ambient coordinates
};

/// Drops improper summands (lowest index first) until the remaining cone is
/// projectively proper.
ProperSubcone find_proper_subcone(const ConeSpec& k, const DecompositionSpec& d, const Tolerances& tol = {});

}  // namespace conespec

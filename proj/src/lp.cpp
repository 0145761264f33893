#include "conespec/lp.hpp"

#include <cmath>
#include <limits>

namespace conespec {

namespace {

constexpr double kPivotTol = 1e-11;

}  // namespace

std::optional<RVector> lp_feasible(const RMatrix& a_eq, const RVector& b_eq, const std::vector<bool>& nonneg,
                                   const std::optional<RVector>& normalization, double tol) {
  const Index nvar = a_eq.cols();
  if (a_eq.rows() != b_eq.size() || static_cast<Index>(nonneg.size()) != nvar ||
      (normalization && normalization->size() != nvar)) {
    throw Error(ErrorCode::DimensionMismatch, "lp_feasible: inconsistent problem dimensions");
  }

  // Split free variables into x+ - x-.
  std::vector<Index> pos_col(nvar), neg_col(nvar, -1);
  Index ncols = 0;
  for (Index j = 0; j < nvar; ++j) {
    pos_col[j] = ncols++;
    if (!nonneg[j]) neg_col[j] = ncols++;
  }

  const Index raw_rows = a_eq.rows() + (normalization ? 1 : 0);
  RMatrix rows(raw_rows, nvar);
  RVector rhs(raw_rows);
  rows.topRows(a_eq.rows()) = a_eq;
  rhs.head(a_eq.rows()) = b_eq;
  if (normalization) {
    rows.row(raw_rows - 1) = normalization->transpose();
    rhs(raw_rows - 1) = 1.0;
  }

  // Equilibrate; drop empty rows (infeasible if their rhs is nonzero).
  std::vector<Index> keep;
  for (Index i = 0; i < raw_rows; ++i) {
    const double scale = rows.row(i).cwiseAbs().maxCoeff();
    if (scale <= kPivotTol) {
      if (std::abs(rhs(i)) > tol) return std::nullopt;
      continue;
    }
    rows.row(i) /= scale;
    rhs(i) /= scale;
    if (rhs(i) < 0) {
      rows.row(i) *= -1.0;
      rhs(i) *= -1.0;
    }
    keep.push_back(i);
  }
  const Index m = static_cast<Index>(keep.size());
  if (m == 0) return RVector::Zero(nvar);

  // Tableau [A_split | I | b], objective row holds phase-I reduced costs.
  const Index width = ncols + m + 1;
  RMatrix tab = RMatrix::Zero(m + 1, width);
  for (Index r = 0; r < m; ++r) {
    const Index i = keep[r];
    for (Index j = 0; j < nvar; ++j) {
      tab(r, pos_col[j]) = rows(i, j);
      if (neg_col[j] >= 0) tab(r, neg_col[j]) = -rows(i, j);
    }
    tab(r, ncols + r) = 1.0;
    tab(r, width - 1) = rhs(i);
  }
  for (Index c = 0; c < ncols; ++c) tab(m, c) = -tab.topRows(m).col(c).sum();
  tab(m, width - 1) = -tab.topRows(m).col(width - 1).sum();

  std::vector<Index> basis(m);
  for (Index r = 0; r < m; ++r) basis[r] = ncols + r;

  const double rhs_scale = 1.0 + tab.topRows(m).col(width - 1).cwiseAbs().maxCoeff();
  const Index max_iter = 200 * (m + ncols) + 1000;
  Index degenerate_run = 0;
  for (Index iter = 0;; ++iter) {
    if (iter > max_iter) throw Error(ErrorCode::NumericalFailure, "lp_feasible: iteration cap reached");
    const bool bland = degenerate_run > 50;
    Index enter = -1;
    double best = -kPivotTol * 10;
    for (Index c = 0; c < ncols + m; ++c) {
      const double d = tab(m, c);
      if (d < best) {
        enter = c;
        if (bland) break;
        best = d;
      }
    }
    if (enter < 0) break;

    Index leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (Index r = 0; r < m; ++r) {
      const double p = tab(r, enter);
      if (p <= kPivotTol) continue;
      const double q = tab(r, width - 1) / p;
      if (q < ratio - 1e-14 || (std::abs(q - ratio) <= 1e-14 && leave >= 0 && basis[r] < basis[leave])) {
        ratio = q;
        leave = r;
      }
    }
    if (leave < 0) throw Error(ErrorCode::NumericalFailure, "lp_feasible: unbounded phase-I direction");
    degenerate_run = ratio <= 1e-14 ? degenerate_run + 1 : 0;

    const double piv = tab(leave, enter);
    if (!std::isfinite(piv) || std::abs(piv) <= kPivotTol) {
      throw Error(ErrorCode::NumericalFailure, "lp_feasible: pivot breakdown");
    }
    tab.row(leave) /= piv;
    for (Index r = 0; r <= m; ++r) {
      if (r == leave) continue;
      const double f = tab(r, enter);
      if (f != 0.0) tab.row(r) -= f * tab.row(leave);
    }
    basis[leave] = enter;
  }

  const double infeasibility = -tab(m, width - 1);
  if (!std::isfinite(infeasibility)) throw Error(ErrorCode::NumericalFailure, "lp_feasible: non-finite objective");
  if (infeasibility > tol * rhs_scale) return std::nullopt;

  RVector split = RVector::Zero(ncols);
  for (Index r = 0; r < m; ++r)
    if (basis[r] < ncols) split(basis[r]) = std::max(0.0, tab(r, width - 1));
  RVector x(nvar);
  for (Index j = 0; j < nvar; ++j) x(j) = split(pos_col[j]) - (neg_col[j] >= 0 ? split(neg_col[j]) : 0.0);
  return x;
}

}  // namespace conespec

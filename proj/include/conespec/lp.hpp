#pragma once

#include <optional>
#include <vector>

#include "conespec/core.hpp"

namespace conespec {

/// Feasibility of { A x = b, x_i >= 0 for flagged i, n . x = 1 }.
///
/// Dense two-phase simplex restricted to phase I; returns a feasible point
/// when the phase-I optimum is below `tol` (relative to the scaled
/// right-hand side), std::nullopt otherwise. Throws NumericalFailure when
/// pivoting breaks down or the iteration cap is hit.
std::optional<RVector> lp_feasible(const RMatrix& a_eq, const RVector& b_eq, const std::vector<bool>& nonneg,
                                   const std::optional<RVector>& normalization, double tol = 1e-9);

}  // namespace conespec

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conespec/cones.hpp"

namespace conespec {

/// Operator, cone and optional settings of one problem instance.
struct Instance {
  CMatrix matrix;
  ConeSpec cone;
  std::optional<std::uint64_t> seed;
  /// Named tolerance overrides (key, value), kept in key order.
  std::vector<std::pair<std::string, double>> tolerance_overrides;

  Tolerances tolerances(const Tolerances& base = {}) const;
};

/// positive, strictly-positive, complexified, jordan, transformed, block-reducible.
const std::vector<std::string>& family_names();

/// Deterministic instance for (family, n, seed); throws UnknownFamily.
///
/// positive: complexified nonnegative matrix (30% zeros) on the complexified orthant.
/// strictly-positive: real entries in [0.1, 1] on the real orthant.
/// complexified: the same matrix complexified, on the complexified orthant.
/// jordan: upper triangular, nonnegative, eigenvalue 2 carried by one rank-2 chain.
/// transformed: T A T^{-1} on T K for a complexified instance, T = I + R/(2 ||R||).
/// block-reducible: complexified block diagonal strictly positive blocks.
Instance generate_instance(const std::string& family, Index n, std::uint64_t seed);

/// Sets a named tolerance; throws InvalidArgument for an unknown name.
void set_tolerance(Tolerances& tol, const std::string& name, double value);
/// (name, value) pairs of every tolerance, in name order.
std::vector<std::pair<std::string, double>> tolerance_entries(const Tolerances& tol);

}  // namespace conespec

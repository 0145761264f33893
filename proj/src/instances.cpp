#include "conespec/instances.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

#include "conespec/random.hpp"

namespace conespec {

namespace {

constexpr Index kMaxDim = 128;

using Field = std::variant<double Tolerances::*, int Tolerances::*>;

// Sorted by name so that entries come out in canonical order.
const std::vector<std::pair<std::string, Field>>& tolerance_fields() {
  static const std::vector<std::pair<std::string, Field>> fields = {
      {"arc_grid", &Tolerances::arc_grid},
      {"arc_margin", &Tolerances::arc_margin},
      {"cluster_rel", &Tolerances::cluster_rel},
      {"coeff_floor", &Tolerances::coeff_floor},
      {"cond_cap", &Tolerances::cond_cap},
      {"gap_tol", &Tolerances::gap_tol},
      {"probes", &Tolerances::probes},
      {"tol_chain_rel", &Tolerances::tol_chain_rel},
      {"tol_cone", &Tolerances::tol_cone},
      {"tol_dir", &Tolerances::tol_dir},
      {"tol_exp", &Tolerances::tol_exp},
      {"tol_lp", &Tolerances::tol_lp},
      {"tol_ortho", &Tolerances::tol_ortho},
      {"tol_pair", &Tolerances::tol_pair},
      {"tol_rank_rel", &Tolerances::tol_rank_rel},
  };
  return fields;
}

RMatrix uniform_matrix(CounterRng& rng, Index rows, Index cols, double lo, double hi) {
  RMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

CMatrix normal_complex(CounterRng& rng, Index rows, Index cols) {
  CMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      const double re = rng.normal();
      m(i, j) = Complex(re, rng.normal());
    }
  return m;
}

Instance make(CMatrix a, ConeSpec k, std::uint64_t seed) {
  Instance inst{std::move(a), std::move(k), seed, {}};
  return inst;
}

}  // namespace

Tolerances Instance::tolerances(const Tolerances& base) const {
  Tolerances t = base;
  for (const auto& [name, value] : tolerance_overrides) set_tolerance(t, name, value);
  return t;
}

const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names = {"positive",    "strictly-positive", "complexified",
                                                 "jordan",      "transformed",       "block-reducible"};
  return names;
}

Instance generate_instance(const std::string& family, Index n, std::uint64_t seed) {
  const auto& names = family_names();
  if (std::find(names.begin(), names.end(), family) == names.end())
    throw Error(ErrorCode::UnknownFamily, "unknown family '" + family + "'");
  if (n < 1 || n > kMaxDim) throw Error(ErrorCode::InvalidArgument, "instance size must lie in [1, 128]");
  CounterRng rng(seed, static_cast<std::uint64_t>(n));
  const ConeSpec corthant = ConeSpec::complexified(ConeSpec::orthant(n));

  if (family == "positive") {
    RMatrix b = uniform_matrix(rng, n, n, 0.0, 1.0);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (rng.uniform() < 0.3) b(i, j) = 0.0;
    return make(b.cast<Complex>(), corthant, seed);
  }
  if (family == "strictly-positive") {
    return make(uniform_matrix(rng, n, n, 0.1, 1.0).cast<Complex>(), ConeSpec::orthant(n), seed);
  }
  if (family == "complexified") {
    return make(uniform_matrix(rng, n, n, 0.1, 1.0).cast<Complex>(), corthant, seed);
  }
  if (family == "jordan") {
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "jordan family needs n >= 2");
    RMatrix b = RMatrix::Zero(n, n);
    b(0, 0) = b(1, 1) = 2.0;
    b(0, 1) = 1.0;
    for (Index k = 2; k < n; ++k) b(k, k) = rng.uniform(0.0, 1.5);
    for (Index i = 0; i < n; ++i)
      for (Index j = std::max<Index>(i + 1, 2); j < n; ++j) b(i, j) = rng.uniform(0.0, 0.5);
    return make(b.cast<Complex>(), corthant, seed);
  }
  if (family == "transformed") {
    const CMatrix a = uniform_matrix(rng, n, n, 0.1, 1.0).cast<Complex>();
    const CMatrix r = normal_complex(rng, n, n);
    const double nr = operator_norm(r);
    const CMatrix t = CMatrix::Identity(n, n) + (nr > 0 ? 0.5 / nr : 0.0) * r;
    const CMatrix ta = t * a * t.inverse();
    return make(ta, ConeSpec::transformed(t, corthant), seed);
  }
  // block-reducible
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "block-reducible family needs n >= 2");
  const Index k = n / 2;
  RMatrix b = RMatrix::Zero(n, n);
  b.topLeftCorner(k, k) = uniform_matrix(rng, k, k, 0.1, 1.0);
  b.bottomRightCorner(n - k, n - k) = 0.5 * uniform_matrix(rng, n - k, n - k, 0.1, 1.0);
  return make(b.cast<Complex>(), corthant, seed);
}

void set_tolerance(Tolerances& tol, const std::string& name, double value) {
  for (const auto& [key, field] : tolerance_fields()) {
    if (key != name) continue;
    if (!std::isfinite(value) || value < 0)
      throw Error(ErrorCode::InvalidArgument, "tolerance '" + name + "' must be finite and nonnegative");
    if (std::holds_alternative<int Tolerances::*>(field)) {
      if (value != std::floor(value) || value > 1e9)
        throw Error(ErrorCode::InvalidArgument, "tolerance '" + name + "' must be an integer");
      tol.*std::get<int Tolerances::*>(field) = static_cast<int>(value);
    } else {
      tol.*std::get<double Tolerances::*>(field) = value;
    }
    return;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown tolerance '" + name + "'");
}

std::vector<std::pair<std::string, double>> tolerance_entries(const Tolerances& tol) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [key, field] : tolerance_fields()) {
    if (std::holds_alternative<int Tolerances::*>(field)) {
      out.emplace_back(key, static_cast<double>(tol.*std::get<int Tolerances::*>(field)));
    } else {
      out.emplace_back(key, tol.*std::get<double Tolerances::*>(field));
    }
  }
  return out;
}

}  // namespace conespec

#include "conespec/numeric_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace conespec {

namespace {

constexpr double kLogMax = 709.0;
// Backward-error level used for the pseudo-multiplicity merge radius.
constexpr double kMergeEps = 64.0 * std::numeric_limits<double>::epsilon();

// Pade(13) scaling and squaring, Higham's theta_13. Returns R and L with
// e^a = e^L R; R is rescaled after every squaring so nothing under- or overflows.
std::pair<CMatrix, double> expm_pade13(const CMatrix& a) {
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;
  const Index n = a.rows();
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
  const CMatrix as = a / std::ldexp(1.0, squarings);
  const CMatrix id = CMatrix::Identity(n, n);
  const CMatrix a2 = as * as;
  const CMatrix a4 = a2 * a2;
  const CMatrix a6 = a4 * a2;
  const CMatrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
  const CMatrix u = as * u_inner;
  const CMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  CMatrix r = (v - u).partialPivLu().solve(u + v);
  double log_scale = 0.0;
  for (int i = 0; i < squarings; ++i) {
    r = (r * r).eval();
    log_scale *= 2.0;
    const double m = r.cwiseAbs().maxCoeff();
    if (m > 0.0 && std::isfinite(m)) {
      r /= m;
      log_scale += std::log(m);
    }
  }
  return {r, log_scale};
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

using Group = std::vector<int>;

Complex group_centre(const Group& g, const std::vector<Complex>& eig) {
  Complex s = 0.0;
  for (int i : g) s += eig[i];
  return s / static_cast<double>(g.size());
}

std::vector<Group> components(const std::vector<Complex>& eig, double radius) {
  const int n = static_cast<int>(eig.size());
  UnionFind uf(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(eig[i] - eig[j]) <= radius) uf.unite(i, j);
  std::vector<Group> groups;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = uf.find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[slot[r]].push_back(i);
  }
  return groups;
}

// Orthonormal basis of span(cols) with rank threshold relative to the largest singular value.
CMatrix orthonormal_columns(const CMatrix& cols, double rel) {
  if (cols.cols() == 0) return CMatrix(cols.rows(), 0);
  Eigen::BDCSVD<CMatrix> svd(cols, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Index r = 0;
  const double top = s.size() > 0 ? s(0) : 0.0;
  while (r < s.size() && s(r) > rel * std::max(top, 1e-300)) ++r;
  return svd.matrixU().leftCols(r);
}

std::optional<EigenCluster> build_cluster(const SchurForm& schur, const Group& group,
                                          const std::vector<Complex>& eig, double tol_rank) {
  const Index n = schur.triangular.rows();
  std::vector<bool> select(n, false);
  for (int i : group) select[i] = true;
  SchurForm r = schur;
  reorder_schur(r, select);
  const Index m = static_cast<Index>(group.size());
  const CMatrix q = r.unitary.leftCols(m);
  const CMatrix t11 = r.triangular.topLeftCorner(m, m);
  const Complex mu = t11.diagonal().mean();
  const CMatrix nil = t11 - mu * CMatrix::Identity(m, m);
  // A split defective eigenvalue leaves singular values of the size of its
  // spread. The kernel threshold is widened to that size only when the spread
  // is explained by rounding amplified by the eigenvalue condition numbers.
  double spread = 0.0;
  for (Index i = 0; i < m; ++i) spread = std::max(spread, std::abs(t11(i, i) - mu));
  double kernel_tol = tol_rank;
  double smear_eta = 0.0;  // set when the kernel threshold is widened
  if (m > 1 && spread > tol_rank) {
    Eigen::ComplexEigenSolver<CMatrix> ces(t11);
    const CMatrix& v = ces.eigenvectors();
    Eigen::FullPivLU<CMatrix> lu(v);
    double kappa = std::numeric_limits<double>::infinity();
    if (lu.isInvertible()) {
      const CMatrix vinv = lu.inverse();
      kappa = 0.0;
      for (Index i = 0; i < m; ++i) kappa = std::max(kappa, v.col(i).norm() * vinv.row(i).norm());
    }
    const double eta = kMergeEps * static_cast<double>(n) * std::max(1.0, schur.triangular.norm());
    if (spread <= eta * kappa) {
      kernel_tol = std::max(tol_rank, 4.0 * spread);
      smear_eta = eta;
    }
  }

  // Nested kernels W_k = ker N^k, computed as ker (I - W_{k-1} W_{k-1}^*) N.
  std::vector<CMatrix> levels;
  CMatrix w(m, 0);
  while (w.cols() < m) {
    const CMatrix proj = CMatrix::Identity(m, m) - w * w.adjoint();
    Eigen::BDCSVD<CMatrix> svd(proj * nil, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Index rank = 0;
    while (rank < s.size() && s(rank) > kernel_tol) ++rank;
    const Index kernel = m - rank;
    if (kernel <= w.cols()) return std::nullopt;
    w = svd.matrixV().rightCols(kernel);
    levels.push_back(w);
    if (static_cast<Index>(levels.size()) > m) return std::nullopt;
  }

  const int depth = static_cast<int>(levels.size());
  // kappa is infinite as soon as the block holds a defective eigenvalue, so a
  // widened threshold must also match the chain depth it produced: a Jordan
  // block of size d smears its eigenvalue over (eta ||N||^{d-1})^{1/d}.
  if (smear_eta > 0.0) {
    const double d = depth;
    if (spread > 10.0 * std::pow(smear_eta * std::pow(std::max(1.0, nil.norm()), d - 1.0), 1.0 / d))
      return std::nullopt;
  }
  std::vector<std::vector<CVector>> used(depth + 1);
  std::vector<std::vector<CVector>> local_chains;
  for (int k = depth; k >= 1; --k) {
    const CMatrix& wk = levels[k - 1];
    const Index below = k >= 2 ? levels[k - 2].cols() : 0;
    CMatrix span(m, below + static_cast<Index>(used[k].size()));
    if (below > 0) span.leftCols(below) = levels[k - 2];
    for (std::size_t j = 0; j < used[k].size(); ++j) span.col(below + static_cast<Index>(j)) = used[k][j];
    const CMatrix basis = orthonormal_columns(span, 1e-8);
    const Index fresh = wk.cols() - below - static_cast<Index>(used[k].size());
    if (fresh < 0) return std::nullopt;
    if (fresh == 0) continue;
    const CMatrix complement = wk - basis * (basis.adjoint() * wk);
    Eigen::BDCSVD<CMatrix> svd(complement, Eigen::ComputeThinU);
    for (Index h = 0; h < fresh; ++h) {
      std::vector<CVector> chain;
      CVector v = svd.matrixU().col(h);
      for (int j = 0; j < k; ++j) {
        chain.push_back(v);
        if (j > 0) used[k - j].push_back(v);
        v = (nil * v).eval();
      }
      local_chains.push_back(std::move(chain));
    }
  }

  EigenCluster cluster;
  cluster.eigenvalue = mu;
  for (int i : group) cluster.members.push_back(eig[i]);
  cluster.algebraic = static_cast<int>(m);
  cluster.geometric = static_cast<int>(levels.front().cols());
  cluster.invariant_subspace = SubspaceBasis{n, q};
  for (auto& lc : local_chains) {
    EigenChain chain;
    chain.eigenvalue = mu;
    const CVector last = q * lc.back();
    const CVector normalized = phase_normalized(last);
    // Common scalar taking the eigenvector to its normalized form.
    const Index pivot = [&] {
      Index p = 0;
      normalized.cwiseAbs().maxCoeff(&p);
      return p;
    }();
    const Complex scale = normalized(pivot) / last(pivot);
    for (const auto& v : lc) chain.chain.push_back(scale * (q * v));
    chain.chain.back() = normalized;
    cluster.chains.push_back(std::move(chain));
  }
  return cluster;
}

}  // namespace

SubspaceBasis SubspaceBasis::empty_in(Index n) { return SubspaceBasis{n, CMatrix(n, 0)}; }

SubspaceBasis SubspaceBasis::whole(Index n) { return SubspaceBasis{n, CMatrix::Identity(n, n)}; }

SubspaceBasis SubspaceBasis::span(const CMatrix& vectors, double rank_tol) {
  return SubspaceBasis{vectors.rows(), orthonormal_columns(vectors, rank_tol)};
}

SubspaceBasis SubspaceBasis::from_orthonormal(CMatrix q, double tol_ortho) {
  const Index k = q.cols();
  const double err = k == 0 ? 0.0 : (q.adjoint() * q - CMatrix::Identity(k, k)).norm();
  if (err > tol_ortho * std::max<double>(1.0, static_cast<double>(k)) * 100.0) {
    throw Error(ErrorCode::InvalidArgument, "subspace basis is not orthonormal");
  }
  const Index n = q.rows();
  return SubspaceBasis{n, std::move(q)};
}

int EigenCluster::max_rank() const {
  int r = 0;
  for (const auto& c : chains) r = std::max(r, c.rank());
  return r;
}

Index SpectralData::dim() const {
  Index n = 0;
  for (const auto& c : clusters) n += c.algebraic;
  return n;
}

std::size_t SpectralData::dominant_index() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < clusters.size(); ++i) {
    const double ai = std::abs(clusters[i].eigenvalue);
    const double ab = std::abs(clusters[best].eigenvalue);
    if (ai > ab + cluster_radius ||
        (std::abs(ai - ab) <= cluster_radius && clusters[i].eigenvalue.real() > clusters[best].eigenvalue.real())) {
      best = i;
    }
  }
  return best;
}

std::optional<std::size_t> SpectralData::find(Complex mu) const {
  std::optional<std::size_t> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    double reach = cluster_radius;
    for (const auto& m : clusters[i].members)
      reach = std::max(reach, std::abs(m - clusters[i].eigenvalue) + cluster_radius);
    const double d = std::abs(mu - clusters[i].eigenvalue);
    if (d <= reach && d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

double operator_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::BDCSVD<CMatrix> svd(a);
  return svd.singularValues()(0);
}

SchurForm complex_schur(const CMatrix& a) {
  require_square(a, "complex_schur");
  if (!a.allFinite()) throw Error(ErrorCode::InvalidArgument, "matrix has non-finite entries");
  Eigen::ComplexSchur<CMatrix> schur(a.rows());
  schur.setMaxIterations(std::max<Index>(30 * a.rows(), 300));
  schur.compute(a);
  if (schur.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "complex Schur iteration did not converge");
  return SchurForm{schur.matrixU(), schur.matrixT()};
}

void reorder_schur(SchurForm& schur, const std::vector<bool>& select) {
  CMatrix& t = schur.triangular;
  CMatrix& u = schur.unitary;
  const Index n = t.rows();
  std::vector<bool> flags = select;
  Index pos = 0;
  for (Index k = 0; k < n; ++k) {
    if (!flags[k]) continue;
    for (Index j = k - 1; j >= pos; --j) {
      Eigen::JacobiRotation<Complex> g;
      g.makeGivens(t(j, j + 1), t(j + 1, j + 1) - t(j, j));
      t.applyOnTheLeft(j, j + 1, g.adjoint());
      t.applyOnTheRight(j, j + 1, g);
      u.applyOnTheRight(j, j + 1, g);
      t(j + 1, j) = 0.0;
      std::swap(flags[j], flags[j + 1]);
    }
    ++pos;
  }
}

SpectralData eigen_spectrum(const CMatrix& a, const Tolerances& tol) {
  require_square(a, "eigen_spectrum");
  const SchurForm schur = complex_schur(a);
  const Index n = a.rows();
  std::vector<Complex> eig(n);
  for (Index i = 0; i < n; ++i) eig[i] = schur.triangular(i, i);

  SpectralData out;
  out.norm = operator_norm(a);
  for (const auto& e : eig) out.spectral_radius = std::max(out.spectral_radius, std::abs(e));
  out.cluster_radius = tol.cluster_rel * std::max(1.0, out.spectral_radius);
  out.tol_rank = tol.tol_rank_rel * std::max(out.norm, std::numeric_limits<double>::min());

  const std::vector<Group> base = components(eig, out.cluster_radius);
  // The same candidate group recurs across merge radii.
  std::map<Group, std::optional<EigenCluster>> built;
  auto cluster_of = [&](const Group& g) -> const std::optional<EigenCluster>& {
    auto it = built.find(g);
    if (it == built.end()) it = built.emplace(g, build_cluster(schur, g, eig, out.tol_rank)).first;
    return it->second;
  };

  // Pseudo-multiplicity merge: a defective eigenvalue of multiplicity m is
  // smeared over a disc of radius ~ ||A|| eps^{1/m}. A single-linkage
  // component at that radius is merged when it holds at least m eigenvalues.
  std::vector<std::vector<int>> merged;  // indices into base
  for (int i = 0; i < static_cast<int>(base.size()); ++i) merged.push_back({i});
  const double scale = std::max(out.norm, 1.0);
  auto members_of = [&](const std::vector<int>& mg) {
    Group g;
    for (int b : mg) g.insert(g.end(), base[b].begin(), base[b].end());
    return g;
  };
  for (Index k = n; k >= 2; --k) {
    const double radius =
        std::max(out.cluster_radius, scale * std::pow(kMergeEps * static_cast<double>(n), 1.0 / static_cast<double>(k)));
    const int count = static_cast<int>(merged.size());
    std::vector<Complex> centres(count);
    for (int i = 0; i < count; ++i) centres[i] = group_centre(members_of(merged[i]), eig);
    UnionFind uf(count);
    for (int i = 0; i < count; ++i)
      for (int j = i + 1; j < count; ++j)
        if (std::abs(centres[i] - centres[j]) <= radius) uf.unite(i, j);
    std::vector<std::vector<int>> comp(count);
    for (int i = 0; i < count; ++i) comp[uf.find(i)].push_back(i);
    std::vector<std::vector<int>> next;
    for (const auto& c : comp) {
      if (c.empty()) continue;
      std::size_t total = 0;
      for (int i : c) total += members_of(merged[i]).size();
      std::vector<int> joined;
      if (c.size() > 1 && total >= static_cast<std::size_t>(k)) {
        for (int i : c) joined.insert(joined.end(), merged[i].begin(), merged[i].end());
        Group all = members_of(joined);
        std::sort(all.begin(), all.end());
        // Only merges that yield a numerically nilpotent block survive; smaller k may still merge the parts.
        if (!cluster_of(all)) joined.clear();
      }
      if (!joined.empty()) {
        next.push_back(std::move(joined));
      } else {
        for (int i : c) next.push_back(merged[i]);
      }
    }
    merged = std::move(next);
  }

  for (const auto& mg : merged) {
    Group all;
    for (int b : mg) all.insert(all.end(), base[b].begin(), base[b].end());
    std::sort(all.begin(), all.end());
    if (const auto& c = cluster_of(all)) {
      out.clusters.push_back(*c);
      continue;
    }
    // Not numerically nilpotent as a whole: fall back to the tight components, then singletons.
    for (int b : mg) {
      if (const auto& c = cluster_of(base[b])) {
        out.clusters.push_back(*c);
        continue;
      }
      for (int i : base[b]) {
        auto c = build_cluster(schur, Group{i}, eig, out.tol_rank);
        if (!c) throw Error(ErrorCode::NumericalFailure, "singleton cluster failed");
        out.clusters.push_back(std::move(*c));
      }
    }
  }

  out.spectral_radius = 0.0;
  for (const auto& c : out.clusters) out.spectral_radius = std::max(out.spectral_radius, std::abs(c.eigenvalue));
  std::sort(out.clusters.begin(), out.clusters.end(), [](const EigenCluster& x, const EigenCluster& y) {
    const double ax = std::abs(x.eigenvalue), ay = std::abs(y.eigenvalue);
    if (ax != ay) return ax > ay;
    if (x.eigenvalue.real() != y.eigenvalue.real()) return x.eigenvalue.real() > y.eigenvalue.real();
    return x.eigenvalue.imag() > y.eigenvalue.imag();
  });
  return out;
}

JordanForm assemble_jordan(const SpectralData& spectrum) {
  const Index n = spectrum.dim();
  JordanForm jf{CMatrix::Zero(n, n), CMatrix::Zero(n, n)};
  Index col = 0;
  for (const auto& cluster : spectrum.clusters) {
    for (const auto& chain : cluster.chains) {
      const int r = chain.rank();
      for (int j = 0; j < r; ++j) {
        jf.basis.col(col + j) = chain.chain[r - 1 - j];
        jf.jordan(col + j, col + j) = chain.eigenvalue;
        if (j > 0) jf.jordan(col + j - 1, col + j) = 1.0;
      }
      col += r;
    }
  }
  return jf;
}

CVector ScaledVector::value() const {
  if (log_scale > kLogMax) throw Error(ErrorCode::Overflow, "flow magnitude exceeds representable range");
  return std::exp(log_scale) * direction;
}

ScaledVector flow_apply_scaled(const CMatrix& a, double t, const CVector& x0) {
  require_square(a, "flow_apply");
  require_dim(x0.size(), a.rows(), "flow_apply");
  if (!std::isfinite(t)) throw Error(ErrorCode::InvalidArgument, "flow time must be finite");
  const double nx = x0.norm();
  if (nx == 0.0) return ScaledVector{x0, 0.0};
  if (t == 0.0) return ScaledVector{x0 / nx, std::log(nx)};
  const Index n = a.rows();
  double shift = 0.0;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  if (std::abs(t) * norm1 > 1.0) {
    Eigen::ComplexEigenSolver<CMatrix> ces(a, false);
    if (ces.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "eigenvalues for flow shift");
    const auto re = ces.eigenvalues().real();
    shift = t > 0 ? re.maxCoeff() : re.minCoeff();
  }
  const auto [e, log_e] = expm_pade13((a - shift * CMatrix::Identity(n, n)) * t);
  const CVector y = e * (x0 / nx);
  if (!y.allFinite()) throw Error(ErrorCode::Overflow, "shift-normalized flow overflowed");
  const double ny = y.norm();
  if (ny == 0.0) return ScaledVector{y, -std::numeric_limits<double>::infinity()};
  return ScaledVector{y / ny, shift * t + log_e + std::log(ny) + std::log(nx)};
}

CVector flow_apply(const CMatrix& a, double t, const CVector& x0) {
  const ScaledVector s = flow_apply_scaled(a, t, x0);
  if (s.direction.size() > 0 && s.direction.norm() == 0.0) return s.direction;
  return s.value();
}

InvariantSplit invariant_split(const CMatrix& a, double rho, double tol) {
  require_square(a, "invariant_split");
  const SchurForm schur = complex_schur(a);
  const Index n = a.rows();
  double r_sigma = 0.0;
  for (Index i = 0; i < n; ++i) r_sigma = std::max(r_sigma, std::abs(schur.triangular(i, i)));
  std::vector<bool> outer(n), inner(n);
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    const double m = std::abs(schur.triangular(i, i));
    if (std::abs(m - rho) <= tol * r_sigma) {
      throw Error(ErrorCode::SplitOnSpectrum, "eigenvalue of modulus " + std::to_string(m) + " lies on the split circle");
    }
    outer[i] = m > rho;
    inner[i] = !outer[i];
    if (outer[i]) ++k;
  }
  SchurForm so = schur;
  reorder_schur(so, outer);
  SchurForm si = schur;
  reorder_schur(si, inner);
  return InvariantSplit{SubspaceBasis{n, si.unitary.leftCols(n - k)}, SubspaceBasis{n, so.unitary.leftCols(k)}};
}

Multiplicities multiplicities(const CMatrix& a, const SpectralData& spectrum, Complex mu) {
  const auto idx = spectrum.find(mu);
  if (!idx) throw Error(ErrorCode::NotAnEigenvalue, "no eigenvalue cluster near the requested value");
  const EigenCluster& c = spectrum.clusters[*idx];
  const Index n = a.rows();
  Eigen::BDCSVD<CMatrix> svd(a - c.eigenvalue * CMatrix::Identity(n, n));
  const auto& s = svd.singularValues();
  int kernel = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) <= spectrum.tol_rank) ++kernel;
  kernel = std::clamp(kernel, 1, c.algebraic);
  return Multiplicities{c.algebraic, kernel};
}

Multiplicities multiplicities(const CMatrix& a, Complex mu, const Tolerances& tol) {
  return multiplicities(a, eigen_spectrum(a, tol), mu);
}

CVector phase_normalized(const CVector& v) {
  const double nv = v.norm();
  if (nv == 0.0) return v;
  CVector u = v / nv;
  const double top = u.cwiseAbs().maxCoeff();
  Index pivot = 0;
  while (std::abs(u(pivot)) < top * (1.0 - 1e-8)) ++pivot;
  const Complex p = u(pivot);
  u *= std::conj(p) / std::abs(p);
  u(pivot) = std::abs(u(pivot));
  return u;
}

double projective_angle(const CVector& u, const CVector& v) {
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return M_PI / 2;
  const CVector a = u / nu, b = v / nv;
  const Complex ip = a.dot(b);
  const double perp = (b - a * ip).norm();
  return std::atan2(perp, std::abs(ip));
}

}  // namespace conespec

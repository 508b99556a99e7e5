#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hillriesz/common.hpp"
#include "hillriesz/lapack.hpp"
#include "hillriesz/potential.hpp"
#include "hillriesz/trend.hpp"

namespace hillriesz {

/// Truncated Fourier-basis matrix of -y'' + q y on span{e^{i(2k+theta)pi x} : |k| <= K}.
/// Row/column index of slot k is k + K. The spectral shift is not on the diagonal.
struct GalerkinMatrix {
  Bc bc = Bc::periodic;
  int K = 0;
  cplx shift{};
  Eigen::MatrixXcd entries;

  int size() const { return 2 * K + 1; }
  int index(int slot) const { return slot + K; }
  int slot(int index) const { return index - K; }
};

/// Smallest K with comfortable margins for pairs up to m_max.
inline int recommended_truncation(const PotentialModel& q, int m_max) {
  return std::max(2 * m_max + 16, 4 * q.max_frequency());
}

inline GalerkinMatrix build_matrix(const PotentialModel& q, Bc bc, int K) {
  if (K < 1 || 2 * K < q.max_frequency()) throw TruncationTooSmall(K, std::max(1, (q.max_frequency() + 1) / 2));
  GalerkinMatrix A;
  A.bc = bc;
  A.K = K;
  A.shift = q.spectral_shift();
  const int n = A.size();
  A.entries = Eigen::MatrixXcd::Zero(n, n);
  for (int k = -K; k <= K; ++k) A.entries(A.index(k), A.index(k)) = free_eigenvalue(k, bc);
  for (auto [f, c] : q.coefficients()) {
    // A[k, l] += q_{k-l}
    for (int l = -K; l <= K; ++l) {
      const int k = l + f;
      if (k < -K || k > K) continue;
      A.entries(A.index(k), A.index(l)) += c;
    }
  }
  return A;
}

struct Spectrum {
  Eigen::VectorXcd values;   // eigenvalues including the spectral shift
  Eigen::MatrixXcd vectors;  // unit-norm right eigenvectors, column i for values[i]
  lapack::Schur schur;       // Schur form of the unshifted matrix
  cplx shift{};
  double matrix_norm = 0;    // 1-norm of the unshifted matrix
  double max_residual = 0;   // max ||A w - lambda w|| / ||A||
};

/// Dense non-Hermitian eigendecomposition with a backward-stability check on every pair.
inline Spectrum solve_spectrum(const GalerkinMatrix& A, double tol_eig = 1e-10) {
  if (!A.entries.allFinite()) throw SolverFailure("matrix has non-finite entries", std::numeric_limits<double>::infinity());
  Spectrum s;
  s.shift = A.shift;
  s.schur = lapack::complex_schur(A.entries);
  s.vectors = lapack::schur_eigenvectors(s.schur);
  s.matrix_norm = A.entries.cwiseAbs().colwise().sum().maxCoeff();
  const auto n = A.entries.rows();
  s.values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.vectors.col(i).normalize();
    const cplx lambda = s.schur.T(i, i);
    const double r = (A.entries * s.vectors.col(i) - lambda * s.vectors.col(i)).norm() /
                     std::max(s.matrix_norm, 1.0);
    s.max_residual = std::max(s.max_residual, r);
    s.values(i) = lambda + A.shift;
  }
  if (!(s.max_residual <= tol_eig))
    throw SolverFailure("eigenpair residual exceeds tolerance", s.max_residual);
  return s;
}

// ---------------------------------------------------------------------------
// u/v coefficients

struct UvCoefficients {
  cplx u{};
  cplx v{};
  double tail_norm = 0;
};

/// Coefficients of a unit vector at the slots of frequencies +(2m+theta)pi and -(2m+theta)pi.
inline UvCoefficients uv_coefficients(const Eigen::VectorXcd& vec, int m, Bc bc) {
  const int K = static_cast<int>(vec.size() - 1) / 2;
  UvCoefficients r;
  r.u = vec(m + K);
  r.v = vec(-m - theta(bc) + K);
  const double t2 = 1.0 - std::norm(r.u) - std::norm(r.v);
  r.tail_norm = std::sqrt(std::max(t2, 0.0));
  return r;
}

// ---------------------------------------------------------------------------
// Pairing and multiplicity

enum class Multiplicity { simple_pair, double_geometric, jordan_chain };

inline std::string to_string(Multiplicity c) {
  switch (c) {
    case Multiplicity::simple_pair: return "SimplePair";
    case Multiplicity::double_geometric: return "DoubleGeometric2";
    case Multiplicity::jordan_chain: return "JordanChain";
  }
  return "";
}

struct SpectralPair {
  int m = 0;
  std::array<cplx, 2> lambda{};  // including the spectral shift
  std::array<Eigen::VectorXcd, 2> vectors;
  Multiplicity cls = Multiplicity::simple_pair;
  bool indeterminate = false;
  std::array<cplx, 2> u{};
  std::array<cplx, 2> v{};
  std::array<double, 2> tail_norm{};
  std::optional<Eigen::VectorXcd> associated_vector;  // chain-scaled, present iff JordanChain
  double chain_residual = 0;
  double split = 0;          // |lambda_1 - lambda_2| before classification
  double schur_offdiag = 0;  // |t| of the restricted 2x2 Schur block (clustered pairs only)
  cplx shift{};              // spectral shift included in lambda

  /// lambda_j minus shift minus the free eigenvalue ((2m+theta)pi)^2.
  cplx deviation(int j, Bc bc) const { return lambda[j] - shift - free_eigenvalue(m, bc); }

  bool is_simple() const { return cls == Multiplicity::simple_pair && !indeterminate; }
};

struct Anomaly {
  cplx value{};
  int nearest_m = 0;
};

struct PairingResult {
  Bc bc = Bc::periodic;
  int K = 0;
  cplx shift{};
  double tol_cluster = 0;
  std::vector<SpectralPair> pairs;
  std::vector<Anomaly> anomalies;
  std::vector<cplx> low_modes;  // eigenvalues attached to index 0
};

/// Half the distance between the free eigenvalues of pairs m and m-1 (m = 0 uses the upper neighbour).
inline double pairing_gap(int m, Bc bc) {
  const int lower = std::max(m - 1, 0);
  const double below = free_eigenvalue(m, bc) - free_eigenvalue(lower, bc);
  const double above = free_eigenvalue(m + 1, bc) - free_eigenvalue(m, bc);
  return 0.5 * (m == 0 ? above : below);
}

/// Resolution scale below which two computed eigenvalues cannot be told apart.
inline double cluster_tolerance(double matrix_norm, const Thresholds& th) {
  return th.cluster_factor * std::sqrt(std::numeric_limits<double>::epsilon() * std::max(matrix_norm, 1.0));
}

namespace detail {

inline void fill_uv(SpectralPair& p, Bc bc) {
  for (int j = 0; j < 2; ++j) {
    const auto c = uv_coefficients(p.vectors[j], p.m, bc);
    p.u[j] = c.u;
    p.v[j] = c.v;
    p.tail_norm[j] = c.tail_norm;
  }
}

}  // namespace detail

/// Classifies the pair held at Schur positions (i1, i2) and fills class, vectors and eigenvalues.
///
/// Pairs whose eigenvalues differ by more than the cluster tolerance are simple. Otherwise the
/// two Schur positions are moved to the front, giving an orthonormal basis Q of the invariant
/// subspace and the restricted block [[l1, t], [0, l2]]. A large t against both the resolution
/// scale and the traceless block norm marks a Jordan chain; the block is then replaced by its
/// nearest nilpotent-plus-scalar form, from which eigenvector and associated vector are taken.
inline SpectralPair classify_multiplicity(const Spectrum& s, const GalerkinMatrix& A, int m, int i1, int i2,
                                          const Thresholds& th = {}) {
  SpectralPair p;
  p.m = m;
  p.shift = A.shift;
  const double tol_cluster = cluster_tolerance(s.matrix_norm, th);
  const cplx l1 = s.values(i1), l2 = s.values(i2);
  p.split = std::abs(l1 - l2);
  if (p.split > tol_cluster) {
    p.cls = Multiplicity::simple_pair;
    const bool swap = std::make_pair(l2.real(), l2.imag()) < std::make_pair(l1.real(), l1.imag());
    const int a = swap ? i2 : i1, b = swap ? i1 : i2;
    p.lambda = {s.values(a), s.values(b)};
    p.vectors = {s.vectors.col(a), s.vectors.col(b)};
    detail::fill_uv(p, A.bc);
    return p;
  }

  lapack::Schur sch = s.schur;
  const int lo = std::min(i1, i2), hi = std::max(i1, i2);
  lapack::reorder(sch, lo, 0);
  lapack::reorder(sch, hi, 1);
  const Eigen::Matrix2cd B = sch.T.topLeftCorner(2, 2);
  const Eigen::MatrixXcd Q = sch.U.leftCols(2);
  const cplx mu = 0.5 * (B(0, 0) + B(1, 1));
  const cplx half = 0.5 * (B(0, 0) - B(1, 1));
  const cplx t = B(0, 1);
  p.schur_offdiag = std::abs(t);

  double sep = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 2; k < sch.T.rows(); ++k) sep = std::min(sep, std::abs(sch.T(k, k) - mu));
  if (sep < 1e-8 * (1.0 + std::abs(mu))) p.indeterminate = true;

  const double traceless_norm = std::sqrt(2.0 * std::norm(half) + std::norm(t));
  const bool jordan = std::abs(t) > tol_cluster && std::abs(t) >= th.tol_rank * traceless_norm;
  if (!jordan) {
    p.cls = Multiplicity::double_geometric;
    p.lambda = {B(0, 0) + A.shift, B(1, 1) + A.shift};
    p.vectors = {Q.col(0), Q.col(1)};
    detail::fill_uv(p, A.bc);
    return p;
  }

  // nearest traceless nilpotent block N = [[h, t], [-h^2/t, -h]]; null vector y, complement y_perp
  p.cls = Multiplicity::jordan_chain;
  Eigen::Vector2cd y(t, -half);
  y.normalize();
  Eigen::Vector2cd y_perp(std::conj(half), std::conj(t));
  y_perp.normalize();
  const Eigen::VectorXcd eigvec = Q * y;
  const Eigen::VectorXcd direction = Q * y_perp;
  const Eigen::VectorXcd image = A.entries * direction - mu * direction;
  // scale alpha minimises ||alpha (A - mu) d - eigvec|| with d orthogonal to eigvec
  const cplx alpha = image.dot(eigvec) / image.squaredNorm();
  const Eigen::VectorXcd assoc = alpha * direction;
  p.chain_residual = (A.entries * assoc - mu * assoc - eigvec).norm();
  p.lambda = {mu + A.shift, mu + A.shift};
  p.vectors = {eigvec, direction};
  p.associated_vector = assoc;
  detail::fill_uv(p, A.bc);
  return p;
}

/// Assigns to every m = 1..m_max the two eigenvalues within pairing_gap(m)/2 of ((2m+theta)pi)^2.
inline PairingResult pair_eigenvalues(const Spectrum& s, const GalerkinMatrix& A, int m_max,
                                      const Thresholds& th = {}, int margin = 16) {
  const int required = 2 * m_max + margin;
  if (A.K < required) throw TruncationTooSmall(A.K, required);
  PairingResult r;
  r.bc = A.bc;
  r.K = A.K;
  r.shift = A.shift;
  r.tol_cluster = cluster_tolerance(s.matrix_norm, th);
  const auto n = s.values.size();
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::vector<int> offending;
  for (int m = 1; m <= m_max; ++m) {
    const double center = free_eigenvalue(m, A.bc);
    const double radius = 0.5 * pairing_gap(m, A.bc);
    std::vector<int> inside;
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(s.values(i) - A.shift - center) < radius) inside.push_back(static_cast<int>(i));
    if (inside.size() != 2) {
      offending.push_back(m);
      continue;
    }
    for (int i : inside) used[static_cast<std::size_t>(i)] = true;
    r.pairs.push_back(classify_multiplicity(s, A, m, inside[0], inside[1], th));
  }
  if (!offending.empty()) throw PairingAmbiguity(offending);

  const double top = free_eigenvalue(m_max, A.bc) + 0.5 * pairing_gap(m_max + 1, A.bc);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (used[static_cast<std::size_t>(i)]) continue;
    const cplx d = s.values(i) - A.shift;
    if (d.real() > top) continue;
    const double w = std::sqrt(std::max(d.real(), 0.0)) / pi;
    const int nearest = std::max(0, static_cast<int>(std::lround((w - theta(A.bc)) / 2.0)));
    if (nearest == 0)
      r.low_modes.push_back(s.values(i));
    else
      r.anomalies.push_back({s.values(i), nearest});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Normal systems

struct NormalSystem {
  std::vector<SpectralPair> pairs;
  int jordan_count = 0;
  int lowest_index = 0;
  int highest_index = 0;
  std::vector<int> excluded;
  std::vector<std::string> warnings;

  /// Unit-norm root functions, two per pair, in increasing m.
  std::vector<Eigen::VectorXcd> root_functions(int m_from = 0) const {
    std::vector<Eigen::VectorXcd> out;
    for (const auto& p : pairs) {
      if (p.m < m_from) continue;
      out.push_back(p.vectors[0].normalized());
      out.push_back(p.vectors[1].normalized());
    }
    return out;
  }

  int jordan_count_from(int m_from) const {
    int c = 0;
    for (const auto& p : pairs)
      if (p.m >= m_from && p.cls == Multiplicity::jordan_chain) ++c;
    return c;
  }
};

inline NormalSystem normal_system(const std::vector<SpectralPair>& pairs) {
  NormalSystem ns;
  for (const auto& p : pairs) {
    if (p.indeterminate) {
      ns.excluded.push_back(p.m);
      ns.warnings.push_back("classification indeterminate at m=" + std::to_string(p.m));
      continue;
    }
    ns.pairs.push_back(p);
    if (p.cls == Multiplicity::jordan_chain) ++ns.jordan_count;
  }
  if (!ns.pairs.empty()) {
    ns.lowest_index = ns.pairs.front().m;
    ns.highest_index = ns.pairs.back().m;
  }
  return ns;
}

/// Build, solve and pair in one call.
struct GalerkinRun {
  GalerkinMatrix matrix;
  Spectrum spectrum;
  PairingResult pairing;
};

inline GalerkinRun run_galerkin(const PotentialModel& q, Bc bc, int m_max, int K = 0, const Thresholds& th = {},
                                double tol_eig = 1e-10) {
  if (K <= 0) K = recommended_truncation(q, m_max);
  const int required = 2 * q.max_frequency() + 8;
  if (K < required) throw TruncationTooSmall(K, required);
  GalerkinRun run;
  run.matrix = build_matrix(q, bc, K);
  run.spectrum = solve_spectrum(run.matrix, tol_eig);
  run.pairing = pair_eigenvalues(run.spectrum, run.matrix, m_max, th);
  return run;
}

}  // namespace hillriesz

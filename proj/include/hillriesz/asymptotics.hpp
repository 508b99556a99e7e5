#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hillriesz/common.hpp"
#include "hillriesz/galerkin.hpp"
#include "hillriesz/parallel.hpp"
#include "hillriesz/potential.hpp"
#include "hillriesz/trend.hpp"

namespace hillriesz {

// ---------------------------------------------------------------------------
// Correction sums and residuals of the iterated eigenfunction relations.
//
// With Lambda_s = lambda - ((2s+theta)pi)^2 for basis slot s, the unprimed expansion starts
// at slot s0 = m and isolates the partner frequency d = 2m+theta; the primed expansion starts
// at s0 = -(m+theta) with d = -(2m+theta). Every index m_i is nonzero and every partial sum
// m_1 + ... + m_k avoids {0, d}; the visited slots are s0 - m_1, s0 - m_1 - m_2, ...

enum class CorrectionKind { a1, a2, b1, b2, a1_primed, a2_primed, b1_primed, b2_primed };

inline std::string to_string(CorrectionKind k) {
  switch (k) {
    case CorrectionKind::a1: return "a1";
    case CorrectionKind::a2: return "a2";
    case CorrectionKind::b1: return "b1";
    case CorrectionKind::b2: return "b2";
    case CorrectionKind::a1_primed: return "a1'";
    case CorrectionKind::a2_primed: return "a2'";
    case CorrectionKind::b1_primed: return "b1'";
    case CorrectionKind::b2_primed: return "b2'";
  }
  return "";
}

struct SumOptions {
  int trunc = 2000;           // |m_i| <= trunc
  int slot_limit = -1;        // if >= 0, every visited slot must satisfy |s| <= slot_limit
  double resonance_floor = 1e-8;  // relative to 1 + |lambda|
};

struct SumValue {
  cplx value{};
  double tail_bound = 0;  // bound on the terms beyond trunc (0 when the support is inside trunc)
};

namespace detail {

/// Dense coefficient lookup over the Fourier model.
class CoefficientTable {
 public:
  explicit CoefficientTable(const PotentialModel& q) : F_(q.max_frequency()) {
    dense_.assign(static_cast<std::size_t>(2 * F_ + 1), cplx{});
    for (auto [k, c] : q.coefficients()) dense_[static_cast<std::size_t>(k + F_)] = c;
    for (auto [k, c] : q.coefficients()) support_.push_back(k);
  }
  cplx operator()(int k) const { return std::abs(k) > F_ ? cplx{} : dense_[static_cast<std::size_t>(k + F_)]; }
  const std::vector<int>& support() const { return support_; }
  int max_frequency() const { return F_; }

 private:
  int F_;
  std::vector<cplx> dense_;
  std::vector<int> support_;
};

struct Expansion {
  int s0 = 0;
  int d = 0;
};

inline Expansion expansion(int m, Bc bc, bool primed) {
  const int n = partner_offset(m, bc);
  return primed ? Expansion{-m - theta(bc), -n} : Expansion{m, n};
}

class Denominators {
 public:
  Denominators(cplx lambda, Bc bc, const SumOptions& opt)
      : lambda_(lambda), bc_(bc), floor_(opt.resonance_floor * (1.0 + std::abs(lambda))), limit_(opt.slot_limit) {}

  bool admissible(int slot) const { return limit_ < 0 || std::abs(slot) <= limit_; }

  cplx inverse(int slot) const {
    const cplx L = lambda_ - free_eigenvalue(slot, bc_);
    if (std::abs(L) < floor_) throw NearResonance(slot, std::abs(L));
    return 1.0 / L;
  }

 private:
  cplx lambda_;
  Bc bc_;
  double floor_;
  int limit_;
};

inline bool allowed(int partial, int d) { return partial != 0 && partial != d; }

/// Sum over |k| > T of 1 / |lambda - free(s0 - k)|, bounded with the free-operator spacing.
inline double single_tail(const PotentialModel& q, const Expansion& e, int T) {
  if (T >= q.max_frequency()) return 0.0;
  const int n = std::abs(e.d);
  if (T <= n + 1) return std::numeric_limits<double>::infinity();
  return 2.0 / (4.0 * pi * pi * (T - n - 1));
}

}  // namespace detail

/// Truncated correction sum of the given kind at spectral parameter lambda (shift excluded).
inline SumValue correction_sum(const PotentialModel& q, cplx lambda, int m, Bc bc, CorrectionKind kind,
                               const SumOptions& opt = {}) {
  const bool primed = kind == CorrectionKind::a1_primed || kind == CorrectionKind::a2_primed ||
                      kind == CorrectionKind::b1_primed || kind == CorrectionKind::b2_primed;
  const bool second = kind == CorrectionKind::a2 || kind == CorrectionKind::b2 ||
                      kind == CorrectionKind::a2_primed || kind == CorrectionKind::b2_primed;
  const bool is_b = kind == CorrectionKind::b1 || kind == CorrectionKind::b2 ||
                    kind == CorrectionKind::b1_primed || kind == CorrectionKind::b2_primed;
  const auto e = detail::expansion(m, bc, primed);
  const int closing = is_b ? e.d : 0;  // the last coefficient index closes the sum at this total
  const detail::CoefficientTable c(q);
  const detail::Denominators den(lambda, bc, opt);
  SumValue out;
  if (q.is_zero()) return out;

  for (int m1 : c.support()) {
    if (std::abs(m1) > opt.trunc || !detail::allowed(m1, e.d)) continue;
    const int s1 = e.s0 - m1;
    if (!den.admissible(s1)) continue;
    const cplx f1 = c(m1) * den.inverse(s1);
    if (!second) {
      out.value += f1 * c(closing - m1);
      continue;
    }
    for (int m2 : c.support()) {
      if (std::abs(m2) > opt.trunc || !detail::allowed(m1 + m2, e.d)) continue;
      const int s2 = s1 - m2;
      if (!den.admissible(s2)) continue;
      const cplx last = c(closing - m1 - m2);
      if (last == cplx{}) continue;
      out.value += f1 * c(m2) * last * den.inverse(s2);
    }
  }
  const double M = q.coeff_sup();
  const double t1 = detail::single_tail(q, e, opt.trunc);
  out.tail_bound = second ? 2.0 * M * M * M * t1 * (2.0 * t1 + 1.0) : M * M * t1;
  if (t1 == 0.0) out.tail_bound = 0.0;
  return out;
}

/// (q Psi) at basis slot s, computed as the exact finite convolution of q with the coefficient vector.
inline std::vector<cplx> multiply_by_potential(const PotentialModel& q, const Eigen::VectorXcd& psi, int& offset) {
  const int K = static_cast<int>(psi.size() - 1) / 2;
  const int F = q.max_frequency();
  offset = K + F;
  std::vector<cplx> out(static_cast<std::size_t>(2 * offset + 1), cplx{});
  for (auto [k, c] : q.coefficients())
    for (int l = -K; l <= K; ++l) out[static_cast<std::size_t>(l + k + offset)] += c * psi(l + K);
  return out;
}

enum class ResidualSide { unprimed, primed };

/// Signed residual R_order of the iterated relation for eigenvector psi at eigenvalue lambda (shift excluded).
inline cplx residual_sum(const PotentialModel& q, cplx lambda, const Eigen::VectorXcd& psi, int m, Bc bc, int order,
                         ResidualSide side, const SumOptions& opt = {}) {
  if (order != 1 && order != 2) throw ConfigError("residual order must be 1 or 2");
  if (q.is_zero()) return {};
  const auto e = detail::expansion(m, bc, side == ResidualSide::primed);
  const detail::CoefficientTable c(q);
  const detail::Denominators den(lambda, bc, opt);
  int offset = 0;
  const auto qpsi = multiply_by_potential(q, psi, offset);
  auto qpsi_at = [&](int s) { return std::abs(s) > offset ? cplx{} : qpsi[static_cast<std::size_t>(s + offset)]; };
  const auto& sup = c.support();
  cplx total{};
  for (int m1 : sup) {
    if (std::abs(m1) > opt.trunc || !detail::allowed(m1, e.d)) continue;
    const int s1 = e.s0 - m1;
    if (!den.admissible(s1)) continue;
    const cplx f1 = c(m1) * den.inverse(s1);
    for (int m2 : sup) {
      if (std::abs(m2) > opt.trunc || !detail::allowed(m1 + m2, e.d)) continue;
      const int s2 = s1 - m2;
      if (!den.admissible(s2)) continue;
      const cplx f2 = f1 * c(m2) * den.inverse(s2);
      if (order == 1) {
        total += f2 * qpsi_at(s2);
        continue;
      }
      for (int m3 : sup) {
        if (std::abs(m3) > opt.trunc || !detail::allowed(m1 + m2 + m3, e.d)) continue;
        const int s3 = s2 - m3;
        if (!den.admissible(s3)) continue;
        total += f2 * c(m3) * den.inverse(s3) * qpsi_at(s3);
      }
    }
  }
  return total;
}

inline double residual_estimate(const PotentialModel& q, cplx lambda, const Eigen::VectorXcd& psi, int m, Bc bc,
                                int order, ResidualSide side, const SumOptions& opt = {}) {
  return std::abs(residual_sum(q, lambda, psi, m, bc, order, side, opt));
}

// ---------------------------------------------------------------------------
// Auxiliary integrands Q(x) = int_0^x q and G(x, m) = int_0^x q e^{-i 2 n pi t} dt - q_n x.

struct AuxIntegrands {
  int grid = 0;                 // points x_j = j/grid, j = 0..grid (x = 1 included)
  std::vector<cplx> Q_values;
  cplx Q0{};                    // mean of Q
  std::vector<cplx> G_values;
  cplx G0{};                    // mean of G(., m)
};

inline AuxIntegrands aux_integrands(const PotentialModel& q, int m, Bc bc, int grid = 4096) {
  if (grid < 1024) throw ConfigError("auxiliary integrand grid must have at least 1024 points");
  const int n = partner_offset(m, bc);
  AuxIntegrands a;
  a.grid = grid;
  a.Q_values = detail::partial_integral_grid(q, 0, grid);
  const cplx qn = q.coefficient(n);
  a.G_values = detail::partial_integral_grid(q, n, grid);
  for (int j = 0; j <= grid; ++j) a.G_values[static_cast<std::size_t>(j)] -= qn * (static_cast<double>(j) / grid);
  for (auto [k, c] : q.coefficients()) {
    a.Q0 -= c / (I * 2.0 * pi * static_cast<double>(k));
    if (k != n) a.G0 -= c / (I * 2.0 * pi * static_cast<double>(k - n));
  }
  return a;
}

/// (f, e^{i 2 k pi x}) from grid values on [0, 1] (the x = 1 entry is ignored). Exact for trig
/// polynomials whose frequencies differ from k by less than the grid size.
inline cplx grid_fourier_coefficient(const std::vector<cplx>& values, int k) {
  const int L = static_cast<int>(values.size()) - 1;
  cplx s{};
  const long long kk = ((static_cast<long long>(k) % L) + L) % L;
  for (int j = 0; j < L; ++j) s += values[static_cast<std::size_t>(j)] * std::polar(1.0, -2.0 * pi * static_cast<double>((kk * j) % L) / L);
  return s / static_cast<double>(L);
}

/// Grid size making every integrand of this module a resolved trig polynomial.
inline int aux_grid_size(const PotentialModel& q, int m, Bc bc, int minimum = 4096) {
  const int need = 4 * (3 * q.max_frequency() + 2 * partner_offset(m, bc)) + 2;
  int L = 1024;
  while (L < std::max(need, minimum)) L *= 2;
  return L;
}

/// The a1 correction at the free eigenvalue expressed through G: the negated integral of
/// (G(x,m) - G0)^2 e^{i 2 (2n) pi x}, evaluated as a periodic trapezoid sum (exact here).
inline cplx a1_integral_form(const PotentialModel& q, int m, Bc bc) {
  if (q.is_zero()) return {};
  const int n = partner_offset(m, bc);
  const auto a = aux_integrands(q, m, bc, aux_grid_size(q, m, bc));
  std::vector<cplx> f(a.G_values.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    const cplx g = a.G_values[j] - a.G0;
    f[j] = g * g;
  }
  return -grid_fourier_coefficient(f, -2 * n);
}

// ---------------------------------------------------------------------------
// Harmonic sum sum_{k != 0, 2m} 1 / (|k| |2m - k|).

inline double harmonic_sum(int m, long long trunc) {
  if (m < 1) throw ConfigError("harmonic_sum requires m >= 1");
  const long long two_m = 2LL * m;
  if (trunc <= two_m) throw ConfigError("harmonic_sum truncation must exceed 2m");
  double s = 0;
  for (long long k = 1; k <= trunc; ++k) {
    const double dk = static_cast<double>(k);
    s += 1.0 / (dk * static_cast<double>(two_m + k));
    if (k != two_m) s += 1.0 / (dk * std::abs(static_cast<double>(two_m - k)));
  }
  // exact tail: (1/2m) (H_{T+2m} - H_{T-2m})
  double tail = 0;
  for (long long j = trunc - two_m + 1; j <= trunc + two_m; ++j) tail += 1.0 / static_cast<double>(j);
  return s + tail / static_cast<double>(two_m);
}

// ---------------------------------------------------------------------------
// Trend tables over the computed pairs.

struct TrendTable {
  std::map<int, std::array<double, 2>> per_j;
  std::map<int, double> values;  // max over j
  double slope = 0;
  double spread = 0;
  bool applicable = false;
  bool bounded = false;
};

/// |lambda_{m,j} - ((2m+theta)pi)^2| / rho(m) (spectral shift removed).
inline TrendTable deviation_ratios(const std::vector<SpectralPair>& pairs, Bc bc, const RhoTable& rho,
                                   Window w, const Thresholds& th = {}) {
  TrendTable t;
  for (const auto& p : pairs) {
    if (p.m < w.lo || p.m > w.hi) continue;
    const double r = rho.at(p.m);
    if (r == 0.0) return t;
    std::array<double, 2> v{std::abs(p.deviation(0, bc)) / r, std::abs(p.deviation(1, bc)) / r};
    t.per_j[p.m] = v;
    t.values[p.m] = std::max(v[0], v[1]);
  }
  if (t.values.size() < 2) return t;
  if (std::any_of(t.values.begin(), t.values.end(), [](auto kv) { return kv.second == 0.0; })) return t;
  t.applicable = true;
  t.slope = loglog_slope(t.values);
  t.spread = spread(t.values);
  t.bounded = t.slope <= th.deviation_slope && t.spread <= th.deviation_spread;
  return t;
}

/// Rounding-level uncertainty of u, v for a simple pair: unit roundoff amplified by the matrix
/// scale over the distance to the partner eigenvalue.
inline double eigenvector_precision(const SpectralPair& p, double matrix_norm, double safety = 100.0) {
  const double sep = std::max(p.split, std::numeric_limits<double>::min());
  return std::min(1.0, safety * std::numeric_limits<double>::epsilon() * matrix_norm / sep);
}

struct BalanceTable {
  std::map<int, std::array<double, 2>> per_j;
  std::map<int, double> values;  // max over j
  std::map<int, double> floors;  // resolution floor of each value
  ClampedTrend trend;
  bool applicable = false;
  bool bounded = false;
};

/// |q_n v^2 - q_{-n} u^2| m / rho(m) over simple pairs. `matrix_norm` sets the resolution floor.
inline BalanceTable uv_balance(const std::vector<SpectralPair>& pairs, const PotentialModel& q, Bc bc,
                               const RhoTable& rho, Window w, double matrix_norm, const Thresholds& th = {}) {
  BalanceTable b;
  for (const auto& p : pairs) {
    if (p.m < w.lo || p.m > w.hi || !p.is_simple()) continue;
    const double r = rho.at(p.m);
    if (r == 0.0) return b;
    const int n = partner_offset(p.m, bc);
    const cplx qp = q.coefficient(n), qm = q.coefficient(-n);
    std::array<double, 2> v{};
    for (int j = 0; j < 2; ++j) v[j] = std::abs(qp * p.v[j] * p.v[j] - qm * p.u[j] * p.u[j]) * p.m / r;
    b.per_j[p.m] = v;
    b.values[p.m] = std::max(v[0], v[1]);
    b.floors[p.m] = 2.0 * (std::abs(qp) + std::abs(qm)) * eigenvector_precision(p, matrix_norm) * p.m / r;
  }
  if (b.values.size() < 2) return b;
  b.applicable = true;
  b.trend = clamped_slope(b.values, b.floors);
  b.bounded = b.trend.slope <= th.bounded_slope;
  return b;
}

// ---------------------------------------------------------------------------
// I(m) and its split into I1 + 2 I2 + I3.

struct IDecomposition {
  cplx I{}, I1{}, I2{}, I3{};
  double identity_residual = 0;     // |I - (I1 + 2 I2 + I3) / n^2|
  cplx I1_integral{}, I3_integral{};
  double I1_integral_residual = 0;  // against the sum with only k != 0 excluded
  double I3_integral_residual = 0;  // against the sum with only k != n excluded
};

inline IDecomposition I_decomposition(const PotentialModel& q, int m, Bc bc, int trunc = 2000) {
  IDecomposition r;
  if (q.is_zero()) return r;
  const int n = partner_offset(m, bc);
  const detail::CoefficientTable c(q);
  const auto& sup = c.support();
  auto in = [&](int k) { return std::abs(k) <= trunc; };
  cplx I1_full{}, I3_full{};
  for (int k1 : sup) {
    if (!in(k1)) continue;
    for (int k2 : sup) {
      const int k3 = n - k1 - k2;
      if (!in(k2) || !in(k3)) continue;
      const cplx prod = c(k1) * c(k2) * c(k3);
      if (prod == cplx{}) continue;
      const double a = k1, b = k2, na = n - k1, nb = n - k2;
      I1_full += prod / (a * b);  // k1, k2 != 0 holds on the support
      if (k1 != n && k2 != n) I3_full += prod / (na * nb);
      if (k1 == n || k2 == n) continue;
      r.I1 += prod / (a * b);
      r.I2 += prod / (b * na);
      r.I3 += prod / (na * nb);
      // I in its original indices: m1 = k1, m1 + m2 = n - k2, third index k2
      const double s12 = n - k2;
      r.I += prod / (a * na * s12 * (n - s12));
    }
  }
  const double nn = static_cast<double>(n) * n;
  r.identity_residual = std::abs(r.I - (r.I1 + 2.0 * r.I2 + r.I3) / nn);

  const auto aux = aux_integrands(q, m, bc, aux_grid_size(q, m, bc));
  const int L = aux.grid;
  std::vector<cplx> f1(static_cast<std::size_t>(L) + 1), f3(static_cast<std::size_t>(L) + 1);
  for (int j = 0; j <= L; ++j) {
    const double x = static_cast<double>(j) / L;
    const cplx qx = q(x) - q.spectral_shift();
    const cplx dq = aux.Q_values[static_cast<std::size_t>(j)] - aux.Q0;
    const cplx dg = aux.G_values[static_cast<std::size_t>(j)] - aux.G0;
    f1[static_cast<std::size_t>(j)] = dq * dq * qx;
    f3[static_cast<std::size_t>(j)] = dg * dg * qx;
  }
  r.I1_integral = -4.0 * pi * pi * grid_fourier_coefficient(f1, n);
  r.I3_integral = -4.0 * pi * pi * grid_fourier_coefficient(f3, -n);
  r.I1_integral_residual = std::abs(r.I1_integral - I1_full);
  r.I3_integral_residual = std::abs(r.I3_integral - I3_full);
  return r;
}

// ---------------------------------------------------------------------------
// Per-m report.

struct AsymptoticEntry {
  int m = 0;
  std::array<cplx, 2> Lambda{};
  std::array<cplx, 2> a1{}, a2{}, b1{}, b2{}, a1_primed{}, a2_primed{}, b1_primed{}, b2_primed{};
  cplx a1_integral{};
  std::array<double, 2> R1{}, R2{}, R1_primed{}, R2_primed{};
  double rho = 0;
  std::array<double, 2> deviation_ratio{};
  std::array<double, 2> uv_balance{};
  bool simple = false;
  std::optional<cplx> kappa;  // q_{-n} / q_n
};

struct AsymptoticReport {
  Bc bc = Bc::periodic;
  bool free_lambda = false;
  std::vector<AsymptoticEntry> entries;
};

/// Evaluates every correction sum and residual at each pair's eigenvalues (or at the free
/// eigenvalue when `free_lambda` is set; residuals always use the computed pair).
inline AsymptoticReport asymptotic_report(const PotentialModel& q, Bc bc, const std::vector<SpectralPair>& pairs,
                                          const RhoTable& rho, const SumOptions& opt = {}, bool free_lambda = false) {
  AsymptoticReport rep;
  rep.bc = bc;
  rep.free_lambda = free_lambda;
  rep.entries.resize(pairs.size());
  parallel_for(static_cast<int>(pairs.size()), [&](int i) {
    const SpectralPair& p = pairs[static_cast<std::size_t>(i)];
    AsymptoticEntry e;
    e.m = p.m;
    e.simple = p.is_simple();
    e.rho = rho.entries.count(p.m) ? rho.at(p.m) : 0.0;
    const int n = partner_offset(p.m, bc);
    const cplx qp = q.coefficient(n), qm = q.coefficient(-n);
    if (qp != cplx{}) e.kappa = qm / qp;
    for (int j = 0; j < 2; ++j) {
      e.Lambda[j] = p.deviation(j, bc);
      const cplx lam = free_lambda ? cplx(free_eigenvalue(p.m, bc)) : p.lambda[j] - p.shift;
      e.a1[j] = correction_sum(q, lam, p.m, bc, CorrectionKind::a1, opt).value;
      e.a2[j] = correction_sum(q, lam, p.m, bc, CorrectionKind::a2, opt).value;
      e.b1[j] = correction_sum(q, lam, p.m, bc, CorrectionKind::b1, opt).value;
      e.b2[j] = correction_sum(q, lam, p.m, bc, CorrectionKind::b2, opt).value;
      e.a1_primed[j] = correction_sum(q, lam, p.m, bc, CorrectionKind::a1_primed, opt).value;
      e.a2_primed[j] = correction_sum(q, lam, p.m, bc, CorrectionKind::a2_primed, opt).value;
      e.b1_primed[j] = correction_sum(q, lam, p.m, bc, CorrectionKind::b1_primed, opt).value;
      e.b2_primed[j] = correction_sum(q, lam, p.m, bc, CorrectionKind::b2_primed, opt).value;
      const cplx lam_pair = p.lambda[j] - p.shift;
      e.R1[j] = residual_estimate(q, lam_pair, p.vectors[j], p.m, bc, 1, ResidualSide::unprimed, opt);
      e.R2[j] = residual_estimate(q, lam_pair, p.vectors[j], p.m, bc, 2, ResidualSide::unprimed, opt);
      e.R1_primed[j] = residual_estimate(q, lam_pair, p.vectors[j], p.m, bc, 1, ResidualSide::primed, opt);
      e.R2_primed[j] = residual_estimate(q, lam_pair, p.vectors[j], p.m, bc, 2, ResidualSide::primed, opt);
      if (e.rho > 0) {
        e.deviation_ratio[j] = std::abs(e.Lambda[j]) / e.rho;
        e.uv_balance[j] = std::abs(qp * p.v[j] * p.v[j] - qm * p.u[j] * p.u[j]) * p.m / e.rho;
      }
    }
    e.a1_integral = a1_integral_form(q, p.m, bc);
    rep.entries[static_cast<std::size_t>(i)] = e;
  });
  return rep;
}

}  // namespace hillriesz

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hillriesz/common.hpp"
#include "hillriesz/galerkin.hpp"
#include "hillriesz/potential.hpp"
#include "hillriesz/trend.hpp"

namespace hillriesz {

/// Gram matrix G(i, k) = (f_k, f_i) of the first N root functions with index m >= m_from.
inline Eigen::MatrixXcd gram_matrix(const NormalSystem& system, int N, int m_from = 0) {
  const auto funcs = system.root_functions(m_from);
  if (N < 1 || N > static_cast<int>(funcs.size()))
    throw ConfigError("Gram size " + std::to_string(N) + " exceeds the " + std::to_string(funcs.size()) +
                      " available root functions");
  Eigen::MatrixXcd V(funcs.front().size(), N);
  for (int i = 0; i < N; ++i) V.col(i) = funcs[static_cast<std::size_t>(i)];
  return V.adjoint() * V;
}

struct FrameBounds {
  double s_min = 0;
  double s_max = 0;
  double cond = 0;
};

inline FrameBounds frame_bounds(const Eigen::MatrixXcd& G) {
  if (G.rows() != G.cols() || G.rows() == 0) throw ConfigError("frame bounds need a nonempty square matrix");
  if ((G - G.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, G.cwiseAbs().maxCoeff()))
    throw ConfigError("Gram matrix is not conjugate-symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd s = es.eigenvalues().cwiseAbs();
  FrameBounds f;
  f.s_min = s.minCoeff();
  f.s_max = s.maxCoeff();
  f.cond = f.s_min > 0 ? f.s_max / f.s_min : std::numeric_limits<double>::infinity();
  return f;
}

struct GramDiagnostics {
  int m_from = 0;
  std::vector<int> N_list;
  std::vector<FrameBounds> bounds;
  double growth_slope = 0;
  bool nondecreasing = true;

  double cond(std::size_t i) const { return bounds[i].cond; }
};

inline GramDiagnostics gram_diagnostics(const NormalSystem& system, const std::vector<int>& N_list, int m_from) {
  GramDiagnostics g;
  g.m_from = m_from;
  g.N_list = N_list;
  std::vector<double> x, y;
  for (int N : N_list) {
    g.bounds.push_back(frame_bounds(gram_matrix(system, N, m_from)));
    x.push_back(N);
    y.push_back(g.bounds.back().cond);
  }
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i] < y[i - 1]) g.nondecreasing = false;
  g.growth_slope = loglog_slope(x, y);
  return g;
}

// ---------------------------------------------------------------------------
// u ~ v criterion over simple pairs.

struct UvCriterion {
  std::array<EquivalenceVerdict, 2> per_j;
  EquivalenceVerdict combined;   // the better of the two j
  std::map<int, double> min_uv;  // min over j of min(|u|, |v|)
  double min_uv_slope = 0;
  int simple_count = 0;
  int nonsimple_count = 0;
  int jordan_count = 0;
  bool holds = false;
  bool fails = false;
  bool indeterminate = true;
};

inline UvCriterion uv_criterion(const std::vector<SpectralPair>& pairs, Window w, const Thresholds& th = {}) {
  UvCriterion c;
  std::array<Sequence, 2> u, v;
  for (const auto& p : pairs) {
    if (p.cls == Multiplicity::jordan_chain) ++c.jordan_count;
    if (p.m < w.lo || p.m > w.hi) continue;
    if (!p.is_simple()) {
      ++c.nonsimple_count;
      continue;
    }
    ++c.simple_count;
    double mn = 1.0;
    for (int j = 0; j < 2; ++j) {
      u[j][p.m] = p.u[j];
      v[j][p.m] = p.v[j];
      mn = std::min({mn, std::abs(p.u[j]), std::abs(p.v[j])});
    }
    c.min_uv[p.m] = mn;
  }
  if (c.simple_count < 2 || c.nonsimple_count > c.simple_count) return c;
  for (int j = 0; j < 2; ++j) c.per_j[j] = check_equivalence(u[j], v[j], w, th);
  const auto& a = c.per_j[0];
  const auto& b = c.per_j[1];
  c.combined = a.holds || (!b.holds && a.indeterminate) ? a : b;
  if (std::all_of(c.min_uv.begin(), c.min_uv.end(), [](auto kv) { return kv.second > 0; }))
    c.min_uv_slope = loglog_slope(c.min_uv);
  c.holds = a.holds || b.holds;
  c.fails = !c.holds && !a.indeterminate && !b.indeterminate;
  c.indeterminate = !c.holds && !c.fails;
  return c;
}

// ---------------------------------------------------------------------------
// Verdict.

enum class Verdict { basis_consistent, not_basis, indeterminate };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::basis_consistent: return "basis-consistent";
    case Verdict::not_basis: return "not-basis";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "";
}

struct BasisVerdict {
  Bc bc = Bc::periodic;
  Window window;
  std::array<LimitReport, 2> hypothesis_limit;  // plus, minus
  bool applicable = false;
  EquivalenceVerdict hypothesis_equiv;
  UvCriterion uv_equiv;
  int jordan_count = 0;  // at or above the window start
  GramDiagnostics gram;
  std::map<int, cplx> kappa;
  Verdict verdict = Verdict::indeterminate;
  std::vector<std::string> notes;
};

/// Combines the hypothesis gate, the coefficient equivalence, the u ~ v criterion and the
/// Gram growth into one verdict over window [m_asym, m_hi].
inline BasisVerdict basis_verdict(const PotentialModel& q, Bc bc, const std::vector<SpectralPair>& pairs,
                                     const RhoTable& rho, const GramDiagnostics& gram, Window w,
                                     const Thresholds& th = {}) {
  BasisVerdict b;
  b.bc = bc;
  b.window = w;
  b.gram = gram;
  b.hypothesis_limit = {check_limit_condition(q, rho, w, Side::plus, th), check_limit_condition(q, rho, w, Side::minus, th)};
  b.applicable = b.hypothesis_limit[0].tends_to_zero || b.hypothesis_limit[1].tends_to_zero;

  Sequence qp, qm;
  for (int m = w.lo; m <= w.hi; ++m) {
    const int n = partner_offset(m, bc);
    qp[m] = q.coefficient(n);
    qm[m] = q.coefficient(-n);
    if (qp[m] != cplx{}) b.kappa[m] = qm[m] / qp[m];
  }
  b.hypothesis_equiv = check_equivalence(qp, qm, w, th);
  b.uv_equiv = uv_criterion(pairs, w, th);
  for (const auto& p : pairs)
    if (p.m >= w.lo && p.cls == Multiplicity::jordan_chain) ++b.jordan_count;

  if (!b.applicable) {
    b.notes.push_back("not-applicable: neither side of the rho(m)/(m|q|) limit condition tends to zero");
    return b;
  }
  const bool gram_bounded = gram.growth_slope <= th.gram_consistent_slope;
  const bool gram_grows = gram.growth_slope >= th.gram_failure_slope;
  const bool coeff_fail = !b.hypothesis_equiv.holds && !b.hypothesis_equiv.indeterminate;
  if (b.hypothesis_equiv.holds && b.uv_equiv.holds && gram_bounded && b.jordan_count == 0) {
    b.verdict = Verdict::basis_consistent;
  } else if (coeff_fail && (b.uv_equiv.fails || gram_grows)) {
    b.verdict = Verdict::not_basis;
  } else {
    std::string note = "discrepancy:";
    note += " coefficient equivalence " + std::string(b.hypothesis_equiv.holds ? "holds" : coeff_fail ? "fails" : "indeterminate");
    note += ", u~v " + std::string(b.uv_equiv.holds ? "holds" : b.uv_equiv.fails ? "fails" : "indeterminate");
    note += ", Gram slope " + std::to_string(gram.growth_slope);
    note += ", Jordan chains " + std::to_string(b.jordan_count);
    b.notes.push_back(note);
  }
  return b;
}

struct SimplicityReport {
  int m_from = 0;
  int simple = 0;
  int double_geometric = 0;
  int jordan = 0;
  int indeterminate = 0;
  double simple_fraction = 0;
};

inline SimplicityReport simplicity_report(const std::vector<SpectralPair>& pairs, int m_from) {
  SimplicityReport r;
  r.m_from = m_from;
  int total = 0;
  for (const auto& p : pairs) {
    if (p.m < m_from) continue;
    ++total;
    if (p.indeterminate) ++r.indeterminate;
    else if (p.cls == Multiplicity::simple_pair) ++r.simple;
    else if (p.cls == Multiplicity::double_geometric) ++r.double_geometric;
    else ++r.jordan;
  }
  r.simple_fraction = total ? static_cast<double>(r.simple) / total : 0.0;
  return r;
}

}  // namespace hillriesz

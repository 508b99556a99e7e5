#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include "hillriesz/common.hpp"
#include "hillriesz/galerkin.hpp"
#include "hillriesz/parallel.hpp"
#include "hillriesz/potential.hpp"

namespace hillriesz {

/// Values at x = 1 of the fundamental solutions with (y, y') = (1, 0) and (0, 1) at x = 0:
/// [[m11, m12], [m21, m22]] = [[y1(1), y2(1)], [y1'(1), y2'(1)]].
struct MonodromyMatrix {
  cplx lambda{};
  cplx m11{}, m12{}, m21{}, m22{};
  int step_count = 0;
  double est_error = 0;

  cplx det() const { return m11 * m22 - m12 * m21; }
  cplx trace() const { return m11 + m22; }
};

namespace detail {

/// Evaluates q(x) (shift included) by walking powers of e^{i 2 pi x}.
class TrigEvaluator {
 public:
  explicit TrigEvaluator(const PotentialModel& q) : shift_(q.spectral_shift()) {
    if (q.is_zero()) return;
    lo_ = q.coefficients().begin()->first;
    const int hi = q.coefficients().rbegin()->first;
    dense_.assign(static_cast<std::size_t>(hi - lo_ + 1), cplx{});
    for (auto [k, c] : q.coefficients()) dense_[static_cast<std::size_t>(k - lo_)] = c;
  }

  cplx operator()(double x) const {
    if (dense_.empty()) return shift_;
    const cplx z = std::polar(1.0, 2.0 * pi * x);
    cplx p = std::polar(1.0, 2.0 * pi * lo_ * x);
    cplx sum = shift_;
    for (const cplx& c : dense_) {
      sum += c * p;
      p *= z;
    }
    return sum;
  }

 private:
  cplx shift_;
  int lo_ = 0;
  std::vector<cplx> dense_;
};

}  // namespace detail

/// Integrates y'' = (q - lambda) y for both fundamental solutions at once.
///
/// The state is (y, y'/omega) for omega = sqrt(1 + |lambda|), which keeps both components of
/// comparable size at large |lambda|. Steps are accepted when the embedded 7(8) error
/// estimate stays below tol per unit length, so the accumulated estimate stays below tol.
inline MonodromyMatrix integrate_monodromy(const PotentialModel& q, cplx lambda, double tol = 1e-11) {
  if (!(tol >= 1e-13 && tol <= 1e-6)) throw ConfigError("ODE tolerance must lie in [1e-13, 1e-6]");
  if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag())) throw ConfigError("spectral parameter is not finite");
  using State = std::array<cplx, 4>;  // y_a, z_a, y_b, z_b with z = y' / omega
  namespace odeint = boost::numeric::odeint;
  odeint::runge_kutta_fehlberg78<State, double, State, double> stepper;

  const detail::TrigEvaluator qx(q);
  const double omega = std::sqrt(1.0 + std::abs(lambda));
  auto rhs = [&](const State& s, State& ds, double x) {
    const cplx c = (qx(x) - lambda) / omega;
    ds[0] = omega * s[1];
    ds[1] = c * s[0];
    ds[2] = omega * s[3];
    ds[3] = c * s[2];
  };

  State s{1.0, 0.0, 0.0, 1.0};
  MonodromyMatrix M;
  M.lambda = lambda;
  double x = 0.0;
  double dt = std::min(0.1, 1.0 / omega);
  while (x < 1.0) {
    dt = std::min(dt, 1.0 - x);
    if (dt < 1e-12) throw StiffnessError("ODE step size underflow at lambda with |lambda| = " +
                                         std::to_string(std::abs(lambda)));
    State trial = s, err{};
    stepper.do_step(rhs, trial, x, dt, err);
    double scale = 1.0, e = 0.0;
    for (int i = 0; i < 4; ++i) {
      scale = std::max(scale, std::abs(trial[i]));
      e = std::max(e, std::abs(err[i]));
    }
    double ratio = e / (tol * dt * scale);
    if (!std::isfinite(ratio)) ratio = std::numeric_limits<double>::infinity();
    if (ratio <= 1.0) {
      s = trial;
      x = x + dt >= 1.0 ? 1.0 : x + dt;
      M.est_error += e / scale;
      ++M.step_count;
    }
    const double factor = ratio == 0.0 ? 5.0 : 0.9 * std::pow(ratio, -1.0 / 8.0);
    dt *= std::clamp(factor, 0.2, 5.0);
  }
  M.m11 = s[0];
  M.m12 = s[2] / omega;
  M.m21 = s[1] * omega;
  M.m22 = s[3];
  return M;
}

/// Delta(lambda) = trace of the monodromy matrix.
inline cplx floquet_discriminant(const MonodromyMatrix& M) { return M.trace(); }

/// Delta^2/4 - 1 written as ((m11 - m22)/2)^2 + m12 m21 (equal when det = 1).
/// Its zeros are the periodic and anti-periodic eigenvalues with their multiplicity; unlike
/// Delta -+ 2 it stays accurate near double roots, where m11 - m22, m12 and m21 all vanish.
inline cplx bc_root_function(const MonodromyMatrix& M) {
  const cplx f = 0.5 * (M.m11 - M.m22);
  return f * f + M.m12 * M.m21;
}

struct OracleRoot {
  cplx value{};
  cplx discriminant_defect{};  // Delta(value) -+ 2
  int iterations = 0;
  bool converged = false;
};

struct OracleDisc {
  int m = 0;
  cplx center{};
  double radius = 0;
  int contour_count = 0;
  bool double_root = false;
  std::vector<OracleRoot> roots;
};

struct OracleOptions {
  double tol = 1e-11;           // ODE tolerance for root refinement
  double contour_tol = 1e-8;    // ODE tolerance on the disc boundary
  int contour_nodes = 256;
  int max_iterations = 50;
};

namespace detail {

inline OracleRoot secant(const PotentialModel& q, Bc bc, cplx seed, const OracleOptions& opt) {
  auto F = [&](cplx l) { return bc_root_function(integrate_monodromy(q, l, opt.tol)); };
  OracleRoot r;
  cplx x0 = seed, x1 = seed + 1e-6 * (1.0 + std::abs(seed));
  cplx f0 = F(x0), f1 = F(x1);
  if (std::abs(f0) < std::abs(f1)) {
    std::swap(x0, x1);
    std::swap(f0, f1);
  }
  for (r.iterations = 1; r.iterations <= opt.max_iterations; ++r.iterations) {
    if (f1 == cplx{}) {
      r.converged = true;
      break;
    }
    const cplx denom = f1 - f0;
    if (denom == cplx{}) break;
    const cplx step = f1 * (x1 - x0) / denom;
    x0 = x1;
    f0 = f1;
    x1 -= step;
    f1 = F(x1);
    if (std::abs(step) <= 1e-12 * (1.0 + std::abs(x1))) {
      r.converged = true;
      break;
    }
  }
  r.value = x1;
  const double target = bc == Bc::periodic ? 2.0 : -2.0;
  r.discriminant_defect = floquet_discriminant(integrate_monodromy(q, x1, opt.tol)) - target;
  return r;
}

}  // namespace detail

/// Number of zeros of Delta^2/4 - 1 inside the disc, by summing principal phase increments
/// around `nodes` equispaced boundary points.
inline int contour_root_count(const PotentialModel& q, cplx center, double radius, int nodes, double tol) {
  double total = 0;
  cplx prev{};
  for (int j = 0; j <= nodes; ++j) {
    const cplx z = center + radius * std::polar(1.0, 2.0 * pi * (j % nodes) / nodes);
    const cplx f = bc_root_function(integrate_monodromy(q, z, tol));
    if (j > 0) total += std::arg(f / prev);
    prev = f;
  }
  return static_cast<int>(std::lround(total / (2.0 * pi)));
}

/// Refines the boundary-condition eigenvalues inside the pairing disc of every m in [m_lo, m_hi].
/// `seeds` maps m to starting values (typically the Galerkin pair); free eigenvalues are used otherwise.
inline std::vector<OracleDisc> find_bc_eigenvalues(const PotentialModel& q, Bc bc, int m_lo, int m_hi,
                                                   const std::map<int, std::array<cplx, 2>>& seeds = {},
                                                   const OracleOptions& opt = {}) {
  if (m_hi < m_lo) return {};
  std::vector<OracleDisc> out(static_cast<std::size_t>(m_hi - m_lo + 1));
  const double ctol = std::max(opt.tol, opt.contour_tol);
  parallel_for(m_hi - m_lo + 1, [&](int i) {
    const int m = m_lo + i;
    OracleDisc d;
    d.m = m;
    d.center = free_eigenvalue(m, bc) + q.spectral_shift();
    d.radius = 0.5 * pairing_gap(m, bc);
    d.contour_count = contour_root_count(q, d.center, d.radius, opt.contour_nodes, ctol);
    if (d.contour_count < 1 || d.contour_count > 2) throw DiscAnomaly(m, d.contour_count);
    std::array<cplx, 2> start{d.center, d.center};
    if (auto it = seeds.find(m); it != seeds.end()) start = it->second;
    for (const cplx& s : start) d.roots.push_back(detail::secant(q, bc, s, opt));
    const double scale = 1e-8 * (1.0 + std::abs(d.center));
    d.double_root = std::abs(d.roots[0].value - d.roots[1].value) <= scale;
    out[static_cast<std::size_t>(i)] = std::move(d);
  });
  return out;
}

struct SpectrumComparison {
  std::map<int, double> deviation;  // per m, under the best 2-point matching
  std::map<int, bool> crossed;      // true if lambda_j is matched with root 1 - j
  std::vector<int> flagged;         // m present on one side only
  double overall = 0;
};

inline SpectrumComparison compare_spectra(const std::vector<SpectralPair>& pairs,
                                          const std::vector<OracleDisc>& discs) {
  SpectrumComparison c;
  std::map<int, const OracleDisc*> by_m;
  for (const auto& d : discs) by_m[d.m] = &d;
  std::set<int> seen;
  for (const auto& p : pairs) {
    seen.insert(p.m);
    auto it = by_m.find(p.m);
    if (it == by_m.end() || it->second->roots.size() != 2) {
      c.flagged.push_back(p.m);
      continue;
    }
    const auto& r = it->second->roots;
    const double direct = std::max(std::abs(p.lambda[0] - r[0].value), std::abs(p.lambda[1] - r[1].value));
    const double crossed = std::max(std::abs(p.lambda[0] - r[1].value), std::abs(p.lambda[1] - r[0].value));
    c.deviation[p.m] = std::min(direct, crossed);
    c.crossed[p.m] = crossed < direct;
    c.overall = std::max(c.overall, c.deviation[p.m]);
  }
  for (const auto& d : discs)
    if (!seen.count(d.m)) c.flagged.push_back(d.m);
  std::sort(c.flagged.begin(), c.flagged.end());
  return c;
}

}  // namespace hillriesz

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <unsupported/Eigen/FFT>
#include <utility>
#include <vector>

#include "hillriesz/common.hpp"
#include "hillriesz/trend.hpp"

namespace hillriesz {

/// Complex 1-periodic potential q(x) = shift + sum_k q_k e^{i 2 k pi x}.
///
/// The k = 0 coefficient is never stored: a nonzero mean is kept as a scalar
/// spectral shift that downstream solvers add to reported eigenvalues.
/// Sampled potentials keep the grid and its DFT; coefficients with |k| up to
/// `max_frequency()` form the Fourier model, the rest of the band up to the
/// Nyquist limit is served from the DFT on request.
class PotentialModel {
 public:
  PotentialModel() = default;

  static PotentialModel from_coefficients(const std::map<int, cplx>& coeffs, bool real = false) {
    PotentialModel q;
    q.real_ = real;
    for (auto [k, c] : coeffs) {
      if (k == 0) {
        q.shift_ += c;
      } else if (c != cplx{}) {
        q.coeffs_[k] = c;
      }
    }
    if (real) {
      for (auto [k, c] : q.coeffs_) {
        const cplx partner = q.coefficient(-k);
        if (std::abs(partner - std::conj(c)) > 1e-14 * (1.0 + std::abs(c)))
          throw ConfigError("realness flag set but q_{-k} != conj(q_k) at k=" + std::to_string(k));
      }
      if (std::abs(q.shift_.imag()) > 1e-14 * (1.0 + std::abs(q.shift_)))
        throw ConfigError("realness flag set but the mean is not real");
    }
    q.refresh();
    return q;
  }

  /// Samples on x_j = j/L, j = 0..L-1, with L a power of two. `kmax` caps the stored
  /// Fourier model (default: everything below Nyquist).
  static PotentialModel from_samples(std::vector<cplx> values, int kmax = -1) {
    const std::size_t L = values.size();
    if (L < 2 || (L & (L - 1)) != 0) throw ConfigError("sample grid length must be a power of two >= 2");
    PotentialModel q;
    q.samples_ = std::move(values);
    q.real_ = std::all_of(q.samples_.begin(), q.samples_.end(), [](cplx v) { return v.imag() == 0.0; });
    Eigen::FFT<double> fft;
    std::vector<cplx> spectrum;
    fft.fwd(spectrum, q.samples_);
    for (auto& c : spectrum) c /= static_cast<double>(L);
    q.sample_dft_ = spectrum;
    q.nyquist_ = static_cast<int>(L / 2) - 1;
    const int keep = kmax < 0 ? q.nyquist_ : std::min(kmax, q.nyquist_);
    q.shift_ = spectrum[0];
    for (int k = 1; k <= keep; ++k) {
      cplx plus = spectrum[k];
      cplx minus = spectrum[L - k];
      if (q.real_) minus = std::conj(plus);
      if (plus != cplx{}) q.coeffs_[k] = plus;
      if (minus != cplx{}) q.coeffs_[-k] = minus;
    }
    q.stored_limit_ = keep;
    q.refresh();
    return q;
  }

  cplx coefficient(int k) const {
    if (k == 0) return {};
    if (std::abs(k) <= stored_limit()) {
      auto it = coeffs_.find(k);
      return it == coeffs_.end() ? cplx{} : it->second;
    }
    if (!has_samples()) return {};
    if (std::abs(k) > nyquist_) throw FrequencyOutOfRange(k);
    const auto L = static_cast<int>(samples_.size());
    return sample_dft_[static_cast<std::size_t>(((k % L) + L) % L)];
  }

  /// q(x) including the spectral shift.
  cplx operator()(double x) const {
    cplx sum = shift_;
    for (auto [k, c] : coeffs_) sum += c * std::polar(1.0, 2.0 * pi * k * x);
    return sum;
  }

  const std::map<int, cplx>& coefficients() const { return coeffs_; }
  int max_frequency() const { return max_frequency_; }
  double coeff_sup() const { return coeff_sup_; }
  cplx spectral_shift() const { return shift_; }
  bool is_real() const { return real_; }
  bool is_zero() const { return coeffs_.empty(); }
  bool has_samples() const { return !samples_.empty(); }
  const std::vector<cplx>& samples() const { return samples_; }

  friend PotentialModel operator+(const PotentialModel& a, const PotentialModel& b) {
    std::map<int, cplx> sum = a.coeffs_;
    for (auto [k, c] : b.coeffs_) sum[k] += c;
    sum[0] = a.shift_ + b.shift_;
    return from_coefficients(sum);
  }

  friend PotentialModel operator*(cplx alpha, const PotentialModel& a) {
    std::map<int, cplx> scaled;
    for (auto [k, c] : a.coeffs_) scaled[k] = alpha * c;
    scaled[0] = alpha * a.shift_;
    return from_coefficients(scaled);
  }

 private:
  int stored_limit() const { return has_samples() ? stored_limit_ : std::numeric_limits<int>::max(); }

  void refresh() {
    max_frequency_ = 0;
    coeff_sup_ = 0;
    for (auto [k, c] : coeffs_) {
      max_frequency_ = std::max(max_frequency_, std::abs(k));
      coeff_sup_ = std::max(coeff_sup_, std::abs(c));
    }
  }

  std::map<int, cplx> coeffs_;
  int max_frequency_ = 0;
  double coeff_sup_ = 0;
  cplx shift_{};
  bool real_ = false;
  std::vector<cplx> samples_;
  std::vector<cplx> sample_dft_;
  int nyquist_ = 0;
  int stored_limit_ = 0;
};

inline cplx fourier_coefficient(const PotentialModel& q, int m) { return q.coefficient(m); }

/// Builtin families. `parity` 0 puts the family on frequencies 2m, parity 1 on 2m+1.
namespace families {

inline PotentialModel zero() { return {}; }

inline PotentialModel trig(const std::map<int, cplx>& coeffs) { return PotentialModel::from_coefficients(coeffs); }

/// q_{+-(2m+parity)} = c / m^alpha for m = 1..mmax.
inline PotentialModel power(double alpha, cplx c, int mmax, int parity = 0) {
  std::map<int, cplx> q;
  for (int m = 1; m <= mmax; ++m) {
    const int n = 2 * m + parity;
    q[n] = c / std::pow(m, alpha);
    q[-n] = c / std::pow(m, alpha);
  }
  return PotentialModel::from_coefficients(q, c.imag() == 0.0);
}

/// q_{2m+parity} = c / m^alpha, q_{-(2m+parity)} = c / m^beta.
inline PotentialModel asym_power(double alpha, double beta, cplx c, int mmax, int parity = 0) {
  std::map<int, cplx> q;
  for (int m = 1; m <= mmax; ++m) {
    const int n = 2 * m + parity;
    q[n] = c / std::pow(m, alpha);
    q[-n] = c / std::pow(m, beta);
  }
  return PotentialModel::from_coefficients(q);
}

/// Only positive frequencies: q_{2m+parity} = c / m^alpha.
inline PotentialModel one_sided(double alpha, cplx c, int mmax, int parity = 0) {
  std::map<int, cplx> q;
  for (int m = 1; m <= mmax; ++m) q[2 * m + parity] = c / std::pow(m, alpha);
  return PotentialModel::from_coefficients(q);
}

/// Samples of frac(period * x) - 1/2 on L points; the jump sample takes the mean value 0.
inline PotentialModel sawtooth_samples(int L, int period, int kmax = -1) {
  std::vector<cplx> v(static_cast<std::size_t>(L));
  for (int j = 0; j < L; ++j) {
    const double t = static_cast<double>(period) * j / L;
    const double frac = t - std::floor(t);
    v[static_cast<std::size_t>(j)] = frac == 0.0 ? 0.0 : frac - 0.5;
  }
  return PotentialModel::from_samples(std::move(v), kmax);
}

}  // namespace families

// ---------------------------------------------------------------------------
// rho(m): sup over x of the oscillatory partial integrals at frequency 2m+theta.

enum class Branch { minus, plus };

inline std::string to_string(Branch b) { return b == Branch::minus ? "minus" : "plus"; }

struct RhoEntry {
  double rho = 0;
  Branch branch = Branch::minus;
  double witness_x = 0;
};

namespace detail {

/// int_0^x e^{i 2 pi d t} dt
inline cplx exp_antiderivative(int d, double x) {
  if (d == 0) return x;
  return (std::polar(1.0, 2.0 * pi * d * x) - 1.0) / (I * 2.0 * pi * static_cast<double>(d));
}

/// int_0^x q(t) e^{-i 2 pi shift t} dt for the Fourier model (shift excluded).
inline cplx partial_integral(const PotentialModel& q, int shift, double x) {
  cplx s{};
  for (auto [k, c] : q.coefficients()) s += c * exp_antiderivative(k - shift, x);
  return s;
}

/// Same integral on the uniform grid x_j = j/G, j = 0..G, using exact phase lookups.
inline std::vector<cplx> partial_integral_grid(const PotentialModel& q, int shift, int G) {
  std::vector<cplx> table(static_cast<std::size_t>(G));
  for (int r = 0; r < G; ++r) table[static_cast<std::size_t>(r)] = std::polar(1.0, 2.0 * pi * r / G);
  std::vector<cplx> out(static_cast<std::size_t>(G) + 1, cplx{});
  for (auto [k, c] : q.coefficients()) {
    const int d = k - shift;
    if (d == 0) {
      for (int j = 0; j <= G; ++j) out[static_cast<std::size_t>(j)] += c * (static_cast<double>(j) / G);
      continue;
    }
    const cplx scale = c / (I * 2.0 * pi * static_cast<double>(d));
    const long long dd = ((static_cast<long long>(d) % G) + G) % G;
    long long r = 0;
    for (int j = 0; j <= G; ++j) {
      out[static_cast<std::size_t>(j)] += scale * (table[static_cast<std::size_t>(r)] - 1.0);
      r += dd;
      if (r >= G) r -= G;
    }
  }
  return out;
}

/// Golden-section maximisation of f on [a, b].
template <typename F>
double golden_max(F&& f, double a, double b, int iterations = 80) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iterations && b - a > 1e-15; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc > fd ? c : d;
}

}  // namespace detail

/// rho(m) = max over the two branches of sup_x |int_0^x q(t) e^{-+i 2 (2m+theta) pi t} dt|.
inline RhoEntry rho(const PotentialModel& q, int m, Bc bc, int grid_size = 4096) {
  if (m < 1) throw ConfigError("rho requires m >= 1");
  if (grid_size < 1024) throw ConfigError("rho grid must have at least 1024 points");
  const int n = partner_offset(m, bc);
  const int G = std::max(grid_size, 64 * q.max_frequency());
  RhoEntry best;
  if (q.is_zero()) {
    best.witness_x = 1.0;
    return best;
  }
  for (Branch branch : {Branch::minus, Branch::plus}) {
    const int shift = branch == Branch::minus ? n : -n;
    const auto values = detail::partial_integral_grid(q, shift, G);
    std::size_t jmax = 0;
    for (std::size_t j = 1; j < values.size(); ++j)
      if (std::abs(values[j]) > std::abs(values[jmax])) jmax = j;
    const double lo = jmax == 0 ? 0.0 : (jmax - 1.0) / G;
    const double hi = std::min(1.0, (jmax + 1.0) / G);
    auto modulus = [&](double x) { return std::abs(detail::partial_integral(q, shift, x)); };
    double x = detail::golden_max(modulus, lo, hi);
    double value = modulus(x);
    const double grid_x = static_cast<double>(jmax) / G;
    const double grid_value = std::abs(values[jmax]);
    if (grid_value >= value) {
      x = grid_x;
      value = grid_value;
    }
    if (value > best.rho) best = {value, branch, x};
  }
  return best;
}

struct RhoTable {
  Bc bc = Bc::periodic;
  std::map<int, RhoEntry> entries;

  double at(int m) const { return entries.at(m).rho; }
  bool covers(int lo, int hi) const {
    for (int m = lo; m <= hi; ++m)
      if (!entries.count(m)) return false;
    return true;
  }
};

inline RhoTable rho_table(const PotentialModel& q, Bc bc, int m_lo, int m_hi, int grid_size = 4096) {
  RhoTable t;
  t.bc = bc;
  for (int m = m_lo; m <= m_hi; ++m) t.entries[m] = rho(q, m, bc, grid_size);
  return t;
}

// ---------------------------------------------------------------------------
// Finite-window proxies for a_m ~ b_m and lim rho(m)/(m q_{+-n}) = 0.

struct Window {
  int lo = 0;
  int hi = 0;
};

struct EquivalenceVerdict {
  Window window;
  double ratio_min = 0;
  double ratio_max = 0;
  double log_slope = 0;
  bool holds = false;
  bool indeterminate = false;
  bool zero_denominator = false;
  std::map<int, double> ratios;
};

using Sequence = std::map<int, cplx>;

inline EquivalenceVerdict check_equivalence(const Sequence& a, const Sequence& b, Window w,
                                            const Thresholds& th = {}) {
  EquivalenceVerdict v;
  v.window = w;
  for (int m = w.lo; m <= w.hi; ++m) {
    auto ia = a.find(m);
    auto ib = b.find(m);
    if (ia == a.end() || ib == b.end()) continue;
    if (std::abs(ib->second) == 0.0) {
      v.zero_denominator = true;
      continue;
    }
    v.ratios[m] = std::abs(ia->second / ib->second);
  }
  if (v.zero_denominator) return v;
  if (v.ratios.size() < 2) {
    v.indeterminate = true;
    return v;
  }
  v.ratio_min = std::numeric_limits<double>::infinity();
  for (auto [m, r] : v.ratios) {
    v.ratio_min = std::min(v.ratio_min, r);
    v.ratio_max = std::max(v.ratio_max, r);
  }
  if (v.ratio_min == 0.0 || !std::isfinite(v.ratio_max)) return v;
  v.log_slope = loglog_slope(v.ratios);
  const bool tight = v.ratio_max / v.ratio_min <= th.equiv_ratio_spread;
  const double drift = std::abs(v.log_slope);
  v.holds = tight && drift <= th.equiv_drift;
  v.indeterminate = tight && !v.holds && drift <= th.equiv_drift_indeterminate;
  return v;
}

enum class Side { plus, minus };

inline std::string to_string(Side s) { return s == Side::plus ? "plus" : "minus"; }

/// c_m = rho(m) / (m |q_{+-(2m+theta)}|) over a window; tends-to-zero is a decreasing fitted trend.
struct LimitReport {
  Side side = Side::plus;
  bool applicable = false;
  std::map<int, double> values;
  double slope = 0;
  bool tends_to_zero = false;
};

inline LimitReport check_limit_condition(const PotentialModel& q, const RhoTable& table, Window w, Side side,
                                 const Thresholds& th = {}) {
  LimitReport r;
  r.side = side;
  if (!table.covers(w.lo, w.hi)) throw ConfigError("rho table does not cover the requested window");
  for (int m = w.lo; m <= w.hi; ++m) {
    const int n = partner_offset(m, table.bc);
    const double qn = std::abs(q.coefficient(side == Side::plus ? n : -n));
    if (qn == 0.0) return r;
    r.values[m] = table.at(m) / (m * qn);
  }
  if (r.values.size() < 2) return r;
  r.applicable = true;
  r.slope = loglog_slope(r.values);
  r.tends_to_zero = r.slope <= -th.equiv_drift && r.values.rbegin()->second < r.values.begin()->second;
  return r;
}

}  // namespace hillriesz

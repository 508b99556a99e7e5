#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace hillriesz {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// Boundary conditions y(1) = y(0) (periodic) or y(1) = -y(0) (anti-periodic).
enum class Bc { periodic, antiperiodic };

/// 0 for periodic, 1 for anti-periodic: basis functions are e^{i(2k+theta)pi x}.
inline int theta(Bc bc) { return bc == Bc::periodic ? 0 : 1; }

/// Frequency index coupling the two members of pair m: 2m + theta.
inline int partner_offset(int m, Bc bc) { return 2 * m + theta(bc); }

/// Unperturbed eigenvalue ((2k + theta) pi)^2 of basis slot k.
inline double free_eigenvalue(int k, Bc bc) {
  const double w = (2.0 * k + theta(bc)) * pi;
  return w * w;
}

inline std::string to_string(Bc bc) { return bc == Bc::periodic ? "periodic" : "antiperiodic"; }

inline Bc bc_from_string(const std::string& s);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input or configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class FrequencyOutOfRange : public Error {
 public:
  explicit FrequencyOutOfRange(int k)
      : Error("frequency " + std::to_string(k) + " is beyond the sample grid's Nyquist limit"), index(k) {}
  int index;
};

class TruncationTooSmall : public Error {
 public:
  TruncationTooSmall(int K, int required)
      : Error("truncation K=" + std::to_string(K) + " is below the required " + std::to_string(required)),
        K(K), required(required) {}
  int K;
  int required;
};

class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, double residual) : Error(what), residual(residual) {}
  double residual;
};

class PairingAmbiguity : public Error {
 public:
  explicit PairingAmbiguity(std::vector<int> ms) : Error(describe(ms)), offending(std::move(ms)) {}
  std::vector<int> offending;

 private:
  static std::string describe(const std::vector<int>& ms) {
    std::string s = "pairing disc does not hold exactly two eigenvalues for m =";
    for (int m : ms) s += " " + std::to_string(m);
    return s;
  }
};

class StiffnessError : public Error {
 public:
  using Error::Error;
};

class DiscAnomaly : public Error {
 public:
  DiscAnomaly(int m, int count)
      : Error("argument-principle count " + std::to_string(count) + " in disc of m=" + std::to_string(m)),
        m(m), count(count) {}
  int m;
  int count;
};

class NearResonance : public Error {
 public:
  NearResonance(int index, double modulus)
      : Error("near-resonant denominator at index " + std::to_string(index)), index(index), modulus(modulus) {}
  int index;
  double modulus;
};

inline Bc bc_from_string(const std::string& s) {
  if (s == "periodic") return Bc::periodic;
  if (s == "antiperiodic" || s == "anti-periodic") return Bc::antiperiodic;
  throw ConfigError("unknown boundary condition '" + s + "'");
}

}  // namespace hillriesz

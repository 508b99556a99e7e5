#pragma once

// Configuration, orchestration and serialization behind the hillriesz command-line tool.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hillriesz/asymptotics.hpp"
#include "hillriesz/floquet.hpp"
#include "hillriesz/galerkin.hpp"
#include "hillriesz/potential.hpp"
#include "hillriesz/potential_json.hpp"
#include "hillriesz/riesz.hpp"

#ifndef HILLRIESZ_VERSION
#define HILLRIESZ_VERSION "0.0.0"
#endif

namespace hillriesz::cli {

inline constexpr const char* version = HILLRIESZ_VERSION;

enum ExitCode : int { ok = 0, config_error = 2, numerical_failure = 3, strict_indeterminate = 4 };

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"coeffs", "rho", "spectrum", "oracle", "criterion", "asymptotics", "gram", "report"};
  return c;
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  Json potential = Json{{"type", "zero"}};
  Bc bc = Bc::periodic;
  int m_max = 20;
  int m_asym = 5;
  int K = 0;  // 0 selects the recommended truncation
  int trunc = 2000;
  int rho_grid = 4096;
  std::vector<int> N_list{8, 16, 32};
  double tol_eig = 1e-10;
  double tol_ode = 1e-11;
  Thresholds thresholds;
  bool free_lambda = false;
  bool strict = false;
  std::string out = "-";
  std::string format = "json";
};

namespace detail {

template <typename T>
T get_as(const Json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

inline void reject_unknown(const Json& j, const std::vector<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

inline Json thresholds_json(const Thresholds& t) {
  return Json{{"equiv_ratio_spread", t.equiv_ratio_spread},
              {"equiv_drift", t.equiv_drift},
              {"equiv_drift_indeterminate", t.equiv_drift_indeterminate},
              {"bounded_slope", t.bounded_slope},
              {"deviation_slope", t.deviation_slope},
              {"deviation_spread", t.deviation_spread},
              {"gram_consistent_slope", t.gram_consistent_slope},
              {"gram_failure_slope", t.gram_failure_slope},
              {"cluster_factor", t.cluster_factor},
              {"tol_rank", t.tol_rank},
              {"uv_decay_slope", t.uv_decay_slope}};
}

inline void read_thresholds(const Json& j, Thresholds& t) {
  if (!j.is_object()) throw ConfigError("thresholds must be an object");
  const Json defaults = thresholds_json(t);
  std::vector<std::string> known;
  for (auto it = defaults.begin(); it != defaults.end(); ++it) known.push_back(it.key());
  reject_unknown(j, known, "thresholds");
  auto rd = [&](const char* k, double& v) {
    if (j.contains(k)) v = get_as<double>(j.at(k), k);
  };
  rd("equiv_ratio_spread", t.equiv_ratio_spread);
  rd("equiv_drift", t.equiv_drift);
  rd("equiv_drift_indeterminate", t.equiv_drift_indeterminate);
  rd("bounded_slope", t.bounded_slope);
  rd("deviation_slope", t.deviation_slope);
  rd("deviation_spread", t.deviation_spread);
  rd("gram_consistent_slope", t.gram_consistent_slope);
  rd("gram_failure_slope", t.gram_failure_slope);
  rd("cluster_factor", t.cluster_factor);
  rd("tol_rank", t.tol_rank);
  rd("uv_decay_slope", t.uv_decay_slope);
}

}  // namespace detail

/// Overlays a JSON config document onto `cfg`.
inline void apply_config(RunConfig& cfg, const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::reject_unknown(j, {"potential", "bc", "m_max", "m_asym", "K", "trunc", "rho_grid", "N_list", "tolerances", "lambda", "strict", "output"},
                         "config");
  using detail::get_as;
  if (j.contains("potential")) cfg.potential = j.at("potential");
  if (j.contains("bc")) cfg.bc = bc_from_string(get_as<std::string>(j.at("bc"), "bc"));
  if (j.contains("m_max")) cfg.m_max = get_as<int>(j.at("m_max"), "m_max");
  if (j.contains("m_asym")) cfg.m_asym = get_as<int>(j.at("m_asym"), "m_asym");
  if (j.contains("K")) cfg.K = get_as<int>(j.at("K"), "K");
  if (j.contains("trunc")) cfg.trunc = get_as<int>(j.at("trunc"), "trunc");
  if (j.contains("rho_grid")) cfg.rho_grid = get_as<int>(j.at("rho_grid"), "rho_grid");
  if (j.contains("N_list")) cfg.N_list = get_as<std::vector<int>>(j.at("N_list"), "N_list");
  if (j.contains("tolerances")) {
    const Json& t = j.at("tolerances");
    if (!t.is_object()) throw ConfigError("tolerances must be an object");
    detail::reject_unknown(t, {"tol_eig", "tol_ode", "thresholds"}, "tolerances");
    if (t.contains("tol_eig")) cfg.tol_eig = get_as<double>(t.at("tol_eig"), "tol_eig");
    if (t.contains("tol_ode")) cfg.tol_ode = get_as<double>(t.at("tol_ode"), "tol_ode");
    if (t.contains("thresholds")) detail::read_thresholds(t.at("thresholds"), cfg.thresholds);
  }
  if (j.contains("lambda")) {
    const auto mode = get_as<std::string>(j.at("lambda"), "lambda");
    if (mode != "computed" && mode != "free") throw ConfigError("lambda must be \"computed\" or \"free\"");
    cfg.free_lambda = mode == "free";
  }
  if (j.contains("strict")) cfg.strict = get_as<bool>(j.at("strict"), "strict");
  if (j.contains("output")) {
    const Json& o = j.at("output");
    if (!o.is_object()) throw ConfigError("output must be an object");
    detail::reject_unknown(o, {"path", "format"}, "output");
    if (o.contains("path")) cfg.out = get_as<std::string>(o.at("path"), "output.path");
    if (o.contains("format")) cfg.format = get_as<std::string>(o.at("format"), "output.format");
  }
}

/// Checks the config invariants and resolves K against the potential's support.
inline PotentialModel validate(RunConfig& cfg) {
  PotentialModel q = parse_potential(cfg.potential);
  if (cfg.m_max < 1) throw ConfigError("m_max must be positive");
  if (cfg.m_asym < 1) throw ConfigError("m_asym must be positive");
  if (cfg.m_asym >= cfg.m_max) throw ConfigError("m_asym must be smaller than m_max");
  if (cfg.K == 0) cfg.K = recommended_truncation(q, cfg.m_max);
  if (cfg.K < 2 * cfg.m_max + 16)
    throw ConfigError("K must be at least 2*m_max + 16 = " + std::to_string(2 * cfg.m_max + 16));
  if (cfg.K < 2 * q.max_frequency() + 8)
    throw ConfigError("K must be at least 2*max_frequency + 8 = " + std::to_string(2 * q.max_frequency() + 8));
  if (cfg.trunc < 1) throw ConfigError("trunc must be positive");
  if (cfg.rho_grid < 1024) throw ConfigError("rho_grid must be at least 1024");
  if (cfg.N_list.empty()) throw ConfigError("N_list must not be empty");
  for (std::size_t i = 0; i < cfg.N_list.size(); ++i) {
    if (cfg.N_list[i] < 1) throw ConfigError("N_list entries must be positive");
    if (i > 0 && cfg.N_list[i] <= cfg.N_list[i - 1]) throw ConfigError("N_list must be strictly increasing");
  }
  if (!(cfg.tol_eig > 0)) throw ConfigError("tol_eig must be positive");
  if (!(cfg.tol_ode >= 1e-13 && cfg.tol_ode <= 1e-6)) throw ConfigError("tol_ode must lie in [1e-13, 1e-6]");
  if (cfg.format != "json" && cfg.format != "csv") throw ConfigError("format must be json or csv");
  return q;
}

inline Json config_to_json(const RunConfig& cfg) {
  Json N = Json::array();
  for (int n : cfg.N_list) N.push_back(n);
  return Json{{"potential", cfg.potential},
              {"bc", to_string(cfg.bc)},
              {"m_max", cfg.m_max},
              {"m_asym", cfg.m_asym},
              {"K", cfg.K},
              {"trunc", cfg.trunc},
              {"rho_grid", cfg.rho_grid},
              {"N_list", N},
              {"tolerances", Json{{"tol_eig", cfg.tol_eig}, {"tol_ode", cfg.tol_ode}, {"thresholds", detail::thresholds_json(cfg.thresholds)}}},
              {"lambda", cfg.free_lambda ? "free" : "computed"},
              {"strict", cfg.strict},
              {"output", Json{{"path", cfg.out}, {"format", cfg.format}}}};
}

// ---------------------------------------------------------------------------
// Tables and deterministic serialization

/// A flat table; JSON renders it as an array of row objects, CSV as header plus rows.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;

  void add(std::vector<Json> row) { rows.push_back(std::move(row)); }

  Json to_json() const {
    Json out = Json::array();
    for (const auto& r : rows) {
      Json obj = Json::object();
      for (std::size_t i = 0; i < columns.size(); ++i) obj[columns[i]] = r[i];
      out.push_back(obj);
    }
    return out;
  }
};

inline std::string format_number(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_json(const Json& j, std::ostream& os, int indent = 0) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << Json(it.key()).dump() << ": ";
        write_json(it.value(), os, indent + 2);
      }
      os << "\n" << close << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      if (flat) {
        os << "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) os << ", ";
          write_json(j[i], os, indent + 2);
        }
        os << "]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        write_json(j[i], os, indent + 2);
      }
      os << "\n" << close << "]";
      return;
    }
    case Json::value_t::number_float:
      os << format_number(j.get<double>());
      return;
    default:
      os << j.dump();
  }
}

inline std::string csv_cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) return v.get<double>() == v.get<double>() && std::isfinite(v.get<double>()) ? format_number(v.get<double>()) : "";
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  return v.dump();
}

inline void write_csv(const Table& t, std::ostream& os) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_cell(r[i]);
    os << "\n";
  }
}

namespace detail {

inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
inline Json cjson(cplx z) { return Json::array({num(z.real()), num(z.imag())}); }

inline Json verdict_json(const EquivalenceVerdict& v) {
  return Json{{"window", Json::array({v.window.lo, v.window.hi})},
              {"ratio_min", num(v.ratio_min)},
              {"ratio_max", num(v.ratio_max)},
              {"log_slope", num(v.log_slope)},
              {"holds", v.holds},
              {"indeterminate", v.indeterminate},
              {"zero_denominator", v.zero_denominator}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands

/// One command's output: canonical JSON plus the named tables its CSV projection emits.
struct CommandOutput {
  Json result = Json::object();
  std::vector<std::pair<std::string, Table>> tables;
  bool indeterminate = false;
};

/// Shared, lazily computed state of one (config, potential) run.
class Session {
 public:
  Session(RunConfig cfg, PotentialModel q) : cfg_(std::move(cfg)), q_(std::move(q)) {}

  const RunConfig& config() const { return cfg_; }
  const PotentialModel& potential() const { return q_; }

  const GalerkinRun& galerkin() {
    if (!galerkin_) galerkin_ = run_galerkin(q_, cfg_.bc, cfg_.m_max, cfg_.K, cfg_.thresholds, cfg_.tol_eig);
    return *galerkin_;
  }
  const RhoTable& rho() {
    if (!rho_) rho_ = rho_table(q_, cfg_.bc, 1, cfg_.m_max, cfg_.rho_grid);
    return *rho_;
  }
  const NormalSystem& normal() {
    if (!normal_) normal_ = normal_system(galerkin().pairing.pairs);
    return *normal_;
  }
  const GramDiagnostics& gram() {
    if (!gram_) gram_ = gram_diagnostics(normal(), cfg_.N_list, cfg_.m_asym);
    return *gram_;
  }
  Window window() const { return {cfg_.m_asym, cfg_.m_max}; }

 private:
  RunConfig cfg_;
  PotentialModel q_;
  std::optional<GalerkinRun> galerkin_;
  std::optional<RhoTable> rho_;
  std::optional<NormalSystem> normal_;
  std::optional<GramDiagnostics> gram_;
};

inline CommandOutput cmd_coeffs(Session& s) {
  const auto& q = s.potential();
  const Bc bc = s.config().bc;
  Table t{{"m", "n", "q_plus_re", "q_plus_im", "q_minus_re", "q_minus_im", "ratio"}, {}};
  for (int m = 1; m <= s.config().m_max; ++m) {
    const int n = partner_offset(m, bc);
    const cplx a = q.coefficient(n), b = q.coefficient(-n);
    const Json ratio = std::abs(b) > 0 ? Json(std::abs(a) / std::abs(b)) : Json(nullptr);
    t.add({m, n, a.real(), a.imag(), b.real(), b.imag(), ratio});
  }
  CommandOutput out;
  out.result["spectral_shift"] = detail::cjson(q.spectral_shift());
  out.result["coeff_sup"] = q.coeff_sup();
  out.result["max_frequency"] = q.max_frequency();
  out.result["coefficients"] = t.to_json();
  out.tables.emplace_back("coefficients", std::move(t));
  return out;
}

inline CommandOutput cmd_rho(Session& s) {
  Table t{{"m", "n", "rho", "branch", "witness_x"}, {}};
  for (auto [m, e] : s.rho().entries) t.add({m, partner_offset(m, s.config().bc), e.rho, to_string(e.branch), e.witness_x});
  CommandOutput out;
  out.result["grid_size"] = std::max(s.config().rho_grid, 64 * s.potential().max_frequency());
  out.result["rho"] = t.to_json();
  out.tables.emplace_back("rho", std::move(t));
  return out;
}

inline CommandOutput cmd_spectrum(Session& s) {
  const auto& run = s.galerkin();
  Table pairs{{"m", "j", "lambda_re", "lambda_im", "class", "indeterminate", "u_re", "u_im", "v_re", "v_im", "abs_u", "abs_v",
               "tail_norm", "split", "chain_residual"},
              {}};
  for (const auto& p : run.pairing.pairs)
    for (int j = 0; j < 2; ++j)
      pairs.add({p.m, j + 1, p.lambda[j].real(), p.lambda[j].imag(), to_string(p.cls), p.indeterminate, p.u[j].real(),
                 p.u[j].imag(), p.v[j].real(), p.v[j].imag(), std::abs(p.u[j]), std::abs(p.v[j]), p.tail_norm[j], p.split,
                 p.cls == Multiplicity::jordan_chain ? Json(p.chain_residual) : Json(nullptr)});
  Table anomalies{{"value_re", "value_im", "nearest_m"}, {}};
  for (const auto& a : run.pairing.anomalies) anomalies.add({a.value.real(), a.value.imag(), a.nearest_m});
  Json low = Json::array();
  for (const auto& l : run.pairing.low_modes) low.push_back(detail::cjson(l));
  CommandOutput out;
  out.result["K"] = run.matrix.K;
  out.result["matrix_norm"] = run.spectrum.matrix_norm;
  out.result["max_residual"] = run.spectrum.max_residual;
  out.result["tol_cluster"] = run.pairing.tol_cluster;
  out.result["spectral_shift"] = detail::cjson(run.matrix.shift);
  out.result["pairs"] = pairs.to_json();
  out.result["anomalies"] = anomalies.to_json();
  out.result["low_modes"] = low;
  out.tables.emplace_back("pairs", std::move(pairs));
  out.tables.emplace_back("anomalies", std::move(anomalies));
  return out;
}

inline CommandOutput cmd_oracle(Session& s) {
  const auto& run = s.galerkin();
  const auto& cfg = s.config();
  std::map<int, std::array<cplx, 2>> seeds;
  for (const auto& p : run.pairing.pairs) seeds[p.m] = p.lambda;
  OracleOptions opt;
  opt.tol = cfg.tol_ode;
  const auto discs = find_bc_eigenvalues(s.potential(), cfg.bc, 1, cfg.m_max, seeds, opt);
  const auto cmp = compare_spectra(run.pairing.pairs, discs);
  Table t{{"m", "j", "galerkin_re", "galerkin_im", "oracle_re", "oracle_im", "abs_difference", "contour_count", "double_root",
           "discriminant_defect", "iterations", "converged"},
          {}};
  std::map<int, const OracleDisc*> by_m;
  for (const auto& d : discs) by_m[d.m] = &d;
  for (const auto& p : run.pairing.pairs) {
    const OracleDisc& d = *by_m.at(p.m);
    const bool crossed = cmp.crossed.count(p.m) && cmp.crossed.at(p.m);
    for (int j = 0; j < 2; ++j) {
      const OracleRoot& r = d.roots[static_cast<std::size_t>(crossed ? 1 - j : j)];
      t.add({p.m, j + 1, p.lambda[j].real(), p.lambda[j].imag(), r.value.real(), r.value.imag(), std::abs(p.lambda[j] - r.value),
             d.contour_count, d.double_root, std::abs(r.discriminant_defect), r.iterations, r.converged});
    }
  }
  Json flagged = Json::array();
  for (int m : cmp.flagged) flagged.push_back(m);
  CommandOutput out;
  out.result["tol_ode"] = cfg.tol_ode;
  out.result["overall_deviation"] = cmp.overall;
  out.result["flagged"] = flagged;
  out.result["roots"] = t.to_json();
  out.tables.emplace_back("oracle", std::move(t));
  return out;
}

inline CommandOutput cmd_criterion(Session& s) {
  const auto& cfg = s.config();
  const auto& q = s.potential();
  const auto& pairs = s.galerkin().pairing.pairs;
  const auto v = basis_verdict(q, cfg.bc, pairs, s.rho(), s.gram(), s.window(), cfg.thresholds);
  const auto simp = simplicity_report(pairs, cfg.m_asym);

  Table t{{"m", "rho", "abs_q_plus", "abs_q_minus", "c_plus", "c_minus", "kappa_re", "kappa_im", "class", "abs_u1", "abs_v1",
           "abs_u2", "abs_v2"},
          {}};
  for (const auto& p : pairs) {
    const int n = partner_offset(p.m, cfg.bc);
    const double r = s.rho().at(p.m);
    const double qp = std::abs(q.coefficient(n)), qm = std::abs(q.coefficient(-n));
    const cplx kappa = qp > 0 ? q.coefficient(-n) / q.coefficient(n) : cplx(NAN, NAN);
    t.add({p.m, r, qp, qm, qp > 0 ? Json(r / (p.m * qp)) : Json(nullptr), qm > 0 ? Json(r / (p.m * qm)) : Json(nullptr),
           detail::num(kappa.real()), detail::num(kappa.imag()), to_string(p.cls), std::abs(p.u[0]), std::abs(p.v[0]),
           std::abs(p.u[1]), std::abs(p.v[1])});
  }
  Json limit = Json::object();
  for (const auto& lr : v.hypothesis_limit)
    limit[to_string(lr.side)] = Json{{"applicable", lr.applicable}, {"slope", detail::num(lr.slope)}, {"tends_to_zero", lr.tends_to_zero}};
  Json uv = Json{{"holds", v.uv_equiv.holds},
                 {"fails", v.uv_equiv.fails},
                 {"indeterminate", v.uv_equiv.indeterminate},
                 {"j1", detail::verdict_json(v.uv_equiv.per_j[0])},
                 {"j2", detail::verdict_json(v.uv_equiv.per_j[1])},
                 {"min_uv_slope", detail::num(v.uv_equiv.min_uv_slope)},
                 {"simple_count", v.uv_equiv.simple_count},
                 {"nonsimple_count", v.uv_equiv.nonsimple_count}};
  Json gram = Json::array();
  for (std::size_t i = 0; i < v.gram.N_list.size(); ++i)
    gram.push_back(Json{{"N", v.gram.N_list[i]}, {"cond", detail::num(v.gram.bounds[i].cond)}});
  Json notes = Json::array();
  for (const auto& n : v.notes) notes.push_back(n);

  CommandOutput out;
  out.result["window"] = Json::array({v.window.lo, v.window.hi});
  out.result["status"] = v.applicable ? "applicable" : "not-applicable";
  out.result["verdict"] = to_string(v.verdict);
  out.result["hypothesis_limit"] = limit;
  out.result["hypothesis_equiv"] = detail::verdict_json(v.hypothesis_equiv);
  out.result["uv_equiv"] = uv;
  out.result["jordan_count"] = v.jordan_count;
  out.result["gram"] = Json{{"m_from", v.gram.m_from}, {"growth_slope", detail::num(v.gram.growth_slope)}, {"series", gram}};
  out.result["simplicity"] = Json{{"m_from", simp.m_from},
                                  {"simple", simp.simple},
                                  {"double_geometric", simp.double_geometric},
                                  {"jordan", simp.jordan},
                                  {"indeterminate", simp.indeterminate},
                                  {"simple_fraction", simp.simple_fraction}};
  out.result["notes"] = notes;
  out.result["per_m"] = t.to_json();
  out.indeterminate = v.verdict == Verdict::indeterminate;
  out.tables.emplace_back("criterion", std::move(t));
  return out;
}

inline CommandOutput cmd_asymptotics(Session& s) {
  const auto& cfg = s.config();
  const auto& q = s.potential();
  const auto& run = s.galerkin();
  const auto& pairs = run.pairing.pairs;
  SumOptions opt;
  opt.trunc = cfg.trunc;
  const auto rep = asymptotic_report(q, cfg.bc, pairs, s.rho(), opt, cfg.free_lambda);

  Table e{{"m", "j", "Lambda_re", "Lambda_im", "rho", "deviation_ratio", "uv_balance", "a1_re", "a1_im", "a2_re", "a2_im",
           "b1_re", "b1_im", "b2_re", "b2_im", "a1p_re", "a1p_im", "a2p_re", "a2p_im", "b1p_re", "b1p_im", "b2p_re", "b2p_im",
           "a1_integral_re", "a1_integral_im", "R1", "R2", "R1p", "R2p", "kappa_re", "kappa_im"},
          {}};
  for (const auto& x : rep.entries)
    for (int j = 0; j < 2; ++j) {
      const cplx k = x.kappa.value_or(cplx(NAN, NAN));
      e.add({x.m, j + 1, x.Lambda[j].real(), x.Lambda[j].imag(), x.rho, x.rho > 0 ? Json(x.deviation_ratio[j]) : Json(nullptr),
             x.rho > 0 && x.simple ? Json(x.uv_balance[j]) : Json(nullptr), x.a1[j].real(), x.a1[j].imag(), x.a2[j].real(),
             x.a2[j].imag(), x.b1[j].real(), x.b1[j].imag(), x.b2[j].real(), x.b2[j].imag(), x.a1_primed[j].real(),
             x.a1_primed[j].imag(), x.a2_primed[j].real(), x.a2_primed[j].imag(), x.b1_primed[j].real(), x.b1_primed[j].imag(),
             x.b2_primed[j].real(), x.b2_primed[j].imag(), x.a1_integral.real(), x.a1_integral.imag(), x.R1[j], x.R2[j],
             x.R1_primed[j], x.R2_primed[j], detail::num(k.real()), detail::num(k.imag())});
    }

  Table h{{"m", "harmonic_sum", "scaled"}, {}};
  for (int m = cfg.m_asym; m <= cfg.m_max; ++m) {
    const double v = harmonic_sum(m, 10000LL * m);
    h.add({m, v, m > 1 ? Json(v * m / std::log(m)) : Json(nullptr)});
  }

  Table id{{"m", "I_re", "I_im", "I1_re", "I1_im", "I2_re", "I2_im", "I3_re", "I3_im", "identity_residual",
            "I1_integral_residual", "I3_integral_residual"},
           {}};
  for (int m = cfg.m_asym; m <= cfg.m_max; ++m) {
    const auto d = I_decomposition(q, m, cfg.bc, cfg.trunc);
    id.add({m, d.I.real(), d.I.imag(), d.I1.real(), d.I1.imag(), d.I2.real(), d.I2.imag(), d.I3.real(), d.I3.imag(),
            d.identity_residual, d.I1_integral_residual, d.I3_integral_residual});
  }

  const auto dev = deviation_ratios(pairs, cfg.bc, s.rho(), s.window(), cfg.thresholds);
  const auto bal = uv_balance(pairs, q, cfg.bc, s.rho(), s.window(), run.spectrum.matrix_norm, cfg.thresholds);
  std::map<int, double> tails;
  for (const auto& p : pairs)
    if (p.m >= cfg.m_asym) tails[p.m] = std::max(p.tail_norm[0], p.tail_norm[1]);
  const bool tails_positive = std::all_of(tails.begin(), tails.end(), [](auto kv) { return kv.second > 0; });

  CommandOutput out;
  out.result["lambda"] = cfg.free_lambda ? "free" : "computed";
  out.result["trends"] = Json{
      {"window", Json::array({cfg.m_asym, cfg.m_max})},
      {"deviation_ratio", Json{{"applicable", dev.applicable}, {"slope", detail::num(dev.slope)}, {"spread", detail::num(dev.spread)}, {"bounded", dev.bounded}}},
      {"uv_balance", Json{{"applicable", bal.applicable}, {"slope", detail::num(bal.trend.slope)}, {"resolution_floor", detail::num(bal.trend.floor)},
                          {"below_resolution", bal.trend.below_resolution}, {"bounded", bal.bounded}}},
      {"tail_norm_slope", tails_positive && tails.size() > 1 ? Json(loglog_slope(tails)) : Json(nullptr)}};
  out.result["entries"] = e.to_json();
  out.result["harmonic_sums"] = h.to_json();
  out.result["I_decomposition"] = id.to_json();
  out.tables.emplace_back("entries", std::move(e));
  out.tables.emplace_back("harmonic_sums", std::move(h));
  out.tables.emplace_back("I_decomposition", std::move(id));
  return out;
}

inline CommandOutput cmd_gram(Session& s) {
  const auto& g = s.gram();
  Table t{{"N", "s_min", "s_max", "cond"}, {}};
  for (std::size_t i = 0; i < g.N_list.size(); ++i) t.add({g.N_list[i], g.bounds[i].s_min, g.bounds[i].s_max, detail::num(g.bounds[i].cond)});
  Json excluded = Json::array();
  for (int m : s.normal().excluded) excluded.push_back(m);
  CommandOutput out;
  out.result["m_from"] = g.m_from;
  out.result["excluded"] = excluded;
  out.result["jordan_count"] = s.normal().jordan_count_from(g.m_from);
  out.result["growth_slope"] = detail::num(g.growth_slope);
  out.result["nondecreasing"] = g.nondecreasing;
  out.result["series"] = t.to_json();
  out.tables.emplace_back("series", std::move(t));
  return out;
}

inline CommandOutput run_command(const std::string& name, Session& s) {
  if (name == "coeffs") return cmd_coeffs(s);
  if (name == "rho") return cmd_rho(s);
  if (name == "spectrum") return cmd_spectrum(s);
  if (name == "oracle") return cmd_oracle(s);
  if (name == "criterion") return cmd_criterion(s);
  if (name == "asymptotics") return cmd_asymptotics(s);
  if (name == "gram") return cmd_gram(s);
  if (name == "report") {
    CommandOutput all;
    for (const auto& c : commands()) {
      if (c == "report") continue;
      auto part = run_command(c, s);
      all.result[c] = part.result;
      all.indeterminate = all.indeterminate || part.indeterminate;
      for (auto& [tn, t] : part.tables) all.tables.emplace_back(c + "." + tn, std::move(t));
    }
    return all;
  }
  throw ConfigError("unknown command '" + name + "'");
}

/// Full output document: tool, version, command, resolved config, result.
inline Json document(const std::string& name, const RunConfig& cfg, const CommandOutput& out) {
  return Json{{"tool", "hillriesz"}, {"version", version}, {"command", name}, {"config", config_to_json(cfg)}, {"result", out.result}};
}

/// CSV projection: one table per section, each introduced by a "# <name>" line; the header
/// "# hillriesz <version> <command>" and the resolved config as a single JSON comment line come first.
inline void write_csv_document(const std::string& name, const RunConfig& cfg, const CommandOutput& out, std::ostream& os) {
  os << "# hillriesz " << version << " " << name << "\n";
  os << "# config " << config_to_json(cfg).dump() << "\n";
  for (const auto& [tn, t] : out.tables) {
    os << "# " << tn << "\n";
    write_csv(t, os);
  }
}

/// Exit code for an exception escaping a command.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const FrequencyOutOfRange*>(&e) ||
      dynamic_cast<const TruncationTooSmall*>(&e) || dynamic_cast<const nlohmann::json::exception*>(&e))
    return config_error;
  return numerical_failure;
}

/// Validates, runs and writes one command. Returns the process exit code.
inline int execute(const std::string& name, RunConfig cfg, std::ostream& out, std::ostream& err) {
  try {
    if (std::find(commands().begin(), commands().end(), name) == commands().end())
      throw ConfigError("unknown command '" + name + "'");
    PotentialModel q = validate(cfg);
    Session session(cfg, std::move(q));
    const CommandOutput result = run_command(name, session);
    std::ostringstream buf;
    if (cfg.format == "csv") {
      write_csv_document(name, cfg, result, buf);
    } else {
      write_json(document(name, cfg, result), buf);
      buf << "\n";
    }
    if (cfg.out == "-") {
      out << buf.str();
    } else {
      std::ofstream f(cfg.out, std::ios::binary);
      if (!f) throw ConfigError("cannot open output file '" + cfg.out + "'");
      f << buf.str();
    }
    if (cfg.strict && result.indeterminate) {
      err << "hillriesz: verdict is indeterminate (strict mode)\n";
      return strict_indeterminate;
    }
    return ok;
  } catch (const std::exception& e) {
    err << "hillriesz: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace hillriesz::cli

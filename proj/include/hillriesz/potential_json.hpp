#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "hillriesz/common.hpp"
#include "hillriesz/potential.hpp"

namespace hillriesz {

using Json = nlohmann::ordered_json;

namespace detail {

inline cplx json_complex(const Json& v, const std::string& what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError(what + " must be a number or a [re, im] pair");
}

template <typename T>
T json_field(const Json& spec, const char* key, const T& fallback) {
  if (!spec.contains(key)) return fallback;
  try {
    return spec.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("potential field '") + key + "' has the wrong type");
  }
}

template <typename T>
T json_required(const Json& spec, const char* key) {
  if (!spec.contains(key)) throw ConfigError(std::string("potential spec is missing '") + key + "'");
  return json_field<T>(spec, key, T{});
}

inline int json_parity(const Json& spec) {
  const auto p = json_field<std::string>(spec, "parity", "even");
  if (p == "even") return 0;
  if (p == "odd") return 1;
  throw ConfigError("parity must be \"even\" or \"odd\"");
}

}  // namespace detail

/// Builds a potential from its JSON description (see README for the accepted forms).
inline PotentialModel parse_potential(const Json& spec) {
  if (!spec.is_object()) throw ConfigError("potential spec must be a JSON object");
  const auto type = detail::json_required<std::string>(spec, "type");
  auto c_of = [&] { return spec.contains("c") ? detail::json_complex(spec.at("c"), "c") : cplx{1.0}; };
  auto mmax_of = [&] {
    const int mmax = detail::json_required<int>(spec, "mmax");
    if (mmax < 1) throw ConfigError("mmax must be positive");
    return mmax;
  };

  if (type == "zero") return families::zero();
  if (type == "trig") {
    std::map<int, cplx> coeffs;
    if (!spec.contains("coeffs") || !spec.at("coeffs").is_array()) throw ConfigError("trig potential needs a coeffs array");
    for (const auto& row : spec.at("coeffs")) {
      if (!row.is_array() || row.size() < 2 || row.size() > 3 || !row[0].is_number_integer())
        throw ConfigError("trig coefficient rows are [k, re] or [k, re, im]");
      const double im = row.size() == 3 ? row[2].get<double>() : 0.0;
      coeffs[row[0].get<int>()] += cplx(row[1].get<double>(), im);
    }
    return PotentialModel::from_coefficients(coeffs, detail::json_field<bool>(spec, "real", false));
  }
  if (type == "power")
    return families::power(detail::json_required<double>(spec, "alpha"), c_of(), mmax_of(), detail::json_parity(spec));
  if (type == "asym-power")
    return families::asym_power(detail::json_required<double>(spec, "alpha"), detail::json_required<double>(spec, "beta"),
                                c_of(), mmax_of(), detail::json_parity(spec));
  if (type == "one-sided")
    return families::one_sided(detail::json_required<double>(spec, "alpha"), c_of(), mmax_of(), detail::json_parity(spec));
  if (type == "samples") {
    if (!spec.contains("values") || !spec.at("values").is_array()) throw ConfigError("samples potential needs a values array");
    std::vector<cplx> values;
    for (const auto& v : spec.at("values")) values.push_back(detail::json_complex(v, "sample value"));
    return PotentialModel::from_samples(std::move(values), detail::json_field<int>(spec, "kmax", -1));
  }
  if (type == "sawtooth")
    return families::sawtooth_samples(detail::json_required<int>(spec, "L"), detail::json_field<int>(spec, "period", 1),
                                      detail::json_field<int>(spec, "kmax", -1));
  throw ConfigError("unknown potential type '" + type + "'");
}

}  // namespace hillriesz

#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "besselbridge/laws.hpp"
#include "besselbridge/measures.hpp"
#include "besselbridge/renorm.hpp"
#include "besselbridge/spde.hpp"

namespace besselbridge::config {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline json load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
}

/// Rejects any key of an object not in the whitelist.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

inline const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return j.at(key);
}

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

inline double number_or(const json& j, const char* key, double fallback, const std::string& where) {
    return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
}

inline std::uint64_t count_or(const json& j, const char* key, std::uint64_t fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(where + "." + key + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

inline bool bool_or(const json& j, const char* key, bool fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
    return j.at(key).get<bool>();
}

inline std::vector<double> numbers(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::string string(const json& j, const std::string& where) {
    if (!j.is_string()) throw ConfigError(where + ": expected a string");
    return j.get<std::string>();
}

/// {atoms: [[r, w], ...], density: {breaks: [...], values: [...]}}; both optional.
inline FiniteMeasure measure(const json& j, const std::string& where) {
    check_keys(j, {"atoms", "density"}, where);
    std::vector<Atom> atoms;
    if (j.contains("atoms")) {
        const auto& a = j.at("atoms");
        if (!a.is_array()) throw ConfigError(where + ".atoms: expected an array of [r, w] pairs");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto pair = numbers(a[i], where + ".atoms[" + std::to_string(i) + "]");
            if (pair.size() != 2) throw ConfigError(where + ".atoms: each atom is [r, w]");
            atoms.push_back({pair[0], pair[1]});
        }
    }
    std::vector<double> breaks{0.0, 1.0}, values{0.0};
    if (j.contains("density")) {
        const auto& d = j.at("density");
        check_keys(d, {"breaks", "values"}, where + ".density");
        breaks = numbers(require(d, "breaks", where + ".density"), where + ".density.breaks");
        values = numbers(require(d, "values", where + ".density"), where + ".density.values");
    }
    try {
        return FiniteMeasure(std::move(atoms), std::move(breaks), std::move(values));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

/// {id, terms: [{coefficient, measure}, ...]}
inline ExpFunctional functional(const json& j, const std::string& where) {
    check_keys(j, {"id", "terms"}, where);
    const auto& terms = require(j, "terms", where);
    if (!terms.is_array() || terms.empty()) throw ConfigError(where + ".terms: expected a nonempty array");
    std::vector<std::pair<double, FiniteMeasure>> t;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string w = where + ".terms[" + std::to_string(i) + "]";
        check_keys(terms[i], {"coefficient", "measure"}, w);
        t.emplace_back(number_or(terms[i], "coefficient", 1.0, w),
                       terms[i].contains("measure") ? measure(terms[i].at("measure"), w + ".measure") : FiniteMeasure::zero());
    }
    ExpFunctional phi(std::move(t));
    phi.set_name(j.contains("id") ? string(j.at("id"), where + ".id") : "phi");
    return phi;
}

/// {family: "poly" | "bump", params: [...]}
inline TestFunctionH test_function_h(const json& j, const std::string& where) {
    check_keys(j, {"family", "params"}, where);
    try {
        return TestFunctionH::from_params(string(require(j, "family", where), where + ".family"),
                                          numbers(require(j, "params", where), where + ".params"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

/// {family: "exponential", lambda} | {family: "gaussian", c} | {family: "poly_gaussian", coeffs, c}
inline ScalarTestFunction scalar_function(const json& j, const std::string& where) {
    check_keys(j, {"family", "lambda", "c", "coeffs"}, where);
    const auto family = string(require(j, "family", where), where + ".family");
    try {
        if (family == "exponential") return test_functions::exponential(number(require(j, "lambda", where), where + ".lambda"));
        if (family == "gaussian") return test_functions::gaussian(number(require(j, "c", where), where + ".c"));
        if (family == "poly_gaussian")
            return test_functions::poly_gaussian(numbers(require(j, "coeffs", where), where + ".coeffs"),
                                                 number(require(j, "c", where), where + ".c"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    throw ConfigError(where + ": unknown family '" + family + "' (expected exponential, gaussian or poly_gaussian)");
}

/// {family: "sine" | "poly", coeffs: [...]}
inline KFunction k_function(const json& j, const std::string& where) {
    check_keys(j, {"family", "coeffs"}, where);
    try {
        return KFunction::from_params(string(require(j, "family", where), where + ".family"),
                                      numbers(require(j, "coeffs", where), where + ".coeffs"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace besselbridge::config

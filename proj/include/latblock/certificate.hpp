// Evasion certificates: a versioned JSON document with sorted keys. Exact
// values are "num/den" strings; floating values ride alongside.

#pragma once

#include "latblock/numeric.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace latblock {

inline constexpr int kCertificateVersion = 1;

struct EvasionCertificate {
    std::string kind = "sl2";                 // "sl2" or "quat"
    std::array<std::string, 4> target;        // exact input target (matrix entries or x,y,z,w)
    std::array<std::string, 4> normalized;    // exact reduced representative used for the family
    std::array<std::string, 4> gamma;         // lattice element, relative to the input target
    std::map<std::string, std::string> family_params;
    std::string trace;                        // exact trace of target*gamma
    double t = 0.5;
    double lambda = 0.0;
    double a_lambda = 1.0;
    std::vector<std::array<double, 4>> candidates;
    std::vector<double> clearances;
    std::map<std::string, nlohmann::json> attestations;
    std::size_t density = 0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    long long algebra_a = 0, algebra_b = 0;  // quaternion case only

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["version"] = kCertificateVersion;
        j["kind"] = kind;
        j["target"] = target;
        j["normalized_target"] = normalized;
        j["gamma"] = gamma;
        j["family_params"] = family_params;
        j["trace"] = trace;
        j["t"] = t;
        j["lambda"] = lambda;
        j["a_lambda"] = a_lambda;
        j["candidates"] = candidates;
        j["clearances"] = clearances;
        j["attestations"] = attestations;
        j["sampling"] = {{"density", density}, {"epsilon", epsilon}, {"seed", seed}};
        if (kind == "quat") j["algebra"] = {{"a", algebra_a}, {"b", algebra_b}};
        return j;
    }

    std::string dump() const { return to_json().dump(2) + "\n"; }

    static EvasionCertificate from_json(const nlohmann::json& j) {
        if (j.at("version").get<int>() != kCertificateVersion)
            throw std::invalid_argument("unsupported certificate version " + j.at("version").dump());
        EvasionCertificate c;
        c.kind = j.at("kind").get<std::string>();
        c.target = j.at("target").get<std::array<std::string, 4>>();
        c.normalized = j.at("normalized_target").get<std::array<std::string, 4>>();
        c.gamma = j.at("gamma").get<std::array<std::string, 4>>();
        c.family_params = j.at("family_params").get<std::map<std::string, std::string>>();
        c.trace = j.at("trace").get<std::string>();
        c.t = j.at("t").get<double>();
        c.lambda = j.at("lambda").get<double>();
        c.a_lambda = j.at("a_lambda").get<double>();
        c.candidates = j.at("candidates").get<std::vector<std::array<double, 4>>>();
        c.clearances = j.at("clearances").get<std::vector<double>>();
        c.attestations = j.at("attestations").get<std::map<std::string, nlohmann::json>>();
        const auto& s = j.at("sampling");
        c.density = s.at("density").get<std::size_t>();
        c.epsilon = s.at("epsilon").get<double>();
        c.seed = s.at("seed").get<std::uint64_t>();
        if (c.kind == "quat") {
            c.algebra_a = j.at("algebra").at("a").get<long long>();
            c.algebra_b = j.at("algebra").at("b").get<long long>();
        } else if (c.kind != "sl2") {
            throw std::invalid_argument("unknown certificate kind '" + c.kind + "'");
        }
        return c;
    }

    static EvasionCertificate parse(const std::string& text) { return from_json(nlohmann::json::parse(text)); }
};

inline std::array<std::string, 4> exact_strings(const Rational& a, const Rational& b, const Rational& c,
                                                const Rational& d) {
    return {a.fraction_str(), b.fraction_str(), c.fraction_str(), d.fraction_str()};
}

inline std::array<Rational, 4> parse_exact(const std::array<std::string, 4>& s) {
    return {Rational::parse(s[0]), Rational::parse(s[1]), Rational::parse(s[2]), Rational::parse(s[3])};
}

/// Outcome of re-checking a stored certificate.
struct ReplayReport {
    bool ok = true;
    double max_clearance_diff = 0.0;
    std::vector<std::string> failures;

    void fail(std::string why) {
        ok = false;
        failures.push_back(std::move(why));
    }
};

}  // namespace latblock

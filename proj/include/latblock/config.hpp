// Run configuration: defaults, JSON config files and the LATBLOCK_CONFIG
// environment override.

#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>

namespace latblock {

enum class OutputFormat { json, csv, text };

inline OutputFormat parse_format(const std::string& s) {
    if (s == "json") return OutputFormat::json;
    if (s == "csv") return OutputFormat::csv;
    if (s == "text") return OutputFormat::text;
    throw std::invalid_argument("unknown output format '" + s + "' (json, csv, text)");
}

struct RunConfig {
    double epsilon = 1e-9;           // exactness tolerance
    double blocking_epsilon = 1e-3;  // clearance a curve must keep
    std::size_t sample_density = 10000;
    std::size_t budget = 100;
    std::uint64_t seed = 0;
    OutputFormat format = OutputFormat::json;

    void validate() const {
        if (!(epsilon > 0) || !(blocking_epsilon > 0)) throw std::invalid_argument("config: tolerances must be positive");
        if (sample_density < 2) throw std::invalid_argument("config: sample_density must be at least 2");
        if (budget == 0) throw std::invalid_argument("config: budget must be positive");
    }

    /// Overrides fields present in j; unknown keys are rejected.
    void merge(const nlohmann::json& j) {
        if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
        for (const auto& [key, v] : j.items()) {
            if (key == "epsilon")
                epsilon = v.get<double>();
            else if (key == "blocking_epsilon")
                blocking_epsilon = v.get<double>();
            else if (key == "sample_density")
                sample_density = v.get<std::size_t>();
            else if (key == "budget")
                budget = v.get<std::size_t>();
            else if (key == "seed")
                seed = v.get<std::uint64_t>();
            else if (key == "format")
                format = parse_format(v.get<std::string>());
            else
                throw std::invalid_argument("config: unknown key '" + key + "'");
        }
        validate();
    }

    void merge_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw std::invalid_argument("config: " + path + ": " + e.what());
        }
        merge(j);
    }

    /// Defaults, then the file named by LATBLOCK_CONFIG if set.
    static RunConfig from_environment() {
        RunConfig c;
        if (const char* p = std::getenv("LATBLOCK_CONFIG"); p && *p) c.merge_file(p);
        return c;
    }
};

}  // namespace latblock

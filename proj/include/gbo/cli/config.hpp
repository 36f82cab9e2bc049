#pragma once

#include "gbo/errors.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace gbo::cli {

inline const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids = {
        "solve",  "linearized", "conserve", "scaling",          "gauge-kernel", "nf-cancel", "nf-residual",
        "hamilton", "eikonal",  "fbi",      "packet",           "dispersive-decay", "strichartz", "bilinear",
        "envelope", "lwp-converge"};
    return ids;
}

struct ParamSpec {
    const char* key;
    const char* unit;
    bool integer;
    double lo, hi;
};

// Numeric keys with their accepted closed ranges.
inline const std::vector<ParamSpec>& param_specs() {
    static const std::vector<ParamSpec> specs = {
        {"alpha", "1", false, 1e-3, 3},     {"k", "1", true, 1, 20},
        {"lambda", "1/length", false, 1, 1e6}, {"lambda_max", "1/length", false, 1, 1e6},
        {"mu", "1/length", false, 1, 1e6},  {"m", "1", false, 2, 3},
        {"tau", "time", false, 1e-12, 1},   {"N", "1", true, 8, 1 << 16},
        {"K_L", "1", true, -8, 16},         {"dt", "time", false, 1e-9, 1},
        {"T", "time", false, 1e-9, 1e4},    {"eps", "1", false, 1e-12, 1},
        {"s", "1", false, -2, 4},           {"seed", "1", true, 0, 9007199254740991.0}};
    return specs;
}

inline const ParamSpec* find_param(std::string_view key) {
    for (const auto& p : param_specs())
        if (key == p.key) return &p;
    return nullptr;
}

struct IdSpec {
    std::vector<std::string> required;
    std::map<std::string, double> defaults;  // on top of the global defaults
};

// Required keys and per-experiment defaults. Grid overrides apply where the module needs a
// resolved block or a finer frequency lattice than K_L = 4, N = 512 gives.
inline const std::map<std::string, IdSpec>& id_specs() {
    static const std::map<std::string, IdSpec> specs = {
        {"solve", {{"alpha"}, {{"T", 1}, {"eps", 0.01}}}},
        {"linearized", {{"alpha"}, {{"T", 1}, {"eps", 0.01}}}},
        {"conserve", {{"alpha"}, {{"T", 1}, {"eps", 0.01}}}},
        {"scaling", {{"alpha"}, {{"lambda", 2}, {"T", 0.05}, {"eps", 0.01}, {"dt", 1e-4}}}},
        {"gauge-kernel", {{"alpha"}, {{"k", 4}, {"K_L", 0}, {"eps", 0.6}}}},
        {"nf-cancel", {{"alpha"}, {{"k", 4}, {"K_L", 0}, {"N", 256}}}},
        {"nf-residual", {{"alpha"}, {{"k", 5}, {"K_L", 0}, {"eps", 0.01}}}},
        {"hamilton", {{"m", "lambda"}, {}}},
        {"eikonal", {{"m", "lambda"}, {}}},
        {"fbi", {{}, {{"K_L", 1}, {"N", 256}}}},
        {"packet", {{"m", "lambda"}, {{"tau", 0.25}, {"K_L", 3}, {"N", 1024}}}},
        {"dispersive-decay", {{"m"}, {{"lambda", 16}, {"lambda_max", 32}}}},
        {"strichartz", {{"alpha"}, {{"T", 1}, {"eps", 0.01}}}},
        {"bilinear", {{"alpha"}, {{"mu", 8}, {"lambda", 16}, {"lambda_max", 256}}}},
        {"envelope", {{}, {{"s", 0}, {"eps", 0.01}, {"K_L", 0}, {"N", 1024}}}},
        {"lwp-converge", {{}, {{"alpha", 1.5}, {"s", 0}, {"eps", 0.01}, {"K_L", 0}, {"N", 2048}, {"T", 1}}}}};
    return specs;
}

inline const std::map<std::string, double>& global_defaults() {
    static const std::map<std::string, double> d = {{"N", 512}, {"K_L", 4}, {"dt", 1e-3}, {"seed", 1}};
    return d;
}

struct ExperimentConfig {
    std::string experiment;
    std::map<std::string, double> params;  // validated numeric values, defaults filled
    std::set<std::string> given;           // keys present in the source text
    std::string out;                       // output directory ("" = caller decides)

    bool has(const std::string& key) const { return params.count(key) > 0; }

    double get(const std::string& key) const {
        auto it = params.find(key);
        if (it == params.end()) throw ConfigError("experiment '" + experiment + "' has no value for key '" + key + "'");
        return it->second;
    }
    double get(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
    int get_int(const std::string& key) const { return static_cast<int>(get(key)); }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_number(const std::string& key, const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v))
        throw ConfigError("key '" + key + "': '" + text + "' is not a finite number");
    return v;
}

inline void check_range(const ParamSpec& p, double v) {
    if (p.integer && v != std::floor(v)) throw ConfigError(std::string("key '") + p.key + "' must be an integer");
    if (v < p.lo || v > p.hi) {
        std::ostringstream os;
        os << "key '" << p.key << "' = " << v << " outside [" << p.lo << ", " << p.hi << "]";
        throw ConfigError(os.str());
    }
}

} // namespace detail

// key=value lines, '#' comments, an optional [experiment] section header.
inline ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::map<std::string, std::string> raw;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line != "[experiment]")
                throw ConfigError("line " + std::to_string(lineno) + ": unknown section " + line);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (key != "experiment" && key != "out" && !find_param(key)) throw ConfigError("unknown key '" + key + "'");
        if (!raw.emplace(key, value).second) throw ConfigError("key '" + key + "' given twice");
    }

    auto id = raw.find("experiment");
    if (id == raw.end()) throw ConfigError("missing required key 'experiment'");
    const auto& ids = experiment_ids();
    if (std::find(ids.begin(), ids.end(), id->second) == ids.end())
        throw ConfigError("key 'experiment': unknown experiment id '" + id->second + "'");
    cfg.experiment = id->second;
    if (auto o = raw.find("out"); o != raw.end()) cfg.out = o->second;

    for (const auto& [key, value] : raw) {
        cfg.given.insert(key);
        if (key == "experiment" || key == "out") continue;
        const ParamSpec& p = *find_param(key);
        const double v = detail::parse_number(key, value);
        detail::check_range(p, v);
        cfg.params[key] = v;
    }

    const IdSpec& spec = id_specs().at(cfg.experiment);
    for (const auto& key : spec.required)
        if (!cfg.params.count(key))
            throw ConfigError("missing required key '" + key + "' for experiment '" + cfg.experiment + "'");
    for (const auto& [key, v] : spec.defaults) cfg.params.emplace(key, v);
    for (const auto& [key, v] : global_defaults()) cfg.params.emplace(key, v);

    const double N = cfg.get("N");
    if (std::exp2(std::round(std::log2(N))) != N) throw ConfigError("key 'N' must be a power of two");
    if (cfg.has("lambda_max") && cfg.get("lambda_max") < cfg.get("lambda", 1))
        throw ConfigError("key 'lambda_max' must not be below 'lambda'");
    return cfg;
}

// Canonical key=value echo, sorted by key, floats at 17 significant digits.
inline std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("experiment", cfg.experiment);
    char buf[64];
    for (const auto& [key, v] : cfg.params) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out.emplace_back(key, buf);
    }
    return out;
}

} // namespace gbo::cli

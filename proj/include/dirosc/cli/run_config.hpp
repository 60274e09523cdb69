#pragma once

// Flat `section.key = value` run configuration.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "dirosc/errors.hpp"
#include "dirosc/model.hpp"

namespace dirosc::cli {

inline constexpr std::array<std::string_view, 13> kConfigKeys = {
    "model.family",   "model.w1",           "model.alpha0",  "model.kappa",      "model.mass",
    "model.table_path", "grid.n",           "grid.box_half_width", "solver.route", "solver.levels",
    "solver.tolerance", "output.format",    "output.path",
};

inline bool is_config_key(std::string_view key) {
    return std::find(kConfigKeys.begin(), kConfigKeys.end(), key) != kConfigKeys.end();
}

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
        throw ConfigError(key + ": '" + text + "' is not a finite number");
    return v;
}

inline long parse_int(const std::string& key, const std::string& text) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError(key + ": '" + text + "' is not an integer");
    return v;
}

}  // namespace detail

/// Parses config text. Blank lines and lines starting with '#' are ignored;
/// unknown or repeated keys are errors.
inline ConfigMap parse_config_text(std::string_view text) {
    ConfigMap out;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'section.key = value'");
        std::string key = detail::trim(std::string_view(t).substr(0, eq));
        std::string value = detail::trim(std::string_view(t).substr(eq + 1));
        if (!is_config_key(key)) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (!out.emplace(key, value).second)
            throw ConfigError("line " + std::to_string(lineno) + ": repeated key '" + key + "'");
    }
    return out;
}

inline ConfigMap load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

enum class RouteChoice { Analytic, Dirac, Susy, All };
enum class OutputFormat { Csv, Json };

struct RunConfig {
    Family family = Family::Linear;
    double w1 = 1.0;
    double alpha0 = 5.0;
    double kappa = 0.0;
    double mass = 1.0;
    std::string table_path;
    std::size_t grid_n = 4000;
    double box_half_width = 20.0;
    RouteChoice route = RouteChoice::All;
    int levels = 5;
    double tolerance = 1e-6;
    OutputFormat format = OutputFormat::Csv;
    std::string output_path;

    /// Loads the tabulated superpotential when needed.
    PhysicalParams physical_params() const {
        PhysicalParams p;
        p.mass = mass;
        p.kappa = kappa;
        switch (family) {
        case Family::Linear: p.superpotential = Superpotential::linear(w1); break;
        case Family::Tangent: p.superpotential = Superpotential::tangent(alpha0); break;
        case Family::Tabulated: p.superpotential = Superpotential::load_table(table_path); break;
        }
        return p;
    }
};

/// Applies `overrides` on top of `base`; both must hold only known keys.
inline RunConfig make_run_config(const ConfigMap& base, const ConfigMap& overrides = {}) {
    ConfigMap merged = base;
    for (const auto& [k, v] : overrides) {
        if (!is_config_key(k)) throw ConfigError("unknown key '" + k + "'");
        merged[k] = v;
    }
    RunConfig c;
    for (const auto& [key, value] : merged) {
        if (!is_config_key(key)) throw ConfigError("unknown key '" + key + "'");
        if (key == "model.family") {
            if (value == "linear") c.family = Family::Linear;
            else if (value == "tan") c.family = Family::Tangent;
            else if (value == "tabulated") c.family = Family::Tabulated;
            else throw ConfigError("model.family must be linear, tan or tabulated");
        } else if (key == "model.w1") {
            c.w1 = detail::parse_double(key, value);
        } else if (key == "model.alpha0") {
            c.alpha0 = detail::parse_double(key, value);
        } else if (key == "model.kappa") {
            c.kappa = detail::parse_double(key, value);
        } else if (key == "model.mass") {
            c.mass = detail::parse_double(key, value);
        } else if (key == "model.table_path") {
            c.table_path = value;
        } else if (key == "grid.n") {
            long n = detail::parse_int(key, value);
            if (n < 8) throw ConfigError("grid.n must be >= 8");
            c.grid_n = static_cast<std::size_t>(n);
        } else if (key == "grid.box_half_width") {
            c.box_half_width = detail::parse_double(key, value);
        } else if (key == "solver.route") {
            if (value == "analytic") c.route = RouteChoice::Analytic;
            else if (value == "dirac") c.route = RouteChoice::Dirac;
            else if (value == "susy") c.route = RouteChoice::Susy;
            else if (value == "all") c.route = RouteChoice::All;
            else throw ConfigError("solver.route must be analytic, dirac, susy or all");
        } else if (key == "solver.levels") {
            long n = detail::parse_int(key, value);
            if (n < 1 || n > 1000) throw ConfigError("solver.levels must be in 1..1000");
            c.levels = static_cast<int>(n);
        } else if (key == "solver.tolerance") {
            c.tolerance = detail::parse_double(key, value);
        } else if (key == "output.format") {
            if (value == "csv") c.format = OutputFormat::Csv;
            else if (value == "json") c.format = OutputFormat::Json;
            else throw ConfigError("output.format must be csv or json");
        } else if (key == "output.path") {
            c.output_path = value;
        }
    }
    if (c.family == Family::Linear && !(c.w1 > 0.0)) throw ConfigError("model.w1 must be > 0");
    if (c.family == Family::Tangent && !(c.alpha0 > 0.0)) throw ConfigError("model.alpha0 must be > 0");
    if (c.family == Family::Tabulated && c.table_path.empty())
        throw ConfigError("model.table_path is required for the tabulated family");
    if (!(c.mass >= 0.0)) throw ConfigError("model.mass must be >= 0");
    if (!(c.box_half_width > 0.0)) throw ConfigError("grid.box_half_width must be > 0");
    if (!(c.tolerance > 0.0)) throw ConfigError("solver.tolerance must be > 0");
    return c;
}

}  // namespace dirosc::cli

// Scenario configuration: a line-oriented "key = value" document describing
// geometry, budgets, QoS exponents, weights, sample counts and tolerances.
// Powers are dB in the document and linear everywhere else; the conversion
// happens exactly once, here.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace twr {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline const std::vector<std::string>& known_schemes() {
    static const std::vector<std::string> v = {
        "direct", "three_phase", "three_phase_fixed",
        "two_phase", "two_phase_fixed", "two_phase_weight"};
    return v;
}

struct ScenarioConfig {
    double relay_distance = 1.0;
    double path_loss_exponent = 4.0;
    double power_a_db = 9.0;
    double power_b_db = 9.0;
    double power_r_db = 6.0;
    double weight_a = 0.6;
    double theta_a = 1.0;
    double theta_b = 1.0;
    std::size_t samples = 20000;
    std::uint64_t seed = 1;
    std::vector<std::string> protocols = {"direct", "three_phase", "two_phase"};
    double tolerance_power = 1e-3;
    double tolerance_root = 1e-10;

    double budget_a() const { return db_to_linear(power_a_db); }
    double budget_b() const { return db_to_linear(power_b_db); }
    double budget_r() const { return db_to_linear(power_r_db); }
    double weight_b() const { return 1.0 - weight_a; }

    void validate() const {
        if (!(relay_distance > 0.0 && relay_distance < 2.0))
            throw ConfigError("relay_distance must lie in (0,2)");
        if (!(path_loss_exponent > 0.0))
            throw ConfigError("path_loss_exponent must be positive");
        if (!(weight_a >= 0.0 && weight_a <= 1.0))
            throw ConfigError("weight_a must lie in [0,1]");
        if (!(theta_a > 0.0 && theta_b > 0.0))
            throw ConfigError("theta_a and theta_b must be positive");
        if (samples < 1) throw ConfigError("samples must be >= 1");
        if (!(tolerance_power > 0.0) || !(tolerance_root > 0.0))
            throw ConfigError("tolerances must be positive");
        for (const auto& p : protocols) {
            const auto& k = known_schemes();
            if (std::find(k.begin(), k.end(), p) == k.end())
                throw ConfigError("unknown protocol '" + p + "'");
        }
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": expected a number, got '" + v + "'");
    }
}

}  // namespace detail

inline ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string value = detail::trim(s.substr(eq + 1));

        if (key == "relay_distance") cfg.relay_distance = detail::parse_real(value, line);
        else if (key == "path_loss_exponent") cfg.path_loss_exponent = detail::parse_real(value, line);
        else if (key == "power_a_db") cfg.power_a_db = detail::parse_real(value, line);
        else if (key == "power_b_db") cfg.power_b_db = detail::parse_real(value, line);
        else if (key == "power_r_db") cfg.power_r_db = detail::parse_real(value, line);
        else if (key == "weight_a") cfg.weight_a = detail::parse_real(value, line);
        else if (key == "weights") {
            std::istringstream vs(value);
            double wa, wb;
            if (!(vs >> wa >> wb))
                throw ConfigError("line " + std::to_string(line) + ": weights needs two values");
            if (std::abs(wa + wb - 1.0) > 1e-12)
                throw ConfigError("line " + std::to_string(line) + ": weights must sum to 1");
            cfg.weight_a = wa;
        } else if (key == "theta_a") cfg.theta_a = detail::parse_real(value, line);
        else if (key == "theta_b") cfg.theta_b = detail::parse_real(value, line);
        else if (key == "samples") {
            const double n = detail::parse_real(value, line);
            if (n < 1 || n != std::floor(n))
                throw ConfigError("line " + std::to_string(line) + ": samples must be a positive integer");
            cfg.samples = static_cast<std::size_t>(n);
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(detail::parse_real(value, line));
        } else if (key == "protocols") {
            cfg.protocols.clear();
            std::string v = value;
            std::replace(v.begin(), v.end(), ',', ' ');
            std::istringstream vs(v);
            std::string tok;
            while (vs >> tok) cfg.protocols.push_back(tok);
            if (cfg.protocols.empty())
                throw ConfigError("line " + std::to_string(line) + ": protocols list is empty");
        } else if (key == "tolerance_power") cfg.tolerance_power = detail::parse_real(value, line);
        else if (key == "tolerance_root") cfg.tolerance_root = detail::parse_real(value, line);
        else throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("config invariant violated: ") + e.what());
    }
    return cfg;
}

inline std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

inline std::string emit_config(const ScenarioConfig& cfg) {
    std::ostringstream out;
    out << "relay_distance = " << format_real(cfg.relay_distance) << "\n"
        << "path_loss_exponent = " << format_real(cfg.path_loss_exponent) << "\n"
        << "power_a_db = " << format_real(cfg.power_a_db) << "\n"
        << "power_b_db = " << format_real(cfg.power_b_db) << "\n"
        << "power_r_db = " << format_real(cfg.power_r_db) << "\n"
        << "weight_a = " << format_real(cfg.weight_a) << "\n"
        << "theta_a = " << format_real(cfg.theta_a) << "\n"
        << "theta_b = " << format_real(cfg.theta_b) << "\n"
        << "samples = " << cfg.samples << "\n"
        << "seed = " << cfg.seed << "\n";
    out << "protocols = ";
    for (std::size_t i = 0; i < cfg.protocols.size(); ++i) {
        if (i) out << " ";
        out << cfg.protocols[i];
    }
    out << "\n"
        << "tolerance_power = " << format_real(cfg.tolerance_power) << "\n"
        << "tolerance_root = " << format_real(cfg.tolerance_root) << "\n";
    return out.str();
}

}  // namespace twr

/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "epsdiag/classify.hpp"
#include "epsdiag/env_orbit.hpp"
#include "epsdiag/eps_plant.hpp"
#include "epsdiag/errors.hpp"
#include "epsdiag/features.hpp"
#include "epsdiag/sysid.hpp"
#include "epsdiag/util.hpp"

namespace epsdiag {

/// Experiment-level knobs: dataset windows and evaluation protocol.
struct ClassifyConfig {
    std::size_t n_samples = 3750;      // simulated samples per class run
    double dt_s = 1.0;
    std::size_t window = 2001;         // dataset rows per class
    std::size_t eps_burn_in = 0;       // residual/moment task keeps the thermal transient
    std::size_t pair_burn_in = 1600;   // (I_load, SOC) task starts once trends are established
    bool with_moment = true;
    bool use_true_soc = false;
    double holdout_fraction = 0.25;    // trailing time block held out per class
    std::size_t k_folds = 5;
    std::vector<std::size_t> knn_candidates = {1, 2, 3};
    std::size_t dt_max_depth = 32;
    std::size_t dt_min_leaf = 15;
};

inline void validate(const ClassifyConfig& c) {
    if (c.n_samples < 1) throw ConfigError("n_samples must be >= 1");
    if (!(c.dt_s > 0.0)) throw ConfigError("dt_s must be > 0");
    if (c.window < 2) throw ConfigError("window must be >= 2");
    if (c.eps_burn_in + c.window > c.n_samples)
        throw ConfigError("eps_burn_in + window exceeds n_samples");
    if (c.pair_burn_in + c.window > c.n_samples)
        throw ConfigError("pair_burn_in + window exceeds n_samples");
    if (!(c.holdout_fraction > 0.0 && c.holdout_fraction < 1.0))
        throw ConfigError("holdout_fraction must be in (0, 1)");
    if (c.k_folds < 2) throw ConfigError("k_folds must be >= 2");
    if (c.knn_candidates.empty()) throw ConfigError("knn_candidates must not be empty");
    if (c.dt_min_leaf < 1) throw ConfigError("dt_min_leaf must be >= 1");
}

struct AppConfig {
    OrbitConfig orbit;
    PlantConfig plant;
    TrainConfig train;
    SocKalmanConfig kalman;
    ClassifyConfig classify;
    std::uint64_t seed = 1;  // root seed; fans out per stage
};

inline void validate(const AppConfig& c) {
    validate(c.orbit);
    validate(c.plant);
    validate(c.train);
    validate(c.kalman);
    validate(c.classify);
}

namespace detail {

struct FieldBinding {
    std::function<void(AppConfig&, const std::string&)> set;
    std::function<std::string(const AppConfig&)> get;
};

inline std::uint64_t parse_u64(const std::string& v, const std::string& field) {
    try {
        return std::stoull(v);
    } catch (...) {
        throw ConfigError("invalid unsigned integer for " + field + ": '" + v + "'");
    }
}

inline double parse_num(const std::string& v, const std::string& field) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw ConfigError("invalid number for " + field + ": '" + v + "'");
    }
}

inline bool parse_bool(const std::string& v, const std::string& field) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("invalid bool for " + field + ": '" + v + "'");
}

inline const std::map<std::string, FieldBinding>& field_registry() {
    static const std::map<std::string, FieldBinding> reg = [] {
        std::map<std::string, FieldBinding> m;
        auto num = [&m](const std::string& key, auto getter) {
            m[key] = FieldBinding{
                [key, getter](AppConfig& c, const std::string& v) { *getter(c) = parse_num(v, key); },
                [getter](const AppConfig& c) { return fmt_double(*getter(const_cast<AppConfig&>(c))); }};
        };
        auto uint = [&m](const std::string& key, auto getter) {
            m[key] = FieldBinding{
                [key, getter](AppConfig& c, const std::string& v) {
                    *getter(c) = static_cast<std::size_t>(parse_u64(v, key));
                },
                [getter](const AppConfig& c) {
                    return std::to_string(*getter(const_cast<AppConfig&>(c)));
                }};
        };
        auto u64 = [&m](const std::string& key, auto getter) {
            m[key] = FieldBinding{
                [key, getter](AppConfig& c, const std::string& v) { *getter(c) = parse_u64(v, key); },
                [getter](const AppConfig& c) {
                    return std::to_string(*getter(const_cast<AppConfig&>(c)));
                }};
        };
        auto intf = [&m](const std::string& key, auto getter) {
            m[key] = FieldBinding{
                [key, getter](AppConfig& c, const std::string& v) {
                    *getter(c) = static_cast<int>(parse_u64(v, key));
                },
                [getter](const AppConfig& c) {
                    return std::to_string(*getter(const_cast<AppConfig&>(c)));
                }};
        };
        auto boolean = [&m](const std::string& key, auto getter) {
            m[key] = FieldBinding{
                [key, getter](AppConfig& c, const std::string& v) { *getter(c) = parse_bool(v, key); },
                [getter](const AppConfig& c) {
                    return *getter(const_cast<AppConfig&>(c)) ? "true" : "false";
                }};
        };

        num("orbit.orbit_period_s", [](AppConfig& c) { return &c.orbit.orbit_period_s; });
        num("orbit.eclipse_fraction", [](AppConfig& c) { return &c.orbit.eclipse_fraction; });
        num("orbit.solar_constant_w_m2", [](AppConfig& c) { return &c.orbit.solar_constant_w_m2; });
        num("orbit.temp_sunlit_c", [](AppConfig& c) { return &c.orbit.temp_sunlit_c; });
        num("orbit.temp_eclipse_c", [](AppConfig& c) { return &c.orbit.temp_eclipse_c; });
        num("orbit.thermal_time_constant_s",
            [](AppConfig& c) { return &c.orbit.thermal_time_constant_s; });
        num("orbit.irradiance_noise_sigma",
            [](AppConfig& c) { return &c.orbit.irradiance_noise_sigma; });

        intf("plant.n_series", [](AppConfig& c) { return &c.plant.n_series; });
        intf("plant.n_parallel", [](AppConfig& c) { return &c.plant.n_parallel; });
        num("plant.i_sc_ref_a", [](AppConfig& c) { return &c.plant.i_sc_ref_a; });
        num("plant.v_oc_ref_v", [](AppConfig& c) { return &c.plant.v_oc_ref_v; });
        num("plant.alpha_i_per_c", [](AppConfig& c) { return &c.plant.alpha_i_per_c; });
        num("plant.beta_v_per_c", [](AppConfig& c) { return &c.plant.beta_v_per_c; });
        num("plant.g_ref_w_m2", [](AppConfig& c) { return &c.plant.g_ref_w_m2; });
        num("plant.converter_efficiency",
            [](AppConfig& c) { return &c.plant.converter_efficiency; });
        num("plant.regulator_setpoint_v",
            [](AppConfig& c) { return &c.plant.regulator_setpoint_v; });
        num("plant.battery_capacity_ah", [](AppConfig& c) { return &c.plant.battery_capacity_ah; });
        num("plant.battery_v_nom", [](AppConfig& c) { return &c.plant.battery_v_nom; });
        num("plant.soc_init", [](AppConfig& c) { return &c.plant.soc_init; });
        num("plant.load_resistance_ohm", [](AppConfig& c) { return &c.plant.load_resistance_ohm; });
        num("plant.housekeeping_load_w", [](AppConfig& c) { return &c.plant.housekeeping_load_w; });
        num("plant.ground_fault_leak_a", [](AppConfig& c) { return &c.plant.ground_fault_leak_a; });
        intf("plant.lineline_shorted_cells",
             [](AppConfig& c) { return &c.plant.lineline_shorted_cells; });
        num("plant.igbt_open_residual_gain",
            [](AppConfig& c) { return &c.plant.igbt_open_residual_gain; });
        num("plant.meas_sigma_v_pv", [](AppConfig& c) { return &c.plant.meas_sigma_v_pv; });
        num("plant.meas_sigma_i_pv", [](AppConfig& c) { return &c.plant.meas_sigma_i_pv; });
        num("plant.meas_sigma_i_load", [](AppConfig& c) { return &c.plant.meas_sigma_i_load; });

        uint("train.n_hidden", [](AppConfig& c) { return &c.train.n_hidden; });
        uint("train.max_epochs", [](AppConfig& c) { return &c.train.max_epochs; });
        num("train.mu_init", [](AppConfig& c) { return &c.train.mu_init; });
        num("train.mu_factor", [](AppConfig& c) { return &c.train.mu_factor; });
        num("train.goal_mse", [](AppConfig& c) { return &c.train.goal_mse; });
        num("train.split_train", [](AppConfig& c) { return &c.train.split_train; });
        num("train.split_val", [](AppConfig& c) { return &c.train.split_val; });
        num("train.split_test", [](AppConfig& c) { return &c.train.split_test; });

        num("kalman.process_noise_q", [](AppConfig& c) { return &c.kalman.process_noise_q; });
        num("kalman.measurement_noise_r",
            [](AppConfig& c) { return &c.kalman.measurement_noise_r; });
        num("kalman.ocv_slope_v_per_soc",
            [](AppConfig& c) { return &c.kalman.ocv_slope_v_per_soc; });
        num("kalman.ocv_offset_v", [](AppConfig& c) { return &c.kalman.ocv_offset_v; });
        num("kalman.soc_init_estimate", [](AppConfig& c) { return &c.kalman.soc_init_estimate; });
        num("kalman.p_init", [](AppConfig& c) { return &c.kalman.p_init; });
        num("kalman.sensor_noise_sigma_v",
            [](AppConfig& c) { return &c.kalman.sensor_noise_sigma_v; });

        uint("classify.n_samples", [](AppConfig& c) { return &c.classify.n_samples; });
        num("classify.dt_s", [](AppConfig& c) { return &c.classify.dt_s; });
        uint("classify.window", [](AppConfig& c) { return &c.classify.window; });
        uint("classify.eps_burn_in", [](AppConfig& c) { return &c.classify.eps_burn_in; });
        uint("classify.pair_burn_in", [](AppConfig& c) { return &c.classify.pair_burn_in; });
        boolean("classify.with_moment", [](AppConfig& c) { return &c.classify.with_moment; });
        boolean("classify.use_true_soc", [](AppConfig& c) { return &c.classify.use_true_soc; });
        num("classify.holdout_fraction", [](AppConfig& c) { return &c.classify.holdout_fraction; });
        uint("classify.k_folds", [](AppConfig& c) { return &c.classify.k_folds; });
        uint("classify.dt_max_depth", [](AppConfig& c) { return &c.classify.dt_max_depth; });
        uint("classify.dt_min_leaf", [](AppConfig& c) { return &c.classify.dt_min_leaf; });
        m["classify.knn_candidates"] = FieldBinding{
            [](AppConfig& c, const std::string& v) {
                std::vector<std::size_t> out;
                std::string cur;
                for (char ch : v + ",") {
                    if (ch == ',') {
                        const std::string tok = trim(cur);
                        if (!tok.empty())
                            out.push_back(static_cast<std::size_t>(
                                parse_u64(tok, "classify.knn_candidates")));
                        cur.clear();
                    } else {
                        cur.push_back(ch);
                    }
                }
                if (out.empty()) throw ConfigError("classify.knn_candidates must not be empty");
                c.classify.knn_candidates = std::move(out);
            },
            [](const AppConfig& c) {
                std::string s;
                for (std::size_t k : c.classify.knn_candidates) {
                    if (!s.empty()) s += ",";
                    s += std::to_string(k);
                }
                return s;
            }};

        u64("seed", [](AppConfig& c) { return &c.seed; });
        return m;
    }();
    return reg;
}

} // namespace detail

/// Apply `[section]` / `key = value` text onto a config. `#` starts a
/// comment. Unknown keys raise a ConfigError naming the key.
inline void apply_config_text(AppConfig& config, const std::string& text) {
    std::string section;
    std::size_t pos = 0, line_no = 0;
    const auto& reg = detail::field_registry();
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) {
            if (pos > text.size()) break;
            continue;
        }
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string full = section.empty() ? key : section + "." + key;
        auto it = reg.find(full);
        if (it == reg.end())
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown field '" + full +
                              "'");
        it->second.set(config, value);
        if (pos > text.size()) break;
    }
}

inline AppConfig load_config_file(const std::string& path) {
    AppConfig c;
    apply_config_text(c, read_file(path));
    return c;
}

/// Canonical `key = value` dump of every resolved field, sorted by key.
inline std::string canonical_config(const AppConfig& config) {
    std::string out;
    for (const auto& [key, binding] : detail::field_registry())
        out += key + " = " + binding.get(config) + "\n";
    return out;
}

/// FNV-1a hex digest over the canonical config dump. Covers every
/// resolved value, so any change to any field changes the hash.
inline std::string config_hash(const AppConfig& config) {
    const std::string canon = canonical_config(config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace epsdiag

/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epsdiag/env_orbit.hpp"
#include "epsdiag/errors.hpp"
#include "epsdiag/rng.hpp"
#include "epsdiag/util.hpp"

namespace epsdiag {

/// Health / fault mode of the EPS. The enumerator order of the EPS task
/// classes fixes the residual-bank index order used by the classifier
/// features (healthy first, then the four EPS faults).
enum class FaultKind {
    Healthy,
    PvOpenCircuit,
    PvLineLine,
    MpptIgbtOpen,
    RegIgbtOpen,
    RegIgbtShort,
    BatteryGround,
};

inline const std::vector<FaultKind>& all_faults() {
    static const std::vector<FaultKind> v = {
        FaultKind::Healthy,      FaultKind::PvOpenCircuit, FaultKind::PvLineLine,
        FaultKind::MpptIgbtOpen, FaultKind::RegIgbtOpen,   FaultKind::RegIgbtShort,
        FaultKind::BatteryGround};
    return v;
}

/// 3-class photovoltaic task labels.
inline const std::vector<FaultKind>& pv_task_faults() {
    static const std::vector<FaultKind> v = {FaultKind::Healthy, FaultKind::PvLineLine,
                                             FaultKind::PvOpenCircuit};
    return v;
}

/// 5-class EPS task labels, in residual-bank order.
inline const std::vector<FaultKind>& eps_task_faults() {
    static const std::vector<FaultKind> v = {FaultKind::Healthy, FaultKind::BatteryGround,
                                             FaultKind::MpptIgbtOpen, FaultKind::RegIgbtOpen,
                                             FaultKind::RegIgbtShort};
    return v;
}

inline const char* fault_tag(FaultKind f) {
    switch (f) {
        case FaultKind::Healthy: return "Healthy";
        case FaultKind::PvOpenCircuit: return "PvOpenCircuit";
        case FaultKind::PvLineLine: return "PvLineLine";
        case FaultKind::MpptIgbtOpen: return "MpptIgbtOpen";
        case FaultKind::RegIgbtOpen: return "RegIgbtOpen";
        case FaultKind::RegIgbtShort: return "RegIgbtShort";
        case FaultKind::BatteryGround: return "BatteryGround";
    }
    return "?";
}

inline std::optional<FaultKind> parse_fault_tag(const std::string& tag) {
    for (FaultKind f : all_faults())
        if (tag == fault_tag(f)) return f;
    return std::nullopt;
}

inline std::string valid_fault_tags() {
    std::string s;
    for (FaultKind f : all_faults()) {
        if (!s.empty()) s += ", ";
        s += fault_tag(f);
    }
    return s;
}

/// EPS plant parameters.
///
/// Topology: a PV array feeds an MPPT stage; a series regulator
/// conditions the main bus, which supplies a resistive load bank; a
/// charge controller manages the battery. The bus transfers all
/// conditioned array power into the load bank (the spacecraft is
/// power-hungry), so the sunlit bus voltage is sqrt(P * R) capped at the
/// regulator setpoint, and during eclipse the battery holds the bus at
/// the setpoint while charge remains.
///
/// Temperature coefficients are fractional (relative change per degree C
/// away from 25 C).
struct PlantConfig {
    int n_series = 12;                 // cells per string
    int n_parallel = 4;                // strings
    double i_sc_ref_a = 0.5;           // per-string short-circuit current at g_ref, 25 C
    double v_oc_ref_v = 16.0;          // string open-circuit voltage at 25 C
    double alpha_i_per_c = 0.0004;     // fractional Isc change per C
    double beta_v_per_c = -0.008;      // fractional Voc change per C, <= 0
    double g_ref_w_m2 = 1361.0;
    double converter_efficiency = 0.90;
    double regulator_setpoint_v = 17.0;
    double battery_capacity_ah = 2.0;
    double battery_v_nom = 12.6;       // battery terminal voltage for fault-current power draw
    double soc_init = 0.65;
    double load_resistance_ohm = 9.6;
    double housekeeping_load_w = 4.5;  // essential rail drawn from battery when the chain is starved
    double ground_fault_leak_a = 0.024;
    int lineline_shorted_cells = 2;
    double igbt_open_residual_gain = 0.30;
    double meas_sigma_v_pv = 0.09;     // additive measurement noise, one sigma per signal
    double meas_sigma_i_pv = 0.007;
    double meas_sigma_i_load = 0.010;
    std::uint64_t seed = 1;
};

inline void validate(const PlantConfig& c) {
    if (c.n_series < 1) throw ConfigError("n_series must be >= 1");
    if (c.n_parallel < 1) throw ConfigError("n_parallel must be >= 1");
    if (!(c.i_sc_ref_a > 0.0)) throw ConfigError("i_sc_ref_a must be > 0");
    if (!(c.v_oc_ref_v > 0.0)) throw ConfigError("v_oc_ref_v must be > 0");
    if (!(c.beta_v_per_c <= 0.0)) throw ConfigError("beta_v_per_c must be <= 0");
    if (!(c.g_ref_w_m2 > 0.0)) throw ConfigError("g_ref_w_m2 must be > 0");
    if (!(c.converter_efficiency > 0.0 && c.converter_efficiency <= 1.0))
        throw ConfigError("converter_efficiency must be in (0, 1]");
    if (!(c.regulator_setpoint_v > 0.0)) throw ConfigError("regulator_setpoint_v must be > 0");
    if (!(c.battery_capacity_ah > 0.0)) throw ConfigError("battery_capacity_ah must be > 0");
    if (!(c.battery_v_nom > 0.0)) throw ConfigError("battery_v_nom must be > 0");
    if (!(c.soc_init >= 0.0 && c.soc_init <= 1.0)) throw ConfigError("soc_init must be in [0, 1]");
    if (!(c.load_resistance_ohm > 0.0)) throw ConfigError("load_resistance_ohm must be > 0");
    if (!(c.housekeeping_load_w >= 0.0)) throw ConfigError("housekeeping_load_w must be >= 0");
    if (!(c.ground_fault_leak_a >= 0.0)) throw ConfigError("ground_fault_leak_a must be >= 0");
    if (c.lineline_shorted_cells < 1 || c.lineline_shorted_cells >= c.n_series)
        throw ConfigError("lineline_shorted_cells must be >= 1 and < n_series");
    if (!(c.igbt_open_residual_gain >= 0.0 && c.igbt_open_residual_gain < 1.0))
        throw ConfigError("igbt_open_residual_gain must be in [0, 1)");
    if (!(c.meas_sigma_v_pv >= 0.0 && c.meas_sigma_i_pv >= 0.0 && c.meas_sigma_i_load >= 0.0))
        throw ConfigError("measurement noise sigmas must be >= 0");
}

struct TelemetrySample {
    EnvSample env;
    double v_pv_v = 0.0;
    double i_pv_a = 0.0;
    double i_load_a = 0.0;
    double soc_true = 0.0;
    FaultKind fault = FaultKind::Healthy;
    // True (pre-noise) battery current during the step, kept in memory for
    // conservation checks; not part of the CSV schema.
    double i_batt_a = 0.0;
};

namespace detail {
// P(V) exponent of the single-knee I-V model. Fixed; gives a concave
// power curve with one maximum.
inline constexpr double kIvExponent = 12.0;

struct ArrayParams {
    double i_sc = 0.0;  // array short-circuit current
    double v_oc = 0.0;  // array open-circuit voltage
};

inline ArrayParams array_params(const EnvSample& env, const PlantConfig& c, FaultKind fault) {
    const double g = env.irradiance_w_m2;
    const double t = env.panel_temp_c;
    double strings = static_cast<double>(c.n_parallel);
    if (fault == FaultKind::PvOpenCircuit) strings -= 1.0;
    double i_sc = strings * c.i_sc_ref_a * (g / c.g_ref_w_m2) * (1.0 + c.alpha_i_per_c * (t - 25.0));
    double v_oc = c.v_oc_ref_v * (1.0 + c.beta_v_per_c * (t - 25.0));
    if (fault == FaultKind::PvLineLine)
        v_oc *= static_cast<double>(c.n_series - c.lineline_shorted_cells) /
                static_cast<double>(c.n_series);
    return {std::max(i_sc, 0.0), std::max(v_oc, 0.0)};
}

inline double iv_current(double v, const ArrayParams& p) {
    if (p.v_oc <= 0.0) return 0.0;
    const double ratio = v / p.v_oc;
    return p.i_sc * (1.0 - std::pow(ratio, kIvExponent));
}
} // namespace detail

/// PV array operating point under MPPT: maximizes P = V * I(V) over
/// [0, V_oc] by golden-section search (tolerance 1e-6 * V_oc).
/// Zero irradiance yields (0, 0).
inline std::pair<double, double> pv_operating_point(const EnvSample& env, const PlantConfig& config,
                                                    FaultKind fault) {
    const detail::ArrayParams p = detail::array_params(env, config, fault);
    if (env.irradiance_w_m2 <= 0.0 || p.i_sc <= 0.0 || p.v_oc <= 0.0) return {0.0, 0.0};

    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.0, b = p.v_oc;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    auto power = [&](double v) { return v * detail::iv_current(v, p); };
    double f1 = power(x1), f2 = power(x2);
    const double tol = 1e-6 * p.v_oc;
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = power(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = power(x1);
        }
    }
    const double v = 0.5 * (a + b);
    return {v, detail::iv_current(v, p)};
}

namespace detail {
struct StepPower {
    double bus_v = 0.0;
    double i_load = 0.0;
    double i_batt = 0.0;
};

/// Fault-mode power routing. True (pre-noise) bus, load and battery
/// values for one step.
inline StepPower route_power(double v_pv, double i_pv, double soc, const PlantConfig& c,
                             FaultKind fault) {
    const double gain = c.igbt_open_residual_gain;
    const double v_set = c.regulator_setpoint_v;
    const double r = c.load_resistance_ohm;
    StepPower out;

    const double p_array = c.converter_efficiency * v_pv * i_pv;
    const bool sunlit = p_array > 0.0;

    if (sunlit) {
        // MPPT IGBT open: the conditioned chain only passes a residual
        // fraction of the array power.
        double p_chain = (fault == FaultKind::MpptIgbtOpen) ? gain * p_array : p_array;
        // Battery ground fault: the fault sinks leak current at the
        // battery terminal; the charge controller replaces it, starving
        // the load chain by the equivalent battery-referred power.
        double p_for_load = p_chain;
        if (fault == FaultKind::BatteryGround)
            p_for_load = std::max(p_chain - c.battery_v_nom * c.ground_fault_leak_a, 0.0);

        if (fault == FaultKind::RegIgbtShort) {
            // Regulation bypassed: the load bank sees the raw panel
            // voltage, limited only by the overvoltage clamp.
            out.bus_v = std::min(v_pv, v_set);
        } else {
            out.bus_v = std::min(std::sqrt(p_for_load * r), v_set);
        }
        out.i_load = out.bus_v / r;
        // Regulator IGBT open: the series pass element only conducts a
        // residual fraction of the load current.
        if (fault == FaultKind::RegIgbtOpen) out.i_load *= gain;
        const double p_load = out.bus_v * out.i_load;

        switch (fault) {
            case FaultKind::MpptIgbtOpen:
                // Chain too weak for the platform: the housekeeping rail
                // runs from the battery while the controller safes.
                out.i_batt = -c.housekeeping_load_w / v_set;
                break;
            case FaultKind::BatteryGround:
                // The same fault current also drains the battery itself.
                out.i_batt = -c.ground_fault_leak_a;
                break;
            case FaultKind::RegIgbtShort:
                // Discharge converter is part of the failed regulator;
                // only the independent charge path still runs.
                out.i_batt = std::max((p_chain - p_load) / v_set, 0.0);
                break;
            default:
                // Healthy-chain surplus goes to the charger.
                out.i_batt = std::max((p_chain - p_load) / v_set, 0.0);
                break;
        }
    } else {
        // Eclipse: battery holds the bus at the setpoint while charged.
        const bool battery_available = soc > 0.0;
        if (fault == FaultKind::RegIgbtShort) {
            out.bus_v = 0.0;  // bus follows the dead panel
        } else {
            out.bus_v = battery_available ? v_set : 0.0;
        }
        out.i_load = out.bus_v / r;
        if (fault == FaultKind::RegIgbtOpen) out.i_load *= gain;
        const double p_load = out.bus_v * out.i_load;
        double p_batt = p_load;
        if (battery_available && fault != FaultKind::RegIgbtShort) p_batt += c.housekeeping_load_w;
        out.i_batt = battery_available ? -p_batt / v_set : 0.0;
        if (fault == FaultKind::BatteryGround) out.i_batt -= c.ground_fault_leak_a;
    }
    return out;
}
} // namespace detail

/// Advance the plant one step. Pure: noise is addressed by
/// (config.seed, fault, env.t_s), so equal inputs give equal outputs.
inline TelemetrySample step(const TelemetrySample& prev, const EnvSample& env,
                            const PlantConfig& config, FaultKind fault, double dt_s) {
    if (!(dt_s > 0.0)) throw ConfigError("dt_s must be > 0");

    auto [v_pv, i_pv] = pv_operating_point(env, config, fault);
    const detail::StepPower pw = detail::route_power(v_pv, i_pv, prev.soc_true, config, fault);

    double soc = prev.soc_true + pw.i_batt * dt_s / (3600.0 * config.battery_capacity_ah);
    soc = std::clamp(soc, 0.0, 1.0);

    const std::uint64_t stream = static_cast<std::uint64_t>(fault);
    std::uint64_t idx = 0;
    std::memcpy(&idx, &env.t_s, sizeof(double));

    auto noisy = [&](double value, double sigma, std::uint64_t channel) {
        if (sigma <= 0.0) return value;
        return std::max(value + sigma * gaussian_at(config.seed, stream, idx, channel), 0.0);
    };

    TelemetrySample s;
    s.env = env;
    s.v_pv_v = noisy(v_pv, config.meas_sigma_v_pv, 0);
    s.i_pv_a = noisy(i_pv, config.meas_sigma_i_pv, 1);
    s.i_load_a = noisy(pw.i_load, config.meas_sigma_i_load, 2);
    s.soc_true = soc;
    s.fault = fault;
    s.i_batt_a = pw.i_batt;
    return s;
}

/// Run a full simulation: environment profile chained through step().
/// Deterministic for fixed (orbit, plant, fault, n_samples, dt_s).
inline std::vector<TelemetrySample> simulate(const OrbitConfig& orbit, const PlantConfig& plant,
                                             FaultKind fault, std::size_t n_samples, double dt_s) {
    validate(orbit);
    validate(plant);
    if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
    if (!(dt_s > 0.0)) throw ConfigError("dt_s must be > 0");

    const std::vector<EnvSample> profile = generate_profile(orbit, n_samples, dt_s);
    std::vector<TelemetrySample> out;
    out.reserve(n_samples);
    TelemetrySample prev;
    prev.soc_true = plant.soc_init;
    for (const EnvSample& env : profile) {
        prev = step(prev, env, plant, fault, dt_s);
        out.push_back(prev);
    }
    return out;
}

/// Component fault rate: lambda = N_faulty / (N_total * t).
inline double fault_rate(std::uint64_t n_faulty, std::uint64_t n_total, double hours) {
    if (n_total < 1) throw ConfigError("n_total must be >= 1");
    if (!(hours > 0.0)) throw ConfigError("hours must be > 0");
    if (n_faulty > n_total) throw ConfigError("n_faulty must be <= n_total");
    return static_cast<double>(n_faulty) / (static_cast<double>(n_total) * hours);
}

struct ComponentFaultRate {
    const char* component;
    double lambda_per_hour;
    // The source table prints several entries with ambiguous exponent
    // formatting; those are stored as 10e-9/h and flagged.
    bool source_ambiguous;
};

/// Reference fault rates at 40 C for common EPS components.
inline const std::vector<ComponentFaultRate>& component_fault_rates() {
    static const std::vector<ComponentFaultRate> table = {
        {"Transistor", 10e-9, true},
        {"Thyristor", 10e-9, true},
        {"Digital integrated circuit", 30e-9, false},
        {"Logical elements", 30e-9, false},
        {"Analog switches", 2000e-9, false},
        {"Amplifier", 10e-9, true},
        {"Diode", 10e-9, true},
        {"Battery Li-Ion", 10e-9, true},
        {"Solar array", 10e-9, true},
    };
    return table;
}

inline std::optional<double> component_fault_rate(const std::string& component) {
    for (const auto& row : component_fault_rates())
        if (component == row.component) return row.lambda_per_hour;
    return std::nullopt;
}

// --- telemetry CSV ---

inline const char* telemetry_csv_header() {
    return "t_s,irradiance_w_m2,panel_temp_c,v_pv_v,i_pv_a,i_load_a,soc_true,fault";
}

inline std::string telemetry_to_csv(const std::vector<TelemetrySample>& telemetry) {
    std::string out = telemetry_csv_header();
    out += '\n';
    for (const auto& s : telemetry) {
        out += fmt_double(s.env.t_s);
        out += ',';
        out += fmt_double(s.env.irradiance_w_m2);
        out += ',';
        out += fmt_double(s.env.panel_temp_c);
        out += ',';
        out += fmt_double(s.v_pv_v);
        out += ',';
        out += fmt_double(s.i_pv_a);
        out += ',';
        out += fmt_double(s.i_load_a);
        out += ',';
        out += fmt_double(s.soc_true);
        out += ',';
        out += fault_tag(s.fault);
        out += '\n';
    }
    return out;
}

inline std::vector<TelemetrySample> telemetry_from_csv(const std::string& csv) {
    std::vector<TelemetrySample> out;
    std::size_t pos = 0, line_no = 0;
    while (pos < csv.size()) {
        std::size_t end = csv.find('\n', pos);
        if (end == std::string::npos) end = csv.size();
        const std::string line = csv.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        if (line_no == 1) {
            if (trim(line) != telemetry_csv_header())
                throw DataError("telemetry CSV: unexpected header at line 1");
            continue;
        }
        auto f = split_csv_line(line);
        const std::string ctx = "telemetry CSV line " + std::to_string(line_no);
        if (f.size() != 8) throw DataError(ctx + ": expected 8 fields, got " + std::to_string(f.size()));
        TelemetrySample s;
        s.env.t_s = parse_double(f[0], ctx);
        s.env.irradiance_w_m2 = parse_double(f[1], ctx);
        s.env.panel_temp_c = parse_double(f[2], ctx);
        s.v_pv_v = parse_double(f[3], ctx);
        s.i_pv_a = parse_double(f[4], ctx);
        s.i_load_a = parse_double(f[5], ctx);
        s.soc_true = parse_double(f[6], ctx);
        auto fk = parse_fault_tag(f[7]);
        if (!fk) throw DataError(ctx + ": unknown fault tag '" + f[7] + "'");
        s.fault = *fk;
        out.push_back(s);
    }
    return out;
}

} // namespace epsdiag

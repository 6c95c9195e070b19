/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epsdiag/eps_plant.hpp"
#include "epsdiag/errors.hpp"
#include "epsdiag/rng.hpp"
#include "epsdiag/sysid.hpp"
#include "epsdiag/util.hpp"

namespace epsdiag {

/// Residuals of the measured load current against every system model in
/// the bank: r_i = I_load - yhat_i(P_sun, T), length 5, healthy first.
inline std::vector<std::vector<double>> eps_residuals(const std::vector<TelemetrySample>& telemetry,
                                                      const ModelBank& bank) {
    const auto models = residual_models(bank);
    std::vector<std::vector<double>> out;
    out.reserve(telemetry.size());
    for (const auto& s : telemetry) {
        const double x[2] = {s.env.irradiance_w_m2, s.env.panel_temp_c};
        std::vector<double> r(models.size());
        for (std::size_t i = 0; i < models.size(); ++i) {
            if (models[i]->n_in != 2 || models[i]->n_out != 1)
                throw ShapeError("eps_residuals: bank model has wrong shape");
            double yhat = 0.0;
            predict_row(*models[i], x, &yhat);
            r[i] = s.i_load_a - yhat;
        }
        out.push_back(std::move(r));
    }
    return out;
}

/// PV residual pair against the healthy PV model:
/// r = [V_pv - Vhat, I_pv - Ihat].
inline std::vector<std::vector<double>> pv_residuals(const std::vector<TelemetrySample>& telemetry,
                                                     const MlpRegressor& healthy_pv) {
    if (healthy_pv.n_in != 2 || healthy_pv.n_out != 2)
        throw ShapeError("pv_residuals: healthy PV model must map 2 inputs to 2 outputs");
    std::vector<std::vector<double>> out;
    out.reserve(telemetry.size());
    for (const auto& s : telemetry) {
        const double x[2] = {s.env.irradiance_w_m2, s.env.panel_temp_c};
        double yhat[2] = {0.0, 0.0};
        predict_row(healthy_pv, x, yhat);
        out.push_back({s.v_pv_v - yhat[0], s.i_pv_a - yhat[1]});
    }
    return out;
}

/// Causal first moment of the load current: m1(k) is the mean of the
/// first k samples. Resets per run; never carries across runs.
inline std::vector<double> running_moment(const std::vector<double>& i_load) {
    if (i_load.empty()) throw DataError("running_moment: empty input");
    std::vector<double> out(i_load.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < i_load.size(); ++k) {
        acc += i_load[k];
        out[k] = acc / static_cast<double>(k + 1);
    }
    return out;
}

/// Scalar SOC Kalman filter. The battery current is not telemetered, so
/// the predict step treats SOC as a random walk (I_net = 0) with process
/// noise q sized for unmodeled fault currents; the update step uses a
/// synthesized battery-voltage measurement z = slope * soc_true + offset
/// + sensor noise through the linear OCV map.
struct SocKalmanConfig {
    double process_noise_q = 2e-5;       // SOC^2 per step; no battery-current telemetry
    double measurement_noise_r = 6.4e-3; // V^2
    double ocv_slope_v_per_soc = 2.5;
    double ocv_offset_v = 11.0;
    double soc_init_estimate = 0.65;
    double p_init = 1e-2;
    // Sensor synthesis: actual noise applied to z. Negative means
    // "use sqrt(measurement_noise_r)"; zero gives a perfect sensor.
    double sensor_noise_sigma_v = -1.0;
    std::uint64_t seed = 1;
};

inline void validate(const SocKalmanConfig& c) {
    if (!(c.process_noise_q >= 0.0)) throw ConfigError("process_noise_q must be >= 0");
    if (!(c.measurement_noise_r > 0.0)) throw ConfigError("measurement_noise_r must be > 0");
    if (!(c.ocv_slope_v_per_soc > 0.0)) throw ConfigError("ocv_slope_v_per_soc must be > 0");
    if (!(c.soc_init_estimate >= 0.0 && c.soc_init_estimate <= 1.0))
        throw ConfigError("soc_init_estimate must be in [0, 1]");
    if (!(c.p_init >= 0.0)) throw ConfigError("p_init must be >= 0");
}

struct SocKalmanResult {
    std::vector<double> soc;   // clamped to [0, 1]
    std::vector<double> gain;  // Kalman gain per step
    std::vector<double> p;     // posterior covariance per step
};

inline SocKalmanResult soc_kalman(const std::vector<TelemetrySample>& telemetry,
                                  double battery_capacity_ah, const SocKalmanConfig& config,
                                  double dt_s) {
    validate(config);
    if (!(battery_capacity_ah > 0.0)) throw ConfigError("battery_capacity_ah must be > 0");
    if (!(dt_s > 0.0)) throw ConfigError("dt_s must be > 0");

    const double slope = config.ocv_slope_v_per_soc;
    const double r = config.measurement_noise_r;
    const double sigma_z =
        config.sensor_noise_sigma_v < 0.0 ? std::sqrt(r) : config.sensor_noise_sigma_v;

    SocKalmanResult out;
    out.soc.reserve(telemetry.size());
    out.gain.reserve(telemetry.size());
    out.p.reserve(telemetry.size());

    double soc = config.soc_init_estimate;
    double p = config.p_init;
    for (std::size_t k = 0; k < telemetry.size(); ++k) {
        // predict (random-walk SOC)
        double soc_prior = soc;
        double p_prior = p + config.process_noise_q;

        // synthesized sensor reading from the true SOC
        double z = slope * telemetry[k].soc_true + config.ocv_offset_v;
        if (sigma_z > 0.0) z += sigma_z * gaussian_at(config.seed, 7, k, 0);

        const double gain = p_prior * slope / (slope * slope * p_prior + r);
        soc = soc_prior + gain * (z - (slope * soc_prior + config.ocv_offset_v));
        p = (1.0 - gain * slope) * p_prior;
        soc = std::clamp(soc, 0.0, 1.0);

        out.soc.push_back(soc);
        out.gain.push_back(gain);
        out.p.push_back(p);
    }
    return out;
}

/// Classifier input vector: residual bank optionally augmented with the
/// first moment.
inline std::vector<double> feature_vector(const std::vector<double>& residuals,
                                          std::optional<double> moment) {
    std::vector<double> x = residuals;
    if (moment) x.push_back(*moment);
    return x;
}

// --- labeled feature datasets ---

struct LabeledDataset {
    std::vector<std::vector<double>> features;
    std::vector<FaultKind> labels;
    std::vector<FaultKind> class_order;
    std::vector<std::string> feature_names;
};

inline void validate(const LabeledDataset& d) {
    if (d.features.size() != d.labels.size())
        throw ShapeError("dataset: features/labels length mismatch");
    for (FaultKind l : d.labels) {
        if (std::find(d.class_order.begin(), d.class_order.end(), l) == d.class_order.end())
            throw DataError(std::string("dataset: label ") + fault_tag(l) + " not in class order");
    }
}

/// EPS-task dataset: per-class residual vectors, optionally augmented
/// with the running moment of I_load (computed per run, causal).
inline LabeledDataset build_eps_residual_dataset(
    const std::map<FaultKind, std::vector<TelemetrySample>>& runs, const ModelBank& bank,
    bool with_moment) {
    LabeledDataset d;
    d.class_order = eps_task_faults();
    for (std::size_t i = 0; i < 5; ++i) d.feature_names.push_back("r" + std::to_string(i));
    if (with_moment) d.feature_names.push_back("m1");
    for (FaultKind f : d.class_order) {
        auto it = runs.find(f);
        if (it == runs.end())
            throw DataError(std::string("eps dataset: missing run for ") + fault_tag(f));
        const auto& telemetry = it->second;
        auto residuals = eps_residuals(telemetry, bank);
        std::vector<double> moment;
        if (with_moment) {
            std::vector<double> i_load(telemetry.size());
            for (std::size_t k = 0; k < telemetry.size(); ++k) i_load[k] = telemetry[k].i_load_a;
            moment = running_moment(i_load);
        }
        for (std::size_t k = 0; k < residuals.size(); ++k) {
            d.features.push_back(feature_vector(
                residuals[k], with_moment ? std::optional<double>(moment[k]) : std::nullopt));
            d.labels.push_back(f);
        }
    }
    return d;
}

/// PV-task dataset: (dV, dI) residuals against the healthy PV model.
inline LabeledDataset build_pv_residual_dataset(
    const std::map<FaultKind, std::vector<TelemetrySample>>& runs, const ModelBank& bank) {
    LabeledDataset d;
    d.class_order = pv_task_faults();
    d.feature_names = {"dv_pv", "di_pv"};
    for (FaultKind f : d.class_order) {
        auto it = runs.find(f);
        if (it == runs.end())
            throw DataError(std::string("pv dataset: missing run for ") + fault_tag(f));
        for (auto& r : pv_residuals(it->second, bank.healthy_pv)) {
            d.features.push_back(std::move(r));
            d.labels.push_back(f);
        }
    }
    return d;
}

/// (I_load, SOC) dataset for the KNN / decision-tree / PCA experiments.
/// SOC comes from the Kalman estimate by default (set use_true_soc for
/// the ablation) and is stored in percent, matching the scale the
/// classifiers were compared at.
inline LabeledDataset build_pair_dataset(const std::map<FaultKind, std::vector<TelemetrySample>>& runs,
                                         double battery_capacity_ah, const SocKalmanConfig& kalman,
                                         double dt_s, bool use_true_soc = false) {
    LabeledDataset d;
    d.class_order = eps_task_faults();
    d.feature_names = {"i_load_a", "soc_pct"};
    for (FaultKind f : d.class_order) {
        auto it = runs.find(f);
        if (it == runs.end())
            throw DataError(std::string("pair dataset: missing run for ") + fault_tag(f));
        const auto& telemetry = it->second;
        std::vector<double> soc;
        if (use_true_soc) {
            soc.reserve(telemetry.size());
            for (const auto& s : telemetry) soc.push_back(s.soc_true);
        } else {
            soc = soc_kalman(telemetry, battery_capacity_ah, kalman, dt_s).soc;
        }
        for (std::size_t k = 0; k < telemetry.size(); ++k) {
            d.features.push_back({telemetry[k].i_load_a, 100.0 * soc[k]});
            d.labels.push_back(f);
        }
    }
    return d;
}

// --- feature CSV + provenance sidecar ---

inline std::string dataset_to_csv(const LabeledDataset& d) {
    std::string out = "label";
    for (std::size_t i = 0; i < d.feature_names.size(); ++i) out += ",f" + std::to_string(i);
    out += '\n';
    for (std::size_t r = 0; r < d.features.size(); ++r) {
        out += fault_tag(d.labels[r]);
        for (double v : d.features[r]) {
            out += ',';
            out += fmt_double(v);
        }
        out += '\n';
    }
    return out;
}

inline LabeledDataset dataset_from_csv(const std::string& csv,
                                       const std::vector<FaultKind>& class_order) {
    LabeledDataset d;
    d.class_order = class_order;
    std::size_t pos = 0, line_no = 0;
    std::size_t width = 0;
    while (pos < csv.size()) {
        std::size_t end = csv.find('\n', pos);
        if (end == std::string::npos) end = csv.size();
        const std::string line = csv.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (line_no == 1) {
            if (f.empty() || f[0] != "label") throw DataError("feature CSV: bad header");
            width = f.size() - 1;
            for (std::size_t i = 0; i < width; ++i) d.feature_names.push_back(trim(f[i + 1]));
            continue;
        }
        const std::string ctx = "feature CSV line " + std::to_string(line_no);
        if (f.size() != width + 1) throw DataError(ctx + ": wrong field count");
        auto fk = parse_fault_tag(f[0]);
        if (!fk) throw DataError(ctx + ": unknown label '" + f[0] + "'");
        std::vector<double> row(width);
        for (std::size_t i = 0; i < width; ++i) row[i] = parse_double(f[i + 1], ctx);
        d.labels.push_back(*fk);
        d.features.push_back(std::move(row));
    }
    validate(d);
    return d;
}

/// Human-readable provenance note written next to each feature CSV.
inline std::string dataset_sidecar(const LabeledDataset& d, const std::string& source,
                                   const std::string& config_hash) {
    std::string out = "feature dataset\n";
    out += "source: " + source + "\n";
    out += "config_hash: " + config_hash + "\n";
    out += "columns:\n";
    for (std::size_t i = 0; i < d.feature_names.size(); ++i)
        out += "  f" + std::to_string(i) + " = " + d.feature_names[i] + "\n";
    out += "class_order:";
    for (FaultKind f : d.class_order) out += std::string(" ") + fault_tag(f);
    out += "\nrows: " + std::to_string(d.features.size()) + "\n";
    return out;
}

} // namespace epsdiag

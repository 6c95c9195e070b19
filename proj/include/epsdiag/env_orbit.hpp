/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "epsdiag/errors.hpp"
#include "epsdiag/rng.hpp"
#include "epsdiag/util.hpp"

namespace epsdiag {

/// Deterministic LEO environment generator: square-wave irradiance
/// (sunlit / eclipse) plus first-order panel thermal relaxation.
///
/// The profile starts at the dawn terminator: the sunlit portion of the
/// orbit comes first and the panel enters it at the eclipse equilibrium
/// temperature. Irradiance noise models attitude jitter of an
/// uncontrolled (no-ADCS) spacecraft and is applied to sunlit samples
/// only, so eclipse irradiance is exactly zero.
struct OrbitConfig {
    double orbit_period_s = 5400.0;
    double eclipse_fraction = 0.30;     // in [0, 0.5]
    double solar_constant_w_m2 = 1361.0;
    double temp_sunlit_c = 60.0;
    double temp_eclipse_c = -20.0;
    double thermal_time_constant_s = 600.0;
    double irradiance_noise_sigma = 60.0;  // W/m^2, attitude-jitter proxy
    std::uint64_t seed = 1;
};

struct EnvSample {
    double t_s = 0.0;
    double irradiance_w_m2 = 0.0;
    double panel_temp_c = 0.0;
};

inline void validate(const OrbitConfig& c) {
    if (!(c.orbit_period_s > 0.0)) throw ConfigError("orbit_period_s must be > 0");
    if (!(c.eclipse_fraction >= 0.0 && c.eclipse_fraction <= 0.5))
        throw ConfigError("eclipse_fraction must be in [0, 0.5]");
    if (!(c.solar_constant_w_m2 > 0.0)) throw ConfigError("solar_constant_w_m2 must be > 0");
    if (!(c.thermal_time_constant_s > 0.0)) throw ConfigError("thermal_time_constant_s must be > 0");
    if (!(c.irradiance_noise_sigma >= 0.0)) throw ConfigError("irradiance_noise_sigma must be >= 0");
    if (!std::isfinite(c.temp_sunlit_c)) throw ConfigError("temp_sunlit_c must be finite");
    if (!std::isfinite(c.temp_eclipse_c)) throw ConfigError("temp_eclipse_c must be finite");
}

/// True when orbit phase at time t is in sunlight (eclipse occupies the
/// last eclipse_fraction of every period).
inline bool in_sunlight(double t_s, const OrbitConfig& c) {
    double phase = std::fmod(t_s, c.orbit_period_s) / c.orbit_period_s;
    if (phase < 0.0) phase += 1.0;
    return phase < 1.0 - c.eclipse_fraction;
}

/// One first-order relaxation step toward the regime equilibrium.
inline double panel_temperature(double irradiance_w_m2, double prev_temp_c,
                                const OrbitConfig& config, double dt_s) {
    if (!(dt_s > 0.0)) throw ConfigError("dt_s must be > 0");
    const double target = irradiance_w_m2 > 0.0 ? config.temp_sunlit_c : config.temp_eclipse_c;
    const double a = std::exp(-dt_s / config.thermal_time_constant_s);
    return target + (prev_temp_c - target) * a;
}

/// Generate n_samples environment samples at t = k*dt_s.
/// Pure function of (config, n_samples, dt_s); repeated calls are
/// element-wise identical.
inline std::vector<EnvSample> generate_profile(const OrbitConfig& config, std::size_t n_samples,
                                               double dt_s) {
    validate(config);
    if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
    if (!(dt_s > 0.0)) throw ConfigError("dt_s must be > 0");

    std::vector<EnvSample> out;
    out.reserve(n_samples);
    Rng rng(derive_seed(config.seed, "env-irradiance"));
    double temp = in_sunlight(0.0, config) ? config.temp_eclipse_c : config.temp_sunlit_c;

    for (std::size_t k = 0; k < n_samples; ++k) {
        const double t = static_cast<double>(k) * dt_s;
        const bool sun = in_sunlight(t, config);
        double irr = 0.0;
        if (sun) {
            irr = config.solar_constant_w_m2;
            if (config.irradiance_noise_sigma > 0.0)
                irr += rng.gaussian(0.0, config.irradiance_noise_sigma);
            if (irr < 0.0) irr = 0.0;
        }
        if (k > 0) {
            const double target = sun ? config.temp_sunlit_c : config.temp_eclipse_c;
            const double a = std::exp(-dt_s / config.thermal_time_constant_s);
            temp = target + (temp - target) * a;
        }
        out.push_back(EnvSample{t, irr, temp});
    }
    return out;
}

/// Pre-noise irradiance at time t; exactly periodic with the orbit period.
inline double nominal_irradiance(double t_s, const OrbitConfig& c) {
    return in_sunlight(t_s, c) ? c.solar_constant_w_m2 : 0.0;
}

inline std::string profile_to_csv(const std::vector<EnvSample>& profile) {
    std::string out = "t_s,irradiance_w_m2,panel_temp_c\n";
    for (const auto& s : profile) {
        out += fmt_double(s.t_s);
        out += ',';
        out += fmt_double(s.irradiance_w_m2);
        out += ',';
        out += fmt_double(s.panel_temp_c);
        out += '\n';
    }
    return out;
}

} // namespace epsdiag

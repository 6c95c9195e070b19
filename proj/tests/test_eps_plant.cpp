/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <catch2/catch.hpp>

#include "epsdiag/eps_plant.hpp"
#include "epsdiag/rng.hpp"

using namespace epsdiag;

namespace {
EnvSample env_at(double g, double t) { return EnvSample{0.0, g, t}; }
}

TEST_CASE("pv operating point is zero in the dark") {
    PlantConfig c;
    auto [v, i] = pv_operating_point(env_at(0.0, -20.0), c, FaultKind::Healthy);
    CHECK(v == 0.0);
    CHECK(i == 0.0);
}

TEST_CASE("pv operating point beats a dense voltage grid") {
    PlantConfig c;
    // grid-search oracle over 10001 voltages at a fixed operating condition
    auto check_point = [&](double g, double t, FaultKind fault) {
        auto [v_star, i_star] = pv_operating_point(env_at(g, t), c, fault);
        const double p_star = v_star * i_star;
        const double i_sc = (fault == FaultKind::PvOpenCircuit ? c.n_parallel - 1 : c.n_parallel) *
                            c.i_sc_ref_a * (g / c.g_ref_w_m2) * (1.0 + c.alpha_i_per_c * (t - 25.0));
        double v_oc = c.v_oc_ref_v * (1.0 + c.beta_v_per_c * (t - 25.0));
        if (fault == FaultKind::PvLineLine)
            v_oc *= double(c.n_series - c.lineline_shorted_cells) / c.n_series;
        double best = 0.0;
        for (int k = 0; k <= 10000; ++k) {
            const double v = v_oc * k / 10000.0;
            const double p = v * i_sc * (1.0 - std::pow(v / v_oc, 12.0));
            best = std::max(best, p);
        }
        CHECK(p_star >= best * (1.0 - 1e-6));
    };
    check_point(1361.0, 60.0, FaultKind::Healthy);
    check_point(900.0, -10.0, FaultKind::Healthy);
    check_point(1361.0, 25.0, FaultKind::PvLineLine);

    // 100 random draws per the module invariant
    Rng rng(99);
    for (int n = 0; n < 100; ++n)
        check_point(rng.uniform(200.0, 1500.0), rng.uniform(-30.0, 70.0), FaultKind::Healthy);
}

TEST_CASE("losing one string scales the array current exactly") {
    PlantConfig c;
    auto [vh, ih] = pv_operating_point(env_at(1200.0, 40.0), c, FaultKind::Healthy);
    auto [vf, if_] = pv_operating_point(env_at(1200.0, 40.0), c, FaultKind::PvOpenCircuit);
    CHECK(vf == Approx(vh).epsilon(1e-9));
    const double expected = double(c.n_parallel - 1) / double(c.n_parallel);
    CHECK(if_ / ih == Approx(expected).epsilon(1e-9));
}

TEST_CASE("healthy eclipse load current follows the regulator setpoint") {
    PlantConfig c;
    c.meas_sigma_i_load = 0.0;
    c.meas_sigma_i_pv = 0.0;
    c.meas_sigma_v_pv = 0.0;
    TelemetrySample prev;
    prev.soc_true = 0.8;
    const auto s = step(prev, env_at(0.0, -20.0), c, FaultKind::Healthy, 1.0);
    CHECK(s.i_load_a == Approx(c.regulator_setpoint_v / c.load_resistance_ohm).margin(1e-12));
    CHECK(s.soc_true < prev.soc_true);  // battery carries the load
}

TEST_CASE("empty battery sheds the eclipse load") {
    PlantConfig c;
    c.meas_sigma_i_load = 0.0;
    TelemetrySample prev;
    prev.soc_true = 0.0;
    const auto s = step(prev, env_at(0.0, -20.0), c, FaultKind::Healthy, 1.0);
    CHECK(s.i_load_a == 0.0);
    CHECK(s.soc_true == 0.0);
}

TEST_CASE("ground fault only ever drains the battery") {
    OrbitConfig orbit;
    PlantConfig plant;
    const auto healthy = simulate(orbit, plant, FaultKind::Healthy, 3000, 1.0);
    const auto faulty = simulate(orbit, plant, FaultKind::BatteryGround, 3000, 1.0);
    for (std::size_t k = 0; k < healthy.size(); ++k)
        CHECK(faulty[k].soc_true <= healthy[k].soc_true + 1e-12);
}

TEST_CASE("soc matches an independent re-accumulation of battery current") {
    OrbitConfig orbit;
    PlantConfig plant;
    for (FaultKind f : eps_task_faults()) {
        const auto run = simulate(orbit, plant, f, 2500, 1.0);
        double soc = plant.soc_init;
        for (std::size_t k = 0; k < run.size(); ++k) {
            soc += run[k].i_batt_a * 1.0 / (3600.0 * plant.battery_capacity_ah);
            soc = std::clamp(soc, 0.0, 1.0);
            REQUIRE(std::abs(run[k].soc_true - soc) < 1e-12);
        }
    }
}

TEST_CASE("every fault delivers at most the healthy time-averaged load power") {
    OrbitConfig orbit;
    PlantConfig plant;
    plant.meas_sigma_i_load = 0.0;
    plant.meas_sigma_v_pv = 0.0;
    plant.meas_sigma_i_pv = 0.0;
    orbit.irradiance_noise_sigma = 0.0;
    // load power reconstructed from I_load through the resistor
    auto mean_load_power = [&](FaultKind f) {
        const auto run = simulate(orbit, plant, f, 5400, 1.0);  // one full orbit
        double acc = 0.0;
        for (const auto& s : run) acc += s.i_load_a * s.i_load_a * plant.load_resistance_ohm;
        return acc / static_cast<double>(run.size());
    };
    const double healthy = mean_load_power(FaultKind::Healthy);
    for (FaultKind f : all_faults()) {
        if (f == FaultKind::Healthy) continue;
        CHECK(mean_load_power(f) <= healthy + 1e-9);
    }
}

TEST_CASE("mppt fault strictly lowers the mean load current") {
    OrbitConfig orbit;
    PlantConfig plant;
    const auto healthy = simulate(orbit, plant, FaultKind::Healthy, 2001, 1.0);
    const auto faulty = simulate(orbit, plant, FaultKind::MpptIgbtOpen, 2001, 1.0);
    double mh = 0.0, mf = 0.0;
    for (std::size_t k = 0; k < healthy.size(); ++k) {
        mh += healthy[k].i_load_a;
        mf += faulty[k].i_load_a;
    }
    CHECK(mf < mh);
}

TEST_CASE("simulation yields the requested number of rows and is reproducible") {
    OrbitConfig orbit;
    PlantConfig plant;
    const auto a = simulate(orbit, plant, FaultKind::RegIgbtShort, 2001, 1.0);
    REQUIRE(a.size() == 2001);
    const auto b = simulate(orbit, plant, FaultKind::RegIgbtShort, 2001, 1.0);
    CHECK(telemetry_to_csv(a) == telemetry_to_csv(b));
}

TEST_CASE("fault rate formula and reference table") {
    CHECK(fault_rate(10, 1000, 10000.0) == Approx(1e-6).epsilon(1e-12));
    CHECK(fault_rate(0, 50, 123.0) == 0.0);
    REQUIRE(component_fault_rate("Analog switches").has_value());
    CHECK(*component_fault_rate("Analog switches") == Approx(2000e-9));
    CHECK_FALSE(component_fault_rate("Flux capacitor").has_value());
    CHECK_THROWS_AS(fault_rate(5, 0, 1.0), ConfigError);
    CHECK_THROWS_AS(fault_rate(5, 4, 1.0), ConfigError);
    CHECK_THROWS_AS(fault_rate(1, 10, 0.0), ConfigError);
}

TEST_CASE("fault tags round-trip and unknown tags are rejected") {
    for (FaultKind f : all_faults()) {
        auto parsed = parse_fault_tag(fault_tag(f));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == f);
    }
    CHECK_FALSE(parse_fault_tag("Gremlins").has_value());
    CHECK(pv_task_faults().size() == 3);
    CHECK(eps_task_faults().size() == 5);
    CHECK(eps_task_faults()[0] == FaultKind::Healthy);
}

TEST_CASE("telemetry CSV round-trips through parse") {
    OrbitConfig orbit;
    PlantConfig plant;
    const auto run = simulate(orbit, plant, FaultKind::PvLineLine, 50, 1.0);
    const std::string csv = telemetry_to_csv(run);
    const auto back = telemetry_from_csv(csv);
    REQUIRE(back.size() == run.size());
    for (std::size_t k = 0; k < run.size(); ++k) {
        CHECK(back[k].env.irradiance_w_m2 == run[k].env.irradiance_w_m2);
        CHECK(back[k].v_pv_v == run[k].v_pv_v);
        CHECK(back[k].i_load_a == run[k].i_load_a);
        CHECK(back[k].soc_true == run[k].soc_true);
        CHECK(back[k].fault == run[k].fault);
    }
}

TEST_CASE("corrupt telemetry rows report the line number") {
    const std::string csv = std::string(telemetry_csv_header()) +
                            "\n1,1300,20,10,1.5,1.2,0.6,Healthy\n2,bad,20,10,1.5,1.2,0.6,Healthy\n";
    CHECK_THROWS_WITH(telemetry_from_csv(csv), Catch::Contains("line 3"));
}

TEST_CASE("invalid plant configs name the offending field") {
    PlantConfig c;
    c.lineline_shorted_cells = c.n_series;
    CHECK_THROWS_WITH(validate(c), Catch::Contains("lineline_shorted_cells"));
    c = PlantConfig{};
    c.converter_efficiency = 1.3;
    CHECK_THROWS_WITH(validate(c), Catch::Contains("converter_efficiency"));
    c = PlantConfig{};
    c.igbt_open_residual_gain = 1.0;
    CHECK_THROWS_WITH(validate(c), Catch::Contains("igbt_open_residual_gain"));
}

/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <catch2/catch.hpp>

#include <filesystem>

#include "epsdiag/config.hpp"
#include "epsdiag/pipeline.hpp"
#include "epsdiag/util.hpp"

using namespace epsdiag;

TEST_CASE("config text applies sections, comments and overrides") {
    AppConfig cfg;
    apply_config_text(cfg, R"(
# comment line
seed = 99

[orbit]
orbit_period_s = 6000   # trailing comment
eclipse_fraction = 0.25

[plant]
n_parallel = 6
load_resistance_ohm = 12.5

[train]
n_hidden = 7

[classify]
with_moment = false
dt_min_leaf = 4
)");
    CHECK(cfg.seed == 99);
    CHECK(cfg.orbit.orbit_period_s == 6000.0);
    CHECK(cfg.orbit.eclipse_fraction == 0.25);
    CHECK(cfg.plant.n_parallel == 6);
    CHECK(cfg.plant.load_resistance_ohm == 12.5);
    CHECK(cfg.train.n_hidden == 7);
    CHECK(cfg.classify.with_moment == false);
    CHECK(cfg.classify.dt_min_leaf == 4);
}

TEST_CASE("unknown keys and bad values name the field") {
    AppConfig cfg;
    CHECK_THROWS_WITH(apply_config_text(cfg, "[orbit]\nwarp_factor = 9\n"),
                      Catch::Contains("orbit.warp_factor"));
    CHECK_THROWS_WITH(apply_config_text(cfg, "[plant]\nsoc_init = huge\n"),
                      Catch::Contains("plant.soc_init"));
    CHECK_THROWS_WITH(apply_config_text(cfg, "just words\n"), Catch::Contains("key = value"));
}

TEST_CASE("config hash covers every resolved field") {
    AppConfig a, b;
    CHECK(config_hash(a) == config_hash(b));
    b.plant.ground_fault_leak_a += 1e-9;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.classify.k_folds = 6;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.seed = 2;
    CHECK(config_hash(a) != config_hash(b));

    const std::string canon = canonical_config(a);
    CHECK(canon.find("plant.igbt_open_residual_gain") != std::string::npos);
    CHECK(canon.find("kalman.process_noise_q") != std::string::npos);
    CHECK(canon.find("classify.pair_burn_in") != std::string::npos);
}

TEST_CASE("doubles survive the formatting round trip") {
    Rng rng(64);
    for (int i = 0; i < 500; ++i) {
        const double v = rng.gaussian(0.0, 1.0) * std::pow(10.0, rng.uniform(-12.0, 12.0));
        CHECK(parse_double(fmt_double(v), "test") == v);
    }
    CHECK(parse_double(fmt_double(0.0), "test") == 0.0);
}

TEST_CASE("atomic writes land complete files") {
    const auto dir = std::filesystem::temp_directory_path() / "epsdiag_io_test";
    std::filesystem::remove_all(dir);
    const auto path = dir / "nested" / "file.txt";
    write_file_atomic(path, "payload\n");
    CHECK(read_file(path) == "payload\n");
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    write_file_atomic(path, "replaced\n");
    CHECK(read_file(path) == "replaced\n");
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifests refuse to list missing artifacts") {
    const auto dir = std::filesystem::temp_directory_path() / "epsdiag_manifest_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    RunManifest m;
    m.config_hash = "abc";
    m.seed = 1;
    m.artifacts = {(dir / "ghost.csv").string()};
    CHECK_THROWS_AS(write_manifest(m, dir / "manifest.json"), IoError);

    write_file_atomic(dir / "real.csv", "x\n");
    m.artifacts = {(dir / "real.csv").string()};
    write_manifest(m, dir / "manifest.json");
    const auto j = ordered_json::parse(read_file(dir / "manifest.json"));
    CHECK(j.at("config_hash") == "abc");
    CHECK(j.at("artifacts").size() == 1);
    CHECK(j.at("tool_version").get<std::string>().rfind("epsdiag", 0) == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("seed derivation separates stages and classes") {
    AppConfig cfg;
    cfg.seed = 7;
    AppConfig a = cfg, b = cfg;
    seed_for_fault(a, FaultKind::Healthy);
    seed_for_fault(b, FaultKind::BatteryGround);
    CHECK(a.orbit.seed != b.orbit.seed);
    CHECK(a.plant.seed != b.plant.seed);
    CHECK(train_seed(cfg) != kalman_seed(cfg));
    AppConfig c = cfg;
    seed_for_fault(c, FaultKind::Healthy);
    CHECK(a.orbit.seed == c.orbit.seed);  // reproducible derivation
}

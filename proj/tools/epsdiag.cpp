/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

// epsdiag command-line tool: simulate the EPS, train the model bank,
// extract diagnosis features, and evaluate the fault classifiers.
//
// Exit codes: 0 success, 2 configuration/validation error, 3 I/O error,
// 4 model quality gate failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "epsdiag/config.hpp"
#include "epsdiag/pipeline.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

epsdiag::AppConfig resolve_config(const CommonFlags& flags) {
    epsdiag::AppConfig cfg;  // built-in defaults
    if (!flags.config_path.empty())
        epsdiag::apply_config_text(cfg, epsdiag::read_file(flags.config_path));
    if (flags.seed) cfg.seed = *flags.seed;  // flags win over file
    epsdiag::validate(cfg);
    return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "config file (key = value, [section] headers)");
    cmd->add_option("--seed", flags.seed, "root seed (overrides config file)");
    cmd->add_option("--out", flags.out_dir, "output directory");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nanosatellite EPS simulator and fault-diagnosis pipeline"};
    app.require_subcommand(1);

    CommonFlags sim_flags;
    std::string sim_fault = "Healthy";
    std::optional<std::size_t> sim_n;
    std::optional<double> sim_dt;
    CLI::App* sim = app.add_subcommand("simulate", "simulate one health mode to a telemetry CSV");
    add_common(sim, sim_flags);
    sim->add_option("--fault", sim_fault, "fault tag (see --help-faults)");
    sim->add_option("--n", sim_n, "samples to simulate");
    sim->add_option("--dt", sim_dt, "sample period in seconds");

    CommonFlags train_flags;
    std::string train_telemetry = ".";
    CLI::App* train = app.add_subcommand("train-models", "identify the neural model bank");
    add_common(train, train_flags);
    train->add_option("--telemetry", train_telemetry, "directory with telemetry_<fault>.csv files");

    CommonFlags feat_flags;
    std::string feat_telemetry = ".";
    std::string feat_models = ".";
    std::optional<bool> feat_moment;
    CLI::App* feat = app.add_subcommand("extract-features", "build classifier feature datasets");
    add_common(feat, feat_flags);
    feat->add_option("--telemetry", feat_telemetry, "telemetry directory");
    feat->add_option("--models", feat_models, "model bank directory");
    feat->add_option("--with-moment", feat_moment, "append the first-moment feature (default true)");

    CommonFlags eval_flags;
    std::string eval_features = ".";
    std::string eval_classifier = "all";
    CLI::App* eval = app.add_subcommand("evaluate", "train and score the fault classifiers");
    add_common(eval, eval_flags);
    eval->add_option("--features", eval_features, "feature dataset directory");
    eval->add_option("--classifier", eval_classifier, "mlp, knn, dt, pca or all");

    std::string report_dir = ".";
    CLI::App* report = app.add_subcommand("report", "render the method comparison table");
    report->add_option("--reports", report_dir, "directory with report_*.json files");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            epsdiag::AppConfig cfg = resolve_config(sim_flags);
            if (sim_n) cfg.classify.n_samples = *sim_n;
            if (sim_dt) cfg.classify.dt_s = *sim_dt;
            const auto fault = epsdiag::parse_fault_tag(sim_fault);
            if (!fault) {
                std::cerr << "error: unknown fault tag '" << sim_fault
                          << "'. Valid tags: " << epsdiag::valid_fault_tags() << "\n";
                return 2;
            }
            const auto path = epsdiag::cmd_simulate(cfg, *fault, sim_flags.out_dir);
            std::cout << "wrote " << path.string() << "\n";
        } else if (train->parsed()) {
            epsdiag::AppConfig cfg = resolve_config(train_flags);
            const auto written = epsdiag::cmd_train_models(cfg, train_telemetry, train_flags.out_dir);
            std::cout << "wrote " << written.size() << " model bank files to " << train_flags.out_dir
                      << "\n";
        } else if (feat->parsed()) {
            epsdiag::AppConfig cfg = resolve_config(feat_flags);
            if (feat_moment) cfg.classify.with_moment = *feat_moment;
            const auto written =
                epsdiag::cmd_extract_features(cfg, feat_telemetry, feat_models, feat_flags.out_dir);
            std::cout << "wrote " << written.size() << " feature files to " << feat_flags.out_dir
                      << "\n";
        } else if (eval->parsed()) {
            epsdiag::AppConfig cfg = resolve_config(eval_flags);
            const auto written =
                epsdiag::cmd_evaluate(cfg, eval_features, eval_classifier, eval_flags.out_dir);
            std::cout << "wrote " << written.size() << " report files to " << eval_flags.out_dir
                      << "\n";
            const auto table = eval_flags.out_dir + "/comparison.txt";
            if (std::filesystem::exists(table)) std::cout << epsdiag::read_file(table);
        } else if (report->parsed()) {
            std::cout << epsdiag::cmd_report(report_dir);
        }
    } catch (const epsdiag::QualityGateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const epsdiag::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const epsdiag::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const epsdiag::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const epsdiag::ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

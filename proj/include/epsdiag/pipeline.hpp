/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "epsdiag/classify.hpp"
#include "epsdiag/config.hpp"
#include "epsdiag/env_orbit.hpp"
#include "epsdiag/eps_plant.hpp"
#include "epsdiag/errors.hpp"
#include "epsdiag/features.hpp"
#include "epsdiag/sysid.hpp"
#include "epsdiag/util.hpp"

namespace epsdiag {

inline constexpr const char* kToolVersion = "epsdiag 0.1.0";

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Seeding: one root seed fans out to per-stage, per-class streams.
// ---------------------------------------------------------------------------

inline std::size_t fault_index(FaultKind f) { return static_cast<std::size_t>(f); }

/// Orbit/plant configs with seeds derived for one class run.
inline void seed_for_fault(AppConfig& cfg, FaultKind fault) {
    cfg.orbit.seed = derive_seed(cfg.seed, "orbit", fault_index(fault));
    cfg.plant.seed = derive_seed(cfg.seed, "plant", fault_index(fault));
}

inline std::uint64_t train_seed(const AppConfig& cfg) { return derive_seed(cfg.seed, "train"); }
inline std::uint64_t kalman_seed(const AppConfig& cfg) { return derive_seed(cfg.seed, "kalman"); }
inline std::uint64_t eval_seed(const AppConfig& cfg) { return derive_seed(cfg.seed, "eval"); }

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

struct RunManifest {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    std::vector<std::string> artifacts;
};

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    for (const auto& a : m.artifacts)
        if (!std::filesystem::exists(a)) throw IoError("manifest lists missing artifact: " + a);
    ordered_json j;
    j["tool_version"] = m.tool_version;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    j["artifacts"] = m.artifacts;
    write_file_atomic(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

inline std::vector<TelemetrySample> simulate_class(const AppConfig& base, FaultKind fault) {
    AppConfig cfg = base;
    seed_for_fault(cfg, fault);
    return simulate(cfg.orbit, cfg.plant, fault, cfg.classify.n_samples, cfg.classify.dt_s);
}

inline std::filesystem::path telemetry_path(const std::filesystem::path& dir, FaultKind fault) {
    return dir / (std::string("telemetry_") + fault_tag(fault) + ".csv");
}

/// `simulate` subcommand: one class run to CSV plus a manifest.
/// Validation is scoped to the fields a bare simulation uses, so short
/// `--n` runs are not bound by the feature-window layout.
inline std::filesystem::path cmd_simulate(const AppConfig& cfg, FaultKind fault,
                                          const std::filesystem::path& out_dir) {
    validate(cfg.orbit);
    validate(cfg.plant);
    const auto telemetry = simulate_class(cfg, fault);
    const auto path = telemetry_path(out_dir, fault);
    write_file_atomic(path, telemetry_to_csv(telemetry));

    RunManifest m;
    m.config_hash = config_hash(cfg);
    m.seed = cfg.seed;
    m.artifacts = {path.string()};
    write_manifest(m, out_dir / (std::string("manifest_simulate_") + fault_tag(fault) + ".json"));
    return path;
}

// ---------------------------------------------------------------------------
// train-models
// ---------------------------------------------------------------------------

inline std::map<FaultKind, std::vector<TelemetrySample>> load_telemetry_dir(
    const std::filesystem::path& dir) {
    std::map<FaultKind, std::vector<TelemetrySample>> runs;
    for (FaultKind f : all_faults()) {
        const auto path = telemetry_path(dir, f);
        if (!std::filesystem::exists(path))
            throw DataError(std::string("missing telemetry for class ") + fault_tag(f) + " (" +
                            path.string() + ")");
        runs[f] = telemetry_from_csv(read_file(path));
    }
    return runs;
}

inline ordered_json fit_report_json(const FitReport& r) {
    ordered_json j;
    j["mse"] = r.mse;
    j["rmse"] = r.rmse;
    ordered_json corr = ordered_json::array();
    for (const auto& c : r.correlation_r) {
        if (c)
            corr.push_back(*c);
        else
            corr.push_back("undefined");
    }
    j["correlation_r"] = corr;
    j["error_mean_mu"] = r.error_mean_mu;
    j["error_variance_delta"] = r.error_variance_delta;
    j["n_samples"] = r.n_samples;
    j["histogram_edges"] = r.histogram_edges;
    j["histogram_counts"] = r.histogram_counts;
    return j;
}

/// `train-models` subcommand: build the model bank from a telemetry
/// directory; serialize every model plus the fit reports.
inline std::vector<std::filesystem::path> cmd_train_models(const AppConfig& cfg,
                                                           const std::filesystem::path& telemetry_dir,
                                                           const std::filesystem::path& out_dir) {
    validate(cfg);
    auto runs = load_telemetry_dir(telemetry_dir);
    TrainConfig tc = cfg.train;
    tc.seed = train_seed(cfg);
    const ModelBank bank = build_model_bank(runs, tc);

    std::vector<std::filesystem::path> written;
    auto save = [&](const MlpRegressor& m, const std::string& name) {
        const auto path = out_dir / ("model_" + name + ".txt");
        write_file_atomic(path, mlp_to_text(m));
        written.push_back(path);
    };
    save(bank.healthy_system, model_name(FaultKind::Healthy, false));
    save(bank.healthy_pv, model_name(FaultKind::Healthy, true));
    for (FaultKind f : eps_bank_fault_order()) save(bank.fault_models.at(f), model_name(f, false));
    for (FaultKind f : {FaultKind::PvLineLine, FaultKind::PvOpenCircuit})
        save(bank.pv_fault_models.at(f), model_name(f, true));

    ordered_json reports;
    for (const auto& [name, rep] : bank.reports) reports[name] = fit_report_json(rep);
    const auto reports_path = out_dir / "fit_reports.json";
    write_file_atomic(reports_path, reports.dump(2) + "\n");
    written.push_back(reports_path);

    RunManifest m;
    m.config_hash = config_hash(cfg);
    m.seed = cfg.seed;
    for (const auto& p : written) m.artifacts.push_back(p.string());
    write_manifest(m, out_dir / "manifest_train_models.json");
    return written;
}

inline ModelBank load_model_bank(const std::filesystem::path& models_dir) {
    ModelBank bank;
    auto load = [&](const std::string& name) {
        const auto path = models_dir / ("model_" + name + ".txt");
        if (!std::filesystem::exists(path)) throw DataError("missing model file: " + path.string());
        return mlp_from_text(read_file(path));
    };
    bank.healthy_system = load(model_name(FaultKind::Healthy, false));
    bank.healthy_pv = load(model_name(FaultKind::Healthy, true));
    for (FaultKind f : eps_bank_fault_order()) bank.fault_models[f] = load(model_name(f, false));
    for (FaultKind f : {FaultKind::PvLineLine, FaultKind::PvOpenCircuit})
        bank.pv_fault_models[f] = load(model_name(f, true));
    return bank;
}

// ---------------------------------------------------------------------------
// extract-features
// ---------------------------------------------------------------------------

inline std::map<FaultKind, std::vector<TelemetrySample>> window_runs(
    const std::map<FaultKind, std::vector<TelemetrySample>>& runs, std::size_t burn_in,
    std::size_t window) {
    std::map<FaultKind, std::vector<TelemetrySample>> out;
    for (const auto& [f, t] : runs) {
        if (burn_in + window > t.size())
            throw DataError(std::string("run for ") + fault_tag(f) + " shorter than burn_in + window");
        out[f] = std::vector<TelemetrySample>(t.begin() + static_cast<std::ptrdiff_t>(burn_in),
                                              t.begin() + static_cast<std::ptrdiff_t>(burn_in + window));
    }
    return out;
}

struct FeaturePaths {
    std::filesystem::path eps;
    std::filesystem::path pv;
    std::filesystem::path pair;
};

inline FeaturePaths feature_paths(const std::filesystem::path& dir) {
    return {dir / "features_eps.csv", dir / "features_pv.csv", dir / "features_pair.csv"};
}

/// `extract-features` subcommand: residual, PV-residual and
/// (I_load, SOC) datasets from telemetry plus the model bank.
inline std::vector<std::filesystem::path> cmd_extract_features(
    const AppConfig& cfg, const std::filesystem::path& telemetry_dir,
    const std::filesystem::path& models_dir, const std::filesystem::path& out_dir) {
    validate(cfg);
    const auto runs = load_telemetry_dir(telemetry_dir);
    const ModelBank bank = load_model_bank(models_dir);
    const std::string hash = config_hash(cfg);
    const auto paths = feature_paths(out_dir);
    std::vector<std::filesystem::path> written;

    auto emit = [&](const LabeledDataset& d, const std::filesystem::path& path,
                    const std::string& source) {
        write_file_atomic(path, dataset_to_csv(d));
        const std::filesystem::path sidecar = path.string() + ".sidecar.txt";
        write_file_atomic(sidecar, dataset_sidecar(d, source, hash));
        written.push_back(path);
        written.push_back(sidecar);
    };

    const auto eps_runs = window_runs(runs, cfg.classify.eps_burn_in, cfg.classify.window);
    emit(build_eps_residual_dataset(eps_runs, bank, cfg.classify.with_moment), paths.eps,
         "eps residual bank" + std::string(cfg.classify.with_moment ? " + first moment" : ""));

    emit(build_pv_residual_dataset(eps_runs, bank), paths.pv, "pv residual pair");

    SocKalmanConfig kc = cfg.kalman;
    kc.seed = kalman_seed(cfg);
    kc.soc_init_estimate = cfg.plant.soc_init;
    const auto pair_runs = window_runs(runs, cfg.classify.pair_burn_in, cfg.classify.window);
    emit(build_pair_dataset(pair_runs, cfg.plant.battery_capacity_ah, kc, cfg.classify.dt_s,
                            cfg.classify.use_true_soc),
         paths.pair, cfg.classify.use_true_soc ? "(i_load, true soc)" : "(i_load, kalman soc)");

    RunManifest m;
    m.config_hash = hash;
    m.seed = cfg.seed;
    for (const auto& p : written) m.artifacts.push_back(p.string());
    write_manifest(m, out_dir / "manifest_extract_features.json");
    return written;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

/// Per-class trailing time block held out for testing; the front block
/// trains. Class runs are stored in time order, so slicing by position
/// within each class keeps the protocol honest for time series.
inline std::pair<LabeledDataset, LabeledDataset> time_block_split(const LabeledDataset& data,
                                                                  double holdout_fraction) {
    LabeledDataset train, test;
    train.class_order = test.class_order = data.class_order;
    train.feature_names = test.feature_names = data.feature_names;
    for (FaultKind f : data.class_order) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < data.labels.size(); ++i)
            if (data.labels[i] == f) rows.push_back(i);
        const std::size_t n_test = static_cast<std::size_t>(
            std::round(holdout_fraction * static_cast<double>(rows.size())));
        const std::size_t n_train = rows.size() - n_test;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto& dst = (i < n_train) ? train : test;
            dst.features.push_back(data.features[rows[i]]);
            dst.labels.push_back(data.labels[rows[i]]);
        }
    }
    return {train, test};
}

struct EvalReport {
    std::string task;        // "eps" or "pv" or "pair"
    std::string classifier;  // "mlp", "knn", "dt", "pca"
    std::vector<FaultKind> class_order;
    ConfusionMatrix confusion;
    std::vector<double> per_class_accuracy;
    double overall_accuracy = 0.0;
    double resubstitution = 0.0;
    double kfold = 0.0;
    std::optional<std::size_t> chosen_k;
    std::uint64_t seed = 0;
    std::string config_hash;
};

inline ordered_json eval_report_json(const EvalReport& r) {
    ordered_json j;
    j["task"] = r.task;
    j["classifier"] = r.classifier;
    ordered_json order = ordered_json::array();
    for (FaultKind f : r.class_order) order.push_back(fault_tag(f));
    j["class_order"] = order;
    j["confusion"] = r.confusion.counts;
    j["per_class_accuracy"] = r.per_class_accuracy;
    j["overall_accuracy"] = r.overall_accuracy;
    j["resubstitution_loss"] = r.resubstitution;
    j["kfold_loss"] = r.kfold;
    if (r.chosen_k) j["chosen_k"] = *r.chosen_k;
    j["seed"] = r.seed;
    j["config_hash"] = r.config_hash;
    return j;
}

/// Stratified seeded random holdout (per-class shuffle, trailing slice
/// held out). Used for the per-sample residual tasks; the pair task
/// keeps the time-block protocol.
inline std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& data,
                                                                  double holdout_fraction,
                                                                  std::uint64_t seed) {
    LabeledDataset train, test;
    train.class_order = test.class_order = data.class_order;
    train.feature_names = test.feature_names = data.feature_names;
    for (std::size_t ci = 0; ci < data.class_order.size(); ++ci) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < data.labels.size(); ++i)
            if (data.labels[i] == data.class_order[ci]) rows.push_back(i);
        Rng rng(derive_seed(seed, "holdout", ci));
        for (std::size_t i = rows.size(); i > 1; --i)
            std::swap(rows[i - 1], rows[rng.next_u64() % i]);
        const std::size_t n_test = static_cast<std::size_t>(
            std::round(holdout_fraction * static_cast<double>(rows.size())));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto& dst = (i + n_test < rows.size()) ? train : test;
            dst.features.push_back(data.features[rows[i]]);
            dst.labels.push_back(data.labels[rows[i]]);
        }
    }
    return {train, test};
}

namespace detail {
inline EvalReport evaluate_with(const std::string& task, const std::string& name,
                                const TrainerFn& trainer, const LabeledDataset& data,
                                const AppConfig& cfg) {
    // The (I_load, SOC) task is a trajectory: hold out the trailing time
    // block so lazy learners cannot lean on time-adjacent neighbors. The
    // residual tasks are per-sample discriminations; a stratified random
    // holdout measures them.
    const auto [train, test] =
        (task == "pair") ? time_block_split(data, cfg.classify.holdout_fraction)
                         : stratified_split(data, cfg.classify.holdout_fraction, eval_seed(cfg));
    EvalReport rep;
    rep.task = task;
    rep.classifier = name;
    rep.class_order = data.class_order;
    rep.seed = cfg.seed;
    rep.config_hash = config_hash(cfg);

    const PredictFn predict = trainer(train);
    rep.confusion = confusion_matrix(test.labels, predict(test.features), data.class_order);
    rep.per_class_accuracy = rep.confusion.per_class_accuracy();
    rep.overall_accuracy = rep.confusion.overall_accuracy();
    rep.resubstitution = resubstitution_loss(predict, train);
    rep.kfold = kfold_loss(trainer, data, cfg.classify.k_folds, eval_seed(cfg));
    return rep;
}
} // namespace detail

/// Evaluate one classifier on its task dataset. `eps_data` carries the
/// residual(+moment) features for the MLP; `pair_data` carries
/// (I_load, SOC) for KNN / DT / PCA.
inline EvalReport evaluate_classifier(const std::string& which, const LabeledDataset& eps_data,
                                      const LabeledDataset& pair_data, const AppConfig& cfg) {
    if (which == "mlp") {
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(cfg.seed, "eval-mlp");
        return detail::evaluate_with(
            "eps", "mlp",
            [tc](const LabeledDataset& train) -> PredictFn {
                MlpClassifier clf = mlp_classifier_train(train, tc);
                return [clf](const std::vector<std::vector<double>>& rows) {
                    return mlp_classifier_predict(clf, rows);
                };
            },
            eps_data, cfg);
    }
    if (which == "knn") {
        const auto [train, test] = time_block_split(pair_data, cfg.classify.holdout_fraction);
        const KnnSelection sel =
            knn_select_k(train, cfg.classify.knn_candidates, cfg.classify.k_folds, eval_seed(cfg));
        const std::size_t k = sel.chosen_k;
        EvalReport rep = detail::evaluate_with(
            "pair", "knn",
            [k](const LabeledDataset& tr) -> PredictFn {
                KnnClassifier clf{std::min(k, tr.features.size()), tr.features, tr.labels,
                                  tr.class_order};
                return [clf](const std::vector<std::vector<double>>& rows) {
                    return knn_predict(clf, rows);
                };
            },
            pair_data, cfg);
        rep.chosen_k = k;
        return rep;
    }
    if (which == "dt") {
        const std::size_t depth = cfg.classify.dt_max_depth;
        const std::size_t leaf = cfg.classify.dt_min_leaf;
        return detail::evaluate_with(
            "pair", "dt",
            [depth, leaf](const LabeledDataset& tr) -> PredictFn {
                DecisionTree tree = id3_train(tr, depth, leaf);
                return [tree](const std::vector<std::vector<double>>& rows) {
                    return id3_predict(tree, rows);
                };
            },
            pair_data, cfg);
    }
    if (which == "pca") {
        return detail::evaluate_with(
            "pair", "pca",
            [](const LabeledDataset& tr) -> PredictFn {
                PcaClassifier clf = pca_classifier_train(tr, 1);
                return [clf](const std::vector<std::vector<double>>& rows) {
                    return pca_classify(clf, rows);
                };
            },
            pair_data, cfg);
    }
    throw ConfigError("unknown classifier '" + which + "' (expected mlp, knn, dt, pca or all)");
}

/// MLP evaluated on the 3-class PV residual task.
inline EvalReport evaluate_pv_mlp(const LabeledDataset& pv_data, const AppConfig& cfg) {
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "eval-pv-mlp");
    return detail::evaluate_with(
        "pv", "mlp",
        [tc](const LabeledDataset& train) -> PredictFn {
            MlpClassifier clf = mlp_classifier_train(train, tc);
            return [clf](const std::vector<std::vector<double>>& rows) {
                return mlp_classifier_predict(clf, rows);
            };
        },
        pv_data, cfg);
}

/// Method-comparison table over the evaluation reports (accuracy in
/// percent).
inline std::string comparison_table(const std::vector<EvalReport>& reports) {
    auto method_label = [](const std::string& c) -> std::string {
        if (c == "mlp") return "Neural network (MLP)";
        if (c == "pca") return "PCA";
        if (c == "knn") return "KNN";
        if (c == "dt") return "DT";
        return c;
    };
    auto task_label = [](const std::string& t) -> std::string {
        if (t == "pv") return "Photovoltaic";
        return "Electrical power";
    };
    std::string out = "Method                 System            Accuracy (%)\n";
    out += "--------------------------------------------------------\n";
    auto row = [&](const EvalReport& r) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%-22s %-17s %7.2f\n", method_label(r.classifier).c_str(),
                      task_label(r.task).c_str(), 100.0 * r.overall_accuracy);
        out += buf;
    };
    // MLP rows first (electrical power then photovoltaic), then PCA, DT, KNN
    for (const auto& r : reports)
        if (r.classifier == "mlp" && r.task != "pv") row(r);
    for (const auto& r : reports)
        if (r.classifier == "mlp" && r.task == "pv") row(r);
    for (const char* m : {"pca", "dt", "knn"})
        for (const auto& r : reports)
            if (r.classifier == m) row(r);
    return out;
}

/// `evaluate` subcommand. `which` is a classifier name or "all"; "all"
/// additionally evaluates the PV-task MLP and emits the comparison
/// table.
inline std::vector<std::filesystem::path> cmd_evaluate(const AppConfig& cfg,
                                                       const std::filesystem::path& features_dir,
                                                       const std::string& which,
                                                       const std::filesystem::path& out_dir) {
    validate(cfg);
    if (which != "all" && which != "mlp" && which != "knn" && which != "dt" && which != "pca")
        throw ConfigError("unknown classifier '" + which + "' (expected mlp, knn, dt, pca or all)");
    const auto paths = feature_paths(features_dir);
    for (const auto& p : {paths.eps, paths.pv, paths.pair})
        if (!std::filesystem::exists(p)) throw DataError("missing feature dataset: " + p.string());
    const LabeledDataset eps_data = dataset_from_csv(read_file(paths.eps), eps_task_faults());
    const LabeledDataset pv_data = dataset_from_csv(read_file(paths.pv), pv_task_faults());
    const LabeledDataset pair_data = dataset_from_csv(read_file(paths.pair), eps_task_faults());

    std::vector<std::string> which_list;
    if (which == "all")
        which_list = {"mlp", "knn", "dt", "pca"};
    else
        which_list = {which};

    std::vector<EvalReport> reports;
    for (const auto& name : which_list)
        reports.push_back(evaluate_classifier(name, eps_data, pair_data, cfg));
    if (which == "all") reports.push_back(evaluate_pv_mlp(pv_data, cfg));

    std::vector<std::filesystem::path> written;
    for (const auto& rep : reports) {
        const std::string stem = "report_" + rep.classifier + (rep.task == "pv" ? "_pv" : "");
        const auto path = out_dir / (stem + ".json");
        write_file_atomic(path, eval_report_json(rep).dump(2) + "\n");
        written.push_back(path);
        // confusion matrix as an aligned text table next to the JSON
        const auto text_path = out_dir / ("confusion_" + rep.classifier +
                                          (rep.task == "pv" ? "_pv" : "") + ".txt");
        write_file_atomic(text_path, render_confusion(rep.confusion));
        written.push_back(text_path);
    }
    if (which == "all") {
        const auto table_path = out_dir / "comparison.txt";
        write_file_atomic(table_path, comparison_table(reports));
        written.push_back(table_path);
    }

    RunManifest m;
    m.config_hash = config_hash(cfg);
    m.seed = cfg.seed;
    for (const auto& p : written) m.artifacts.push_back(p.string());
    write_manifest(m, out_dir / "manifest_evaluate.json");
    return written;
}

/// `report` subcommand: re-render the comparison table from report JSON
/// files already on disk.
inline std::string cmd_report(const std::filesystem::path& reports_dir) {
    std::vector<EvalReport> reports;
    for (const auto& entry : std::filesystem::directory_iterator(reports_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("report_", 0) != 0 || entry.path().extension() != ".json") continue;
        const auto j = ordered_json::parse(read_file(entry.path()));
        EvalReport r;
        r.task = j.at("task").get<std::string>();
        r.classifier = j.at("classifier").get<std::string>();
        r.overall_accuracy = j.at("overall_accuracy").get<double>();
        reports.push_back(std::move(r));
    }
    if (reports.empty()) throw DataError("no report JSON files in " + reports_dir.string());
    return comparison_table(reports);
}

} // namespace epsdiag

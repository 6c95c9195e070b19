/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "epsdiag/eps_plant.hpp"
#include "epsdiag/errors.hpp"
#include "epsdiag/linalg.hpp"
#include "epsdiag/rng.hpp"
#include "epsdiag/util.hpp"

namespace epsdiag {

/// Affine map of one input or output axis into [-1, 1]:
/// scaled = (x - offset) * gain. Gains are never zero.
struct ScalingAxis {
    double offset = 0.0;
    double gain = 1.0;

    double scale(double x) const { return (x - offset) * gain; }
    double unscale(double s) const { return s / gain + offset; }
};

inline ScalingAxis fit_scaling(const Matrix& data, std::size_t col) {
    double lo = data(0, col), hi = data(0, col);
    for (std::size_t r = 1; r < data.rows(); ++r) {
        lo = std::min(lo, data(r, col));
        hi = std::max(hi, data(r, col));
    }
    ScalingAxis s;
    s.offset = 0.5 * (hi + lo);
    s.gain = (hi > lo) ? 2.0 / (hi - lo) : 1.0;
    return s;
}

/// Three-layer perceptron: linear input scaling, tanh hidden layer,
/// linear output layer, output unscaling. Weight matrices carry the bias
/// as a trailing column.
struct MlpRegressor {
    std::size_t n_in = 0;
    std::size_t n_hidden = 0;
    std::size_t n_out = 0;
    Matrix hidden_weights;  // n_hidden x (n_in + 1)
    Matrix output_weights;  // n_out x (n_hidden + 1)
    std::vector<ScalingAxis> input_scaling;
    std::vector<ScalingAxis> output_scaling;
};

/// Forward pass for one sample (raw units in, raw units out).
inline void predict_row(const MlpRegressor& m, const double* x, double* y,
                        double* hidden_scratch = nullptr) {
    std::vector<double> local;
    double* h = hidden_scratch;
    if (!h) {
        local.resize(m.n_hidden);
        h = local.data();
    }
    for (std::size_t j = 0; j < m.n_hidden; ++j) {
        const double* w = m.hidden_weights.row_ptr(j);
        double acc = w[m.n_in];  // bias
        for (std::size_t i = 0; i < m.n_in; ++i) acc += w[i] * m.input_scaling[i].scale(x[i]);
        h[j] = std::tanh(acc);
    }
    for (std::size_t o = 0; o < m.n_out; ++o) {
        const double* w = m.output_weights.row_ptr(o);
        double acc = w[m.n_hidden];  // bias
        for (std::size_t j = 0; j < m.n_hidden; ++j) acc += w[j] * h[j];
        y[o] = m.output_scaling[o].unscale(acc);
    }
}

/// Forward pass over a sample matrix. Throws ShapeError on width mismatch.
inline Matrix predict(const MlpRegressor& m, const Matrix& inputs) {
    if (inputs.cols() != m.n_in)
        throw ShapeError("predict: expected " + std::to_string(m.n_in) + " inputs, got " +
                         std::to_string(inputs.cols()));
    Matrix out(inputs.rows(), m.n_out);
    std::vector<double> h(m.n_hidden);
    for (std::size_t r = 0; r < inputs.rows(); ++r)
        predict_row(m, inputs.row_ptr(r), out.row_ptr(r), h.data());
    return out;
}

struct TrainConfig {
    std::size_t n_hidden = 10;
    std::size_t max_epochs = 300;
    double mu_init = 1e-3;       // LM damping
    double mu_factor = 10.0;
    double mu_max = 1e10;
    double goal_mse = 1e-10;     // on scaled units
    double split_train = 0.70;
    double split_val = 0.15;
    double split_test = 0.15;
    std::size_t val_fail_limit = 6;
    std::uint64_t seed = 1;
};

inline void validate(const TrainConfig& c) {
    if (c.n_hidden < 1) throw ConfigError("n_hidden must be >= 1");
    if (c.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (!(c.mu_init > 0.0)) throw ConfigError("mu_init must be > 0");
    if (!(c.mu_factor > 1.0)) throw ConfigError("mu_factor must be > 1");
    if (!(c.goal_mse >= 0.0)) throw ConfigError("goal_mse must be >= 0");
    const double sum = c.split_train + c.split_val + c.split_test;
    if (!(c.split_train > 0.0 && c.split_train < 1.0) || c.split_val < 0.0 || c.split_test < 0.0 ||
        std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("split fractions must lie in (0,1) and sum to 1");
}

/// Fit-quality report: MSE/RMSE, per-output Pearson correlation (empty
/// optional when the reference column has zero variance), error mean and
/// variance, and a 30-bin error histogram.
struct FitReport {
    double mse = 0.0;
    double rmse = 0.0;
    std::vector<std::optional<double>> correlation_r;
    double error_mean_mu = 0.0;
    double error_variance_delta = 0.0;
    std::vector<double> histogram_edges;   // 31 edges for 30 bins
    std::vector<std::size_t> histogram_counts;
    std::size_t n_samples = 0;
};

inline FitReport fit_report(const Matrix& y, const Matrix& y_hat) {
    if (y.rows() != y_hat.rows() || y.cols() != y_hat.cols())
        throw ShapeError("fit_report: shape mismatch");
    if (y.rows() < 1) throw ShapeError("fit_report: need at least one sample");

    FitReport rep;
    rep.n_samples = y.rows();
    const std::size_t n = y.rows(), m = y.cols();

    double sse = 0.0, esum = 0.0;
    std::vector<double> errors;
    errors.reserve(n * m);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) {
            const double e = y(r, c) - y_hat(r, c);
            errors.push_back(e);
            sse += e * e;
            esum += e;
        }
    const double cnt = static_cast<double>(n * m);
    rep.mse = sse / cnt;
    rep.rmse = std::sqrt(rep.mse);
    rep.error_mean_mu = esum / cnt;
    double var = 0.0;
    for (double e : errors) var += (e - rep.error_mean_mu) * (e - rep.error_mean_mu);
    rep.error_variance_delta = var / cnt;

    rep.correlation_r.resize(m);
    for (std::size_t c = 0; c < m; ++c) {
        double my = 0.0, mh = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            my += y(r, c);
            mh += y_hat(r, c);
        }
        my /= static_cast<double>(n);
        mh /= static_cast<double>(n);
        double syy = 0.0, shh = 0.0, syh = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double dy = y(r, c) - my, dh = y_hat(r, c) - mh;
            syy += dy * dy;
            shh += dh * dh;
            syh += dy * dh;
        }
        if (syy <= 0.0 || shh <= 0.0)
            rep.correlation_r[c] = std::nullopt;  // undefined, not NaN
        else
            rep.correlation_r[c] = syh / std::sqrt(syy * shh);
    }

    const auto [mn_it, mx_it] = std::minmax_element(errors.begin(), errors.end());
    const double mn = *mn_it, mx = *mx_it;
    const std::size_t bins = 30;
    rep.histogram_edges.resize(bins + 1);
    rep.histogram_counts.assign(bins, 0);
    const double width = (mx > mn) ? (mx - mn) / static_cast<double>(bins) : 0.0;
    for (std::size_t b = 0; b <= bins; ++b)
        rep.histogram_edges[b] = mn + width * static_cast<double>(b);
    for (double e : errors) {
        std::size_t b = 0;
        if (width > 0.0) {
            b = static_cast<std::size_t>((e - mn) / width);
            if (b >= bins) b = bins - 1;
        }
        rep.histogram_counts[b]++;
    }
    return rep;
}

struct TrainResult {
    MlpRegressor model;
    FitReport report;            // on the test split, original units
    std::vector<double> train_sse_trace;  // accepted steps, scaled units
    std::size_t epochs = 0;
    std::string stop_reason;
};

namespace detail {

/// Jacobian-transpose products of the scaled-network error for one
/// sample block: accumulates JtJ and Jte for e = t_scaled - y_scaled.
/// Weight vector layout: hidden row-major, then output row-major.
inline void accumulate_normal_equations(const Matrix& w_h, const Matrix& w_o,
                                        const Matrix& x_scaled, const Matrix& t_scaled,
                                        Matrix& jtj, std::vector<double>& jte, double& sse) {
    const std::size_t n_in = x_scaled.cols();
    const std::size_t n_hidden = w_h.rows();
    const std::size_t n_out = w_o.rows();
    const std::size_t nw_h = n_hidden * (n_in + 1);
    const std::size_t nw = nw_h + n_out * (n_hidden + 1);

    std::vector<double> h(n_hidden), dh(n_hidden), row(nw);
    for (std::size_t s = 0; s < x_scaled.rows(); ++s) {
        const double* x = x_scaled.row_ptr(s);
        for (std::size_t j = 0; j < n_hidden; ++j) {
            const double* w = w_h.row_ptr(j);
            double acc = w[n_in];
            for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * x[i];
            h[j] = std::tanh(acc);
            dh[j] = 1.0 - h[j] * h[j];
        }
        for (std::size_t o = 0; o < n_out; ++o) {
            const double* w = w_o.row_ptr(o);
            double y = w[n_hidden];
            for (std::size_t j = 0; j < n_hidden; ++j) y += w[j] * h[j];
            const double e = t_scaled(s, o) - y;
            sse += e * e;

            // d y_o / d weights; J row is for the error, handled by sign
            // convention in the update step (we solve for the step that
            // decreases e with J of y).
            std::fill(row.begin(), row.end(), 0.0);
            for (std::size_t j = 0; j < n_hidden; ++j) {
                const double g = w[j] * dh[j];
                double* dst = row.data() + j * (n_in + 1);
                for (std::size_t i = 0; i < n_in; ++i) dst[i] = g * x[i];
                dst[n_in] = g;
            }
            double* dst = row.data() + nw_h + o * (n_hidden + 1);
            for (std::size_t j = 0; j < n_hidden; ++j) dst[j] = h[j];
            dst[n_hidden] = 1.0;

            for (std::size_t a = 0; a < nw; ++a) {
                const double ra = row[a];
                if (ra == 0.0) continue;
                double* jrow = jtj.row_ptr(a);
                for (std::size_t b = a; b < nw; ++b) jrow[b] += ra * row[b];
                jte[a] += ra * e;
            }
        }
    }
}

inline double sse_of(const Matrix& w_h, const Matrix& w_o, const Matrix& x_scaled,
                     const Matrix& t_scaled) {
    const std::size_t n_in = x_scaled.cols();
    const std::size_t n_hidden = w_h.rows();
    const std::size_t n_out = w_o.rows();
    std::vector<double> h(n_hidden);
    double sse = 0.0;
    for (std::size_t s = 0; s < x_scaled.rows(); ++s) {
        const double* x = x_scaled.row_ptr(s);
        for (std::size_t j = 0; j < n_hidden; ++j) {
            const double* w = w_h.row_ptr(j);
            double acc = w[n_in];
            for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * x[i];
            h[j] = std::tanh(acc);
        }
        for (std::size_t o = 0; o < n_out; ++o) {
            const double* w = w_o.row_ptr(o);
            double y = w[n_hidden];
            for (std::size_t j = 0; j < n_hidden; ++j) y += w[j] * h[j];
            const double e = t_scaled(s, o) - y;
            sse += e * e;
        }
    }
    return sse;
}

} // namespace detail

/// Train a 3-layer MLP with Levenberg-Marquardt (Hagan-Menhaj damping
/// schedule): solve (JtJ + mu I) dw = Jt e each epoch, accept the step
/// and shrink mu when the training SSE decreases, otherwise grow mu and
/// retry. Data is split train/validation/test by a seeded shuffle;
/// training halts on max_epochs, goal_mse, mu overflow, or when the
/// validation SSE has risen for val_fail_limit consecutive accepted
/// steps. The fit report is computed on the test split in original
/// units.
inline TrainResult train_lm(const Matrix& inputs, const Matrix& targets, const TrainConfig& config) {
    validate(config);
    if (inputs.rows() != targets.rows()) throw ShapeError("train_lm: row count mismatch");
    if (inputs.rows() < 10) throw DataError("train_lm: need at least 10 samples");
    for (double v : inputs.data())
        if (!std::isfinite(v)) throw DataError("train_lm: non-finite input");
    for (double v : targets.data())
        if (!std::isfinite(v)) throw DataError("train_lm: non-finite target");

    const std::size_t n = inputs.rows();
    const std::size_t n_in = inputs.cols();
    const std::size_t n_out = targets.cols();
    const std::size_t n_hidden = config.n_hidden;

    MlpRegressor model;
    model.n_in = n_in;
    model.n_hidden = n_hidden;
    model.n_out = n_out;
    model.input_scaling.resize(n_in);
    model.output_scaling.resize(n_out);
    for (std::size_t c = 0; c < n_in; ++c) model.input_scaling[c] = fit_scaling(inputs, c);
    for (std::size_t c = 0; c < n_out; ++c) model.output_scaling[c] = fit_scaling(targets, c);

    // scaled copies
    Matrix xs(n, n_in), ts(n, n_out);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n_in; ++c) xs(r, c) = model.input_scaling[c].scale(inputs(r, c));
        for (std::size_t c = 0; c < n_out; ++c) ts(r, c) = model.output_scaling[c].scale(targets(r, c));
    }

    // seeded shuffle, then contiguous train/val/test slices
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(config.seed, "train-split"));
    for (std::size_t i = n; i > 1; --i)
        std::swap(perm[i - 1], perm[rng.next_u64() % i]);

    std::size_t n_train = static_cast<std::size_t>(std::round(config.split_train * static_cast<double>(n)));
    std::size_t n_val = static_cast<std::size_t>(std::round(config.split_val * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n);
    if (n_train + n_val > n) n_val = n - n_train;
    std::size_t n_test = n - n_train - n_val;
    if (config.split_test > 0.0 && n_test == 0 && n_train > 1) {
        --n_train;
        n_test = 1;
    }

    auto take = [&](std::size_t from, std::size_t count, const Matrix& src, std::size_t w) {
        Matrix out(count, w);
        for (std::size_t r = 0; r < count; ++r)
            for (std::size_t c = 0; c < w; ++c) out(r, c) = src(perm[from + r], c);
        return out;
    };
    const Matrix x_train = take(0, n_train, xs, n_in);
    const Matrix t_train = take(0, n_train, ts, n_out);
    const Matrix x_val = take(n_train, n_val, xs, n_in);
    const Matrix t_val = take(n_train, n_val, ts, n_out);

    // weight init: uniform, scaled by fan-in
    Matrix w_h(n_hidden, n_in + 1), w_o(n_out, n_hidden + 1);
    Rng wrng(derive_seed(config.seed, "train-init"));
    const double span_h = 1.0 / std::sqrt(static_cast<double>(n_in + 1));
    for (double& w : w_h.data()) w = wrng.uniform(-span_h, span_h);
    const double span_o = 1.0 / std::sqrt(static_cast<double>(n_hidden + 1));
    for (double& w : w_o.data()) w = wrng.uniform(-span_o, span_o);

    const std::size_t nw_h = n_hidden * (n_in + 1);
    const std::size_t nw = nw_h + n_out * (n_hidden + 1);
    double mu = config.mu_init;
    double sse = detail::sse_of(w_h, w_o, x_train, t_train);
    double best_val = (n_val > 0) ? detail::sse_of(w_h, w_o, x_val, t_val)
                                  : std::numeric_limits<double>::infinity();
    std::size_t val_fails = 0;

    TrainResult result;
    result.train_sse_trace.push_back(sse);
    result.stop_reason = "max_epochs";

    const double denom = static_cast<double>(n_train * n_out);
    Matrix jtj(nw, nw);
    std::vector<double> jte(nw), dw(nw);

    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        result.epochs = epoch + 1;
        if (sse / denom <= config.goal_mse) {
            result.stop_reason = "goal_mse";
            break;
        }

        std::fill(jtj.data().begin(), jtj.data().end(), 0.0);
        std::fill(jte.begin(), jte.end(), 0.0);
        double check = 0.0;
        detail::accumulate_normal_equations(w_h, w_o, x_train, t_train, jtj, jte, check);
        for (std::size_t a = 0; a < nw; ++a)
            for (std::size_t b = 0; b < a; ++b) jtj(a, b) = jtj(b, a);

        bool accepted = false;
        while (mu <= config.mu_max) {
            Matrix a = jtj;
            for (std::size_t d = 0; d < nw; ++d) a(d, d) += mu;
            if (!solve_spd(a, jte, dw)) {
                mu *= config.mu_factor;
                continue;
            }
            Matrix w_h_try = w_h, w_o_try = w_o;
            for (std::size_t i = 0; i < nw_h; ++i) w_h_try.data()[i] += dw[i];
            for (std::size_t i = nw_h; i < nw; ++i) w_o_try.data()[i - nw_h] += dw[i];
            const double sse_try = detail::sse_of(w_h_try, w_o_try, x_train, t_train);
            if (sse_try < sse) {
                w_h = std::move(w_h_try);
                w_o = std::move(w_o_try);
                sse = sse_try;
                mu = std::max(mu / config.mu_factor, 1e-20);
                accepted = true;
                break;
            }
            mu *= config.mu_factor;
        }
        if (!accepted) {
            result.stop_reason = "mu_overflow";
            break;
        }
        result.train_sse_trace.push_back(sse);

        if (n_val > 0) {
            const double val_sse = detail::sse_of(w_h, w_o, x_val, t_val);
            if (val_sse > best_val) {
                if (++val_fails >= config.val_fail_limit) {
                    result.stop_reason = "validation";
                    break;
                }
            } else {
                best_val = val_sse;
                val_fails = 0;
            }
        }
    }

    model.hidden_weights = std::move(w_h);
    model.output_weights = std::move(w_o);

    // test-split report in original units
    const std::size_t rep_from = (n_test > 0) ? n_train + n_val : 0;
    const std::size_t rep_count = (n_test > 0) ? n_test : n;
    Matrix y_ref(rep_count, n_out), x_ref(rep_count, n_in);
    for (std::size_t r = 0; r < rep_count; ++r)
        for (std::size_t c = 0; c < n_in; ++c) x_ref(r, c) = inputs(perm[rep_from + r], c);
    for (std::size_t r = 0; r < rep_count; ++r)
        for (std::size_t c = 0; c < n_out; ++c) y_ref(r, c) = targets(perm[rep_from + r], c);
    result.report = fit_report(y_ref, predict(model, x_ref));
    result.model = std::move(model);
    return result;
}

/// Identified models for every health mode (Fig.-1-style bank). Index 0
/// of the EPS residual order is the healthy system model; fault models
/// follow in eps_task_faults() order.
struct ModelBank {
    MlpRegressor healthy_system;                  // (P_sun, T) -> I_load
    MlpRegressor healthy_pv;                      // (P_sun, T) -> (V_pv, I_pv)
    std::map<FaultKind, MlpRegressor> fault_models;     // EPS faults -> I_load model
    std::map<FaultKind, MlpRegressor> pv_fault_models;  // PV faults -> (V, I) model
    std::map<std::string, FitReport> reports;           // keyed by model name
};

inline const std::vector<FaultKind>& eps_bank_fault_order() {
    static const std::vector<FaultKind> v = {FaultKind::BatteryGround, FaultKind::MpptIgbtOpen,
                                             FaultKind::RegIgbtOpen, FaultKind::RegIgbtShort};
    return v;
}

inline std::string model_name(FaultKind f, bool pv) {
    return std::string(pv ? "pv_" : "system_") + fault_tag(f);
}

/// System-model regressors in residual order: healthy then the four EPS
/// faults.
inline std::vector<const MlpRegressor*> residual_models(const ModelBank& bank) {
    std::vector<const MlpRegressor*> out;
    out.push_back(&bank.healthy_system);
    for (FaultKind f : eps_bank_fault_order()) out.push_back(&bank.fault_models.at(f));
    return out;
}

namespace detail {
inline Matrix telemetry_inputs(const std::vector<TelemetrySample>& t) {
    Matrix x(t.size(), 2);
    for (std::size_t r = 0; r < t.size(); ++r) {
        x(r, 0) = t[r].env.irradiance_w_m2;
        x(r, 1) = t[r].env.panel_temp_c;
    }
    return x;
}

inline Matrix telemetry_i_load(const std::vector<TelemetrySample>& t) {
    Matrix y(t.size(), 1);
    for (std::size_t r = 0; r < t.size(); ++r) y(r, 0) = t[r].i_load_a;
    return y;
}

inline Matrix telemetry_pv_outputs(const std::vector<TelemetrySample>& t) {
    Matrix y(t.size(), 2);
    for (std::size_t r = 0; r < t.size(); ++r) {
        y(r, 0) = t[r].v_pv_v;
        y(r, 1) = t[r].i_pv_a;
    }
    return y;
}
} // namespace detail

/// Identify the whole bank from per-class telemetry. Each model gets an
/// independent seed derived from config.seed. Fails the build when a
/// healthy model's correlation falls below 0.95.
inline ModelBank build_model_bank(const std::map<FaultKind, std::vector<TelemetrySample>>& datasets,
                                  const TrainConfig& config) {
    for (FaultKind f : all_faults()) {
        auto it = datasets.find(f);
        if (it == datasets.end())
            throw DataError(std::string("build_model_bank: missing dataset for fault ") + fault_tag(f));
        if (it->second.size() < 500)
            throw DataError(std::string("build_model_bank: dataset for ") + fault_tag(f) +
                            " has fewer than 500 samples");
    }

    ModelBank bank;
    std::uint64_t counter = 0;
    auto train_one = [&](const std::vector<TelemetrySample>& t, bool pv) {
        TrainConfig c = config;
        c.seed = derive_seed(config.seed, "model-bank", counter++);
        const Matrix x = detail::telemetry_inputs(t);
        const Matrix y = pv ? detail::telemetry_pv_outputs(t) : detail::telemetry_i_load(t);
        return train_lm(x, y, c);
    };

    auto check_healthy = [](const TrainResult& r, const std::string& name) {
        for (const auto& corr : r.report.correlation_r) {
            if (!corr || *corr < 0.95)
                throw QualityGateError("model bank quality gate failed: " + name +
                                       " correlation below 0.95");
        }
    };

    TrainResult rs = train_one(datasets.at(FaultKind::Healthy), false);
    check_healthy(rs, "system_Healthy");
    bank.reports[model_name(FaultKind::Healthy, false)] = rs.report;
    bank.healthy_system = std::move(rs.model);

    TrainResult rp = train_one(datasets.at(FaultKind::Healthy), true);
    check_healthy(rp, "pv_Healthy");
    bank.reports[model_name(FaultKind::Healthy, true)] = rp.report;
    bank.healthy_pv = std::move(rp.model);

    for (FaultKind f : eps_bank_fault_order()) {
        TrainResult r = train_one(datasets.at(f), false);
        bank.reports[model_name(f, false)] = r.report;
        bank.fault_models[f] = std::move(r.model);
    }
    for (FaultKind f : {FaultKind::PvLineLine, FaultKind::PvOpenCircuit}) {
        TrainResult r = train_one(datasets.at(f), true);
        bank.reports[model_name(f, true)] = r.report;
        bank.pv_fault_models[f] = std::move(r.model);
    }
    return bank;
}

// --- model serialization: self-describing text, exact round-trip ---

inline std::string mlp_to_text(const MlpRegressor& m) {
    std::string out = "mlp v1 " + std::to_string(m.n_in) + ' ' + std::to_string(m.n_hidden) + ' ' +
                      std::to_string(m.n_out) + '\n';
    auto scaling_line = [&](const std::vector<ScalingAxis>& v) {
        std::string line;
        for (const auto& s : v) {
            if (!line.empty()) line += ' ';
            line += fmt_double(s.offset) + ' ' + fmt_double(s.gain);
        }
        return line + '\n';
    };
    out += scaling_line(m.input_scaling);
    out += scaling_line(m.output_scaling);
    auto matrix_rows = [&](const Matrix& w) {
        std::string block;
        for (std::size_t r = 0; r < w.rows(); ++r) {
            std::string line;
            for (std::size_t c = 0; c < w.cols(); ++c) {
                if (!line.empty()) line += ' ';
                line += fmt_double(w(r, c));
            }
            block += line + '\n';
        }
        return block;
    };
    out += matrix_rows(m.hidden_weights);
    out += matrix_rows(m.output_weights);
    return out;
}

inline MlpRegressor mlp_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string magic, version;
    MlpRegressor m;
    in >> magic >> version >> m.n_in >> m.n_hidden >> m.n_out;
    if (!in || magic != "mlp" || version != "v1") throw DataError("mlp_from_text: bad header");
    auto read_scaling = [&](std::size_t count) {
        std::vector<ScalingAxis> v(count);
        for (auto& s : v) {
            std::string a, b;
            in >> a >> b;
            if (!in) throw DataError("mlp_from_text: truncated scaling row");
            s.offset = parse_double(a, "mlp scaling");
            s.gain = parse_double(b, "mlp scaling");
        }
        return v;
    };
    m.input_scaling = read_scaling(m.n_in);
    m.output_scaling = read_scaling(m.n_out);
    auto read_matrix = [&](std::size_t rows, std::size_t cols) {
        Matrix w(rows, cols);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
                std::string tok;
                in >> tok;
                if (!in) throw DataError("mlp_from_text: truncated weight matrix");
                w(r, c) = parse_double(tok, "mlp weights");
            }
        return w;
    };
    m.hidden_weights = read_matrix(m.n_hidden, m.n_in + 1);
    m.output_weights = read_matrix(m.n_out, m.n_hidden + 1);
    return m;
}

} // namespace epsdiag

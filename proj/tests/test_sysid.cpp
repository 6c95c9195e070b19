/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <catch2/catch.hpp>

#include "epsdiag/eps_plant.hpp"
#include "epsdiag/rng.hpp"
#include "epsdiag/sysid.hpp"

using namespace epsdiag;

namespace {

Matrix random_matrix(std::size_t n, std::size_t m, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix out(n, m);
    for (double& v : out.data()) v = rng.uniform(lo, hi);
    return out;
}

// Ordinary least squares through the normal equations; the independent
// oracle for linear targets.
Matrix ols_predict(const Matrix& x, const Matrix& y, const Matrix& x_query) {
    const std::size_t n = x.rows(), d = x.cols() + 1, m = y.cols();
    Matrix xtx(d, d), b(d, m);
    auto aug = [&](const Matrix& src, std::size_t r, std::size_t c) {
        return c < src.cols() ? src(r, c) : 1.0;
    };
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) xtx(i, j) += aug(x, r, i) * aug(x, r, j);
            for (std::size_t o = 0; o < m; ++o) b(i, o) += aug(x, r, i) * y(r, o);
        }
    Matrix coef(d, m);
    for (std::size_t o = 0; o < m; ++o) {
        std::vector<double> rhs(d), sol;
        for (std::size_t i = 0; i < d; ++i) rhs[i] = b(i, o);
        REQUIRE(solve_spd(xtx, rhs, sol));
        for (std::size_t i = 0; i < d; ++i) coef(i, o) = sol[i];
    }
    Matrix out(x_query.rows(), m);
    for (std::size_t r = 0; r < x_query.rows(); ++r)
        for (std::size_t o = 0; o < m; ++o) {
            double acc = coef(x.cols(), o);
            for (std::size_t i = 0; i < x.cols(); ++i) acc += coef(i, o) * x_query(r, i);
            out(r, o) = acc;
        }
    return out;
}

} // namespace

TEST_CASE("constant targets collapse to the bias solution") {
    Rng rng(5);
    const Matrix x = random_matrix(60, 2, rng);
    Matrix y(60, 1, 3.25);
    TrainConfig cfg;
    cfg.n_hidden = 3;
    cfg.seed = 11;
    cfg.goal_mse = 1e-16;  // drive past the default stopping goal
    const auto res = train_lm(x, y, cfg);
    CHECK(res.report.mse <= 1e-12);
    const Matrix pred = predict(res.model, x);
    for (std::size_t r = 0; r < pred.rows(); ++r) CHECK(pred(r, 0) == Approx(3.25).margin(1e-5));
}

TEST_CASE("linear targets are learned to least-squares accuracy") {
    Rng rng(7);
    const Matrix x = random_matrix(200, 2, rng);
    Matrix y(200, 1);
    for (std::size_t r = 0; r < 200; ++r) y(r, 0) = 1.7 * x(r, 0) - 0.6 * x(r, 1) + 0.25;
    TrainConfig cfg;
    cfg.n_hidden = 3;
    cfg.max_epochs = 400;
    cfg.seed = 3;
    const auto res = train_lm(x, y, cfg);
    CHECK(res.report.mse <= 1e-8);

    const Matrix oracle = ols_predict(x, y, x);
    const Matrix pred = predict(res.model, x);
    double gap = 0.0;
    for (std::size_t r = 0; r < 200; ++r)
        gap += (pred(r, 0) - oracle(r, 0)) * (pred(r, 0) - oracle(r, 0));
    CHECK(std::sqrt(gap / 200.0) <= 1e-3);
}

TEST_CASE("an all-zero network outputs the output scaling offset") {
    MlpRegressor m;
    m.n_in = 2;
    m.n_hidden = 4;
    m.n_out = 1;
    m.hidden_weights = Matrix(4, 3, 0.0);
    m.output_weights = Matrix(1, 5, 0.0);
    m.input_scaling = {ScalingAxis{0.0, 1.0}, ScalingAxis{0.0, 1.0}};
    m.output_scaling = {ScalingAxis{42.0, 0.5}};
    Matrix x(3, 2);
    x(0, 0) = -5.0;
    x(1, 1) = 9.0;
    x(2, 0) = 1.0;
    const Matrix y = predict(m, x);
    for (std::size_t r = 0; r < 3; ++r) CHECK(y(r, 0) == Approx(42.0).margin(1e-15));
}

TEST_CASE("predict matches a manual forward pass") {
    Rng rng(21);
    MlpRegressor m;
    m.n_in = 2;
    m.n_hidden = 3;
    m.n_out = 2;
    m.hidden_weights = random_matrix(3, 3, rng);
    m.output_weights = random_matrix(2, 4, rng);
    m.input_scaling = {ScalingAxis{1.0, 0.25}, ScalingAxis{-2.0, 0.5}};
    m.output_scaling = {ScalingAxis{3.0, 2.0}, ScalingAxis{0.0, 0.1}};

    Matrix x(1, 2);
    x(0, 0) = 4.0;
    x(0, 1) = -1.0;
    const Matrix y = predict(m, x);

    const double s0 = (4.0 - 1.0) * 0.25, s1 = (-1.0 + 2.0) * 0.5;
    double h[3];
    for (int j = 0; j < 3; ++j)
        h[j] = std::tanh(m.hidden_weights(j, 0) * s0 + m.hidden_weights(j, 1) * s1 +
                         m.hidden_weights(j, 2));
    for (int o = 0; o < 2; ++o) {
        double acc = m.output_weights(o, 3);
        for (int j = 0; j < 3; ++j) acc += m.output_weights(o, j) * h[j];
        const double expected = acc / m.output_scaling[o].gain + m.output_scaling[o].offset;
        CHECK(y(0, o) == Approx(expected).margin(1e-12));
    }
}

TEST_CASE("analytic input sensitivity matches central differences") {
    Rng rng(31);
    MlpRegressor m;
    m.n_in = 2;
    m.n_hidden = 5;
    m.n_out = 1;
    m.hidden_weights = random_matrix(5, 3, rng);
    m.output_weights = random_matrix(1, 6, rng);
    m.input_scaling = {ScalingAxis{0.3, 0.8}, ScalingAxis{-0.2, 1.3}};
    m.output_scaling = {ScalingAxis{1.5, 0.7}};

    for (int trial = 0; trial < 10; ++trial) {
        Matrix x(1, 2);
        x(0, 0) = rng.uniform(-1.0, 1.0);
        x(0, 1) = rng.uniform(-1.0, 1.0);
        for (std::size_t in = 0; in < 2; ++in) {
            // analytic layer-chain product
            double analytic = 0.0;
            const double s0 = m.input_scaling[0].scale(x(0, 0));
            const double s1 = m.input_scaling[1].scale(x(0, 1));
            for (std::size_t j = 0; j < 5; ++j) {
                const double pre =
                    m.hidden_weights(j, 0) * s0 + m.hidden_weights(j, 1) * s1 + m.hidden_weights(j, 2);
                const double dh = 1.0 - std::tanh(pre) * std::tanh(pre);
                analytic += m.output_weights(0, j) * dh * m.hidden_weights(j, in);
            }
            analytic *= m.input_scaling[in].gain / m.output_scaling[0].gain;

            const double h = 1e-5;
            Matrix xp = x, xm = x;
            xp(0, in) += h;
            xm(0, in) -= h;
            const double fd = (predict(m, xp)(0, 0) - predict(m, xm)(0, 0)) / (2.0 * h);
            CHECK(fd == Approx(analytic).epsilon(1e-6));
        }
    }
}

TEST_CASE("LM normal equations match a finite-difference Jacobian") {
    Rng rng(17);
    const std::size_t n_in = 2, n_hidden = 2, n_out = 1, n = 6;
    Matrix w_h = random_matrix(n_hidden, n_in + 1, rng);
    Matrix w_o = random_matrix(n_out, n_hidden + 1, rng);
    const Matrix x = random_matrix(n, n_in, rng);
    const Matrix t = random_matrix(n, n_out, rng);

    const std::size_t nw = n_hidden * (n_in + 1) + n_out * (n_hidden + 1);
    Matrix jtj(nw, nw);
    std::vector<double> jte(nw);
    double sse = 0.0;
    detail::accumulate_normal_equations(w_h, w_o, x, t, jtj, jte, sse);
    for (std::size_t a = 0; a < nw; ++a)
        for (std::size_t b = 0; b < a; ++b) jtj(a, b) = jtj(b, a);

    // finite-difference Jacobian of the network output wrt each weight
    auto outputs = [&](const Matrix& wh, const Matrix& wo) {
        std::vector<double> out;
        for (std::size_t s = 0; s < n; ++s) {
            double h[2];
            for (std::size_t j = 0; j < n_hidden; ++j)
                h[j] = std::tanh(wh(j, 0) * x(s, 0) + wh(j, 1) * x(s, 1) + wh(j, 2));
            out.push_back(wo(0, 0) * h[0] + wo(0, 1) * h[1] + wo(0, 2));
        }
        return out;
    };
    const double eps = 1e-6;
    Matrix j_fd(n, nw);
    for (std::size_t w = 0; w < nw; ++w) {
        Matrix whp = w_h, whm = w_h, wop = w_o, wom = w_o;
        if (w < n_hidden * (n_in + 1)) {
            whp.data()[w] += eps;
            whm.data()[w] -= eps;
        } else {
            wop.data()[w - n_hidden * (n_in + 1)] += eps;
            wom.data()[w - n_hidden * (n_in + 1)] -= eps;
        }
        const auto up = outputs(whp, wop);
        const auto dn = outputs(whm, wom);
        for (std::size_t s = 0; s < n; ++s) j_fd(s, w) = (up[s] - dn[s]) / (2.0 * eps);
    }
    for (std::size_t a = 0; a < nw; ++a)
        for (std::size_t b = 0; b < nw; ++b) {
            double acc = 0.0;
            for (std::size_t s = 0; s < n; ++s) acc += j_fd(s, a) * j_fd(s, b);
            CHECK(jtj(a, b) == Approx(acc).epsilon(1e-5).margin(1e-8));
        }
}

TEST_CASE("accepted LM steps strictly decrease the training SSE") {
    OrbitConfig orbit;
    PlantConfig plant;
    const auto run = simulate(orbit, plant, FaultKind::Healthy, 600, 1.0);
    const Matrix x = detail::telemetry_inputs(run);
    const Matrix y = detail::telemetry_i_load(run);
    TrainConfig cfg;
    cfg.max_epochs = 60;
    const auto res = train_lm(x, y, cfg);
    REQUIRE(res.train_sse_trace.size() >= 2);
    for (std::size_t i = 1; i < res.train_sse_trace.size(); ++i)
        CHECK(res.train_sse_trace[i] < res.train_sse_trace[i - 1]);
}

TEST_CASE("training is reproducible bit for bit") {
    Rng rng(13);
    const Matrix x = random_matrix(80, 2, rng);
    Matrix y(80, 1);
    for (std::size_t r = 0; r < 80; ++r) y(r, 0) = std::sin(2.0 * x(r, 0)) + 0.3 * x(r, 1);
    TrainConfig cfg;
    cfg.n_hidden = 4;
    cfg.max_epochs = 50;
    cfg.seed = 99;
    const auto a = train_lm(x, y, cfg);
    const auto b = train_lm(x, y, cfg);
    CHECK(mlp_to_text(a.model) == mlp_to_text(b.model));
    CHECK(a.report.mse == b.report.mse);
}

TEST_CASE("train_lm rejects bad input") {
    Matrix x(5, 2), y(5, 1);
    CHECK_THROWS_AS(train_lm(x, y, TrainConfig{}), DataError);  // too few samples
    Matrix x2(20, 2), y2(20, 1);
    x2(3, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train_lm(x2, y2, TrainConfig{}), DataError);
    TrainConfig bad;
    bad.split_train = 0.5;
    bad.split_val = 0.2;
    bad.split_test = 0.2;  // sums to 0.9
    Matrix x3(20, 2), y3(20, 1);
    CHECK_THROWS_AS(train_lm(x3, y3, bad), ConfigError);
}

TEST_CASE("fit_report matches hand arithmetic") {
    Matrix y(2, 1), yh(2, 1);
    y(0, 0) = 0.0;
    y(1, 0) = 1.0;
    yh(0, 0) = 1.0;
    yh(1, 0) = 0.0;
    const auto rep = fit_report(y, yh);
    CHECK(rep.mse == Approx(1.0));
    CHECK(rep.rmse == Approx(1.0));
    REQUIRE(rep.correlation_r[0].has_value());
    CHECK(*rep.correlation_r[0] == Approx(-1.0));

    const auto same = fit_report(y, y);
    CHECK(same.mse == 0.0);
    CHECK(same.error_mean_mu == 0.0);
    CHECK(same.error_variance_delta == 0.0);
    std::size_t total = 0;
    for (auto c : same.histogram_counts) total += c;
    CHECK(total == 2);
}

TEST_CASE("zero-variance reference yields an undefined correlation marker") {
    Matrix y(4, 1, 2.0);
    Matrix yh(4, 1);
    for (std::size_t r = 0; r < 4; ++r) yh(r, 0) = 0.1 * static_cast<double>(r);
    const auto rep = fit_report(y, yh);
    CHECK_FALSE(rep.correlation_r[0].has_value());
}

TEST_CASE("error variance recovers the injected noise level") {
    Rng rng(123);
    const std::size_t n = 10000;
    Matrix y(n, 1), yh(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
        y(r, 0) = rng.uniform(-3.0, 3.0);
        yh(r, 0) = y(r, 0) + rng.gaussian(0.0, 0.1);
    }
    const auto rep = fit_report(y, yh);
    CHECK(rep.error_variance_delta == Approx(0.01).epsilon(0.20));
    std::size_t total = 0;
    for (auto c : rep.histogram_counts) total += c;
    CHECK(total == n);
    CHECK(rep.histogram_counts.size() == 30);
}

TEST_CASE("scaling round-trips in-range values") {
    Rng rng(9);
    Matrix data(50, 1);
    for (std::size_t r = 0; r < 50; ++r) data(r, 0) = rng.uniform(-7.0, 13.0);
    const ScalingAxis s = fit_scaling(data, 0);
    for (std::size_t r = 0; r < 50; ++r) {
        const double v = data(r, 0);
        CHECK(s.unscale(s.scale(v)) == Approx(v).margin(1e-12));
        CHECK(s.scale(v) >= -1.0 - 1e-12);
        CHECK(s.scale(v) <= 1.0 + 1e-12);
    }
}

TEST_CASE("model serialization round-trips exactly") {
    Rng rng(44);
    MlpRegressor m;
    m.n_in = 2;
    m.n_hidden = 3;
    m.n_out = 2;
    m.hidden_weights = random_matrix(3, 3, rng, -2.0, 2.0);
    m.output_weights = random_matrix(2, 4, rng, -2.0, 2.0);
    m.input_scaling = {ScalingAxis{0.123456789012345, 1.9}, ScalingAxis{-3.0, 0.017}};
    m.output_scaling = {ScalingAxis{1e-9, 123456.0}, ScalingAxis{0.0, 1.0}};
    const std::string text = mlp_to_text(m);
    const MlpRegressor back = mlp_from_text(text);
    CHECK(mlp_to_text(back) == text);
    CHECK(back.hidden_weights.data() == m.hidden_weights.data());
    CHECK(back.output_weights.data() == m.output_weights.data());
    CHECK_THROWS_AS(mlp_from_text("not a model"), DataError);
}

TEST_CASE("model bank requires every fault class") {
    OrbitConfig orbit;
    PlantConfig plant;
    std::map<FaultKind, std::vector<TelemetrySample>> runs;
    for (FaultKind f : all_faults())
        if (f != FaultKind::RegIgbtShort) runs[f] = simulate(orbit, plant, f, 600, 1.0);
    TrainConfig cfg;
    cfg.max_epochs = 30;
    CHECK_THROWS_WITH(build_model_bank(runs, cfg), Catch::Contains("RegIgbtShort"));

    runs[FaultKind::RegIgbtShort] = simulate(orbit, plant, FaultKind::RegIgbtShort, 300, 1.0);
    CHECK_THROWS_WITH(build_model_bank(runs, cfg), Catch::Contains("500"));
}

TEST_CASE("healthy PV current model reaches the desk-scale normalized error") {
    OrbitConfig orbit;
    PlantConfig plant;
    orbit.seed = derive_seed(1, "orbit", 0);
    plant.seed = derive_seed(1, "plant", 0);
    const auto run = simulate(orbit, plant, FaultKind::Healthy, 2001, 1.0);
    const Matrix x = detail::telemetry_inputs(run);
    const Matrix y = detail::telemetry_pv_outputs(run);
    TrainConfig cfg;
    cfg.seed = 4;
    const auto res = train_lm(x, y, cfg);

    // current-output MSE on the [-1, 1] normalized scale over the run
    const Matrix pred = predict(res.model, x);
    const double gain = res.model.output_scaling[1].gain;
    double mse = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double e = (y(r, 1) - pred(r, 1)) * gain;
        mse += e * e;
    }
    mse /= static_cast<double>(x.rows());
    CHECK(mse <= 1e-3);  // measured ~6e-4 at the default sensor noise
}

TEST_CASE("model bank is deterministic and exposes residual-order models") {
    OrbitConfig orbit;
    PlantConfig plant;
    std::map<FaultKind, std::vector<TelemetrySample>> runs;
    for (FaultKind f : all_faults()) {
        orbit.seed = 100 + static_cast<std::uint64_t>(f);
        plant.seed = 200 + static_cast<std::uint64_t>(f);
        runs[f] = simulate(orbit, plant, f, 700, 1.0);
    }
    TrainConfig cfg;
    cfg.max_epochs = 40;
    const ModelBank a = build_model_bank(runs, cfg);
    const ModelBank b = build_model_bank(runs, cfg);
    for (const auto& [name, rep] : a.reports) CHECK(rep.mse == b.reports.at(name).mse);

    const auto models = residual_models(a);
    REQUIRE(models.size() == 5);
    CHECK(models[0] == &a.healthy_system);
    CHECK(a.reports.size() == 8);
}

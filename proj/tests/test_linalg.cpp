/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <catch2/catch.hpp>

#include "epsdiag/linalg.hpp"
#include "epsdiag/rng.hpp"

using namespace epsdiag;

TEST_CASE("solve_spd solves a known system") {
    Matrix a(2, 2);
    a(0, 0) = 4.0;
    a(0, 1) = 1.0;
    a(1, 0) = 1.0;
    a(1, 1) = 3.0;
    std::vector<double> b = {1.0, 2.0};
    std::vector<double> x;
    REQUIRE(solve_spd(a, b, x));
    // residual check
    CHECK(a(0, 0) * x[0] + a(0, 1) * x[1] == Approx(1.0).margin(1e-12));
    CHECK(a(1, 0) * x[0] + a(1, 1) * x[1] == Approx(2.0).margin(1e-12));
}

TEST_CASE("solve_spd reports indefinite matrices") {
    Matrix a(2, 2);
    a(0, 0) = 0.0;
    a(1, 1) = 1.0;
    std::vector<double> b = {1.0, 1.0}, x;
    CHECK_FALSE(solve_spd(a, b, x));
}

TEST_CASE("jacobi_eigh reproduces a hand-computed 2x2 spectrum") {
    Matrix a(2, 2);
    a(0, 0) = 2.0;
    a(0, 1) = 1.0;
    a(1, 0) = 1.0;
    a(1, 1) = 2.0;
    auto eig = jacobi_eigh(a);
    CHECK(eig.values[0] == Approx(3.0).margin(1e-12));
    CHECK(eig.values[1] == Approx(1.0).margin(1e-12));
    // leading eigenvector is (1,1)/sqrt(2) up to sign
    const double v0 = eig.vectors(0, 0), v1 = eig.vectors(1, 0);
    CHECK(std::abs(v0) == Approx(1.0 / std::sqrt(2.0)).margin(1e-12));
    CHECK(v0 * v1 > 0.0);
}

TEST_CASE("jacobi_eigh columns are orthonormal and reconstruct the matrix") {
    Rng rng(42);
    const std::size_t n = 6;
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            a(i, j) = rng.uniform(-1.0, 1.0);
            a(j, i) = a(i, j);
        }
    auto eig = jacobi_eigh(a);

    for (std::size_t c1 = 0; c1 < n; ++c1)
        for (std::size_t c2 = 0; c2 < n; ++c2) {
            double dot = 0.0;
            for (std::size_t r = 0; r < n; ++r) dot += eig.vectors(r, c1) * eig.vectors(r, c2);
            CHECK(dot == Approx(c1 == c2 ? 1.0 : 0.0).margin(1e-9));
        }

    // A = V diag(w) V^T
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < n; ++c)
                acc += eig.vectors(i, c) * eig.values[c] * eig.vectors(j, c);
            CHECK(acc == Approx(a(i, j)).margin(1e-9));
        }

    for (std::size_t c = 1; c < n; ++c) CHECK(eig.values[c - 1] >= eig.values[c]);
}

TEST_CASE("rng streams are deterministic and seed-separated") {
    Rng a(123), b(123), c(124);
    for (int i = 0; i < 100; ++i) {
        const double va = a.gaussian();
        CHECK(va == b.gaussian());
        (void)c.next_u64();
    }
    CHECK(derive_seed(1, "stage", 0) != derive_seed(1, "stage", 1));
    CHECK(derive_seed(1, "stage") != derive_seed(2, "stage"));
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(gaussian_at(1, 2, 3, 0) == gaussian_at(1, 2, 3, 0));
    CHECK(gaussian_at(1, 2, 3, 0) != gaussian_at(1, 2, 3, 1));
}

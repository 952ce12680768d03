#include <cmath>
#include <random>

#include "doctest.h"
#include "edaflow/errors.hpp"
#include "edaflow/qp.hpp"
#include "qp_oracle.hpp"

using namespace edaflow;

using oracle::brute_force;
using oracle::random_psd;

TEST_CASE("separable constrained example") {
    DenseMatrix H(2, 2);
    H(0, 0) = H(1, 1) = 1;
    std::vector<double> f{-1, 1};
    auto s = solve_nonneg_qp(H, f, {true, true});
    CHECK(s.x[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.x[1] == 0.0);
    CHECK(s.kkt_residual <= 1e-8);
}

TEST_CASE("unconstrained Newton step") {
    DenseMatrix H(2, 2);
    H(0, 0) = H(1, 1) = 2;
    std::vector<double> f{-2, -4};
    auto s = solve_nonneg_qp(H, f, {false, false});
    CHECK(s.x[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.x[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("matches exhaustive active-set enumeration") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + trial % 8;
        auto H = random_psd(rng, n, n + 2);
        std::vector<double> f(n);
        for (auto& v : f) v = 3 * g(rng);
        std::vector<bool> nonneg(n, true);
        if (trial % 3 == 0) nonneg[0] = false;
        auto want = brute_force(H, f, nonneg);
        auto got = solve_nonneg_qp(H, f, nonneg);
        REQUIRE(want.size() == n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(got.x[i] - want[i]) <= 1e-6);
        CHECK(kkt_residual(H, f, nonneg, got.x, 1e-8) <= 1e-8);
    }
}

TEST_CASE("rank-deficient PSD problems still satisfy KKT") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 4 + trial % 10;
        auto H = random_psd(rng, n, n / 2);
        for (std::size_t i = 0; i < n; ++i) H(i, i) += 1e-3;
        std::vector<double> f(n);
        for (auto& v : f) v = g(rng);
        std::vector<bool> nonneg(n, true);
        auto s = solve_nonneg_qp(H, f, nonneg);
        for (double v : s.x) CHECK(v >= 0.0);
        CHECK(s.kkt_residual <= 1e-8);
    }
}

TEST_CASE("negative curvature is reported") {
    DenseMatrix H(2, 2);
    H(0, 0) = 1;
    H(1, 1) = 1;
    H(0, 1) = H(1, 0) = -3;
    std::vector<double> f{-1, -1};
    CHECK_THROWS_AS(solve_nonneg_qp(H, f, {true, true}), SolverError);
    DenseMatrix N(1, 1);
    N(0, 0) = -1;
    std::vector<double> f1{-1};
    CHECK_THROWS_AS(solve_nonneg_qp(N, f1, {true}), SolverError);
}

TEST_CASE("bad shapes are rejected") {
    DenseMatrix H(2, 2);
    H(0, 0) = H(1, 1) = 1;
    std::vector<double> f{1, 2, 3};
    CHECK_THROWS_AS(solve_nonneg_qp(H, f, {true, true}), ParamError);
    std::vector<double> f2{1, 2};
    CHECK_THROWS_AS(solve_nonneg_qp(H, f2, {true}), ParamError);
    H(0, 1) = 1;
    CHECK_THROWS_AS(solve_nonneg_qp(H, f2, {true, true}), ParamError);
}

TEST_CASE("iteration cap reports the residual") {
    std::mt19937_64 rng(1);
    auto H = random_psd(rng, 8, 10);
    std::vector<double> f(8, -1.0);
    QpOptions opt;
    opt.max_iter = 1;
    try {
        solve_nonneg_qp(H, f, std::vector<bool>(8, true), opt);
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        CHECK(e.residual() > 0.0);
    }
}

TEST_CASE("kkt residual detects violations") {
    DenseMatrix H(1, 1);
    H(0, 0) = 1;
    std::vector<double> f{-1};
    std::vector<double> opt{1.0}, off{0.0}, neg{-0.5};
    CHECK(kkt_residual(H, f, {true}, opt, 1e-8) == doctest::Approx(0.0));
    CHECK(kkt_residual(H, f, {true}, off, 1e-8) > 0.5);
    CHECK(kkt_residual(H, f, {true}, neg, 1e-8) > 0.4);
}

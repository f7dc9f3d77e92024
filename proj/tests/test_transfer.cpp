#include <catch2/catch_amalgamated.hpp>

#include "chainflux/disorder.hpp"
#include "chainflux/transfer.hpp"

#include <cmath>
#include <vector>

using namespace chainflux;

namespace {

// Unrenormalized oracle for small n.
std::vector<double> direct_recursion(double v0, double vm1, double w,
                                     const std::vector<double>& b) {
    std::vector<double> d{vm1, v0}; // d[k+1] = D_k
    for (double bk : b)
        d.push_back((2.0 - kPi * kPi * w * w * (1.0 + bk)) * d.back() - d[d.size() - 2]);
    return d;
}

std::vector<double> random_b(rng::u64 seed, std::size_t n, double halfwidth = 0.5) {
    const auto dist = MassDisorder::uniform_symmetric(halfwidth);
    const rng::RandomStream s(seed, rng::StreamTag::masses);
    std::vector<double> b(n);
    for (std::size_t k = 0; k < n; ++k) b[k] = dist.quantile(s.u01(k));
    return b;
}

} // namespace

TEST_CASE("transfer matrix entries and determinant") {
    const auto a0 = transfer_matrix(0.0, 0.3);
    CHECK(a0.a11 == 2.0);
    CHECK(a0.a12 == -1.0);
    CHECK(a0.a21 == 1.0);
    CHECK(a0.a22 == 0.0);

    const auto a = transfer_matrix(0.1, 0.0);
    CHECK(a.a11 == Catch::Approx(1.9013044).epsilon(1e-6));
    for (double w : {0.0, 0.05, 0.3, 1.0})
        for (double b : {-0.5, 0.0, 0.5}) CHECK(transfer_matrix(w, b).det() == 1.0);
}

TEST_CASE("step_product zero frequency cube") {
    auto p = ScaledMatrixProduct::identity();
    for (int i = 0; i < 3; ++i) step_product(p, transfer_matrix(0.0, 0.0));
    const double s = std::exp(p.log_scale());
    CHECK(s * p.m[0][0] == Catch::Approx(4.0).epsilon(1e-14));
    CHECK(s * p.m[0][1] == Catch::Approx(-3.0).epsilon(1e-14));
    CHECK(s * p.m[1][0] == Catch::Approx(3.0).epsilon(1e-14));
    CHECK(s * p.m[1][1] == Catch::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("single factor keeps bookkeeping consistent") {
    const auto a = transfer_matrix(0.07, 0.21);
    auto p = ScaledMatrixProduct::identity();
    step_product(p, a);
    const double s = std::exp(p.log_scale());
    CHECK(s * p.m[0][0] == Catch::Approx(a.a11).epsilon(1e-15));
    CHECK(s * p.m[1][1] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("determinant conservation over long products") {
    const auto b = random_b(901, 10000);
    // moderate w: direct det of the scaled factor is still meaningful
    auto p = ScaledMatrixProduct::identity();
    for (double bk : b) step_product(p, transfer_matrix(0.05, bk));
    const double det_true = p.det_scaled() * std::exp(2.0 * p.log_scale());
    CHECK(det_true == Catch::Approx(1.0).epsilon(1e-8));

    // all w up to 1: the rotation-triangular form tracks det multiplicatively
    for (double w : {0.05, 0.1, 0.5, 1.0}) {
        const auto wp = wronskian_product(w, [&](std::uint64_t k) { return b[k]; }, b.size());
        CHECK(wp.det() == Catch::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("log-scale guard trips loudly") {
    auto p = ScaledMatrixProduct::identity(30.0);
    CHECK_THROWS_AS(
        [&] {
            for (int i = 0; i < 100000; ++i) step_product(p, transfer_matrix(1.5, 0.4));
        }(),
        numeric_guard_error);
}

TEST_CASE("d_recursion matches the direct recursion to 1e-12") {
    const std::size_t n = 50;
    for (double w : {0.02, 0.1, 0.3}) {
        const auto b = random_b(77, n);
        const auto oracle = direct_recursion(1.0, 0.0, w, b);
        std::size_t i = 0;
        auto st = d_recursion(1.0, 0.0, w, [&](std::uint64_t k) { return b[k]; }, n);
        CHECK(st.value(true) == Catch::Approx(oracle[n + 1]).epsilon(1e-12));
        CHECK(st.value(false) == Catch::Approx(oracle[n]).epsilon(1e-12));
        (void)i;
    }
}

TEST_CASE("zero disorder closed forms") {
    // w = 0: D_n = n + 1
    auto st = d_recursion(1.0, 0.0, 0.0, [](std::uint64_t) { return 0.0; }, 1000);
    CHECK(st.value(true) == Catch::Approx(1001.0).epsilon(1e-12));

    // Chebyshev: D_n = sin(pi theta (n+1)) / sin(pi theta)
    for (double w : {0.02, 0.1}) {
        const double th = std::acos(1.0 - kPi * kPi * w * w / 2.0) / kPi;
        for (std::uint64_t n : {3ULL, 10ULL, 137ULL, 1000ULL}) {
            auto s = d_recursion(1.0, 0.0, w, [](std::uint64_t) { return 0.0; }, n);
            const double expect = std::sin(kPi * th * (n + 1.0)) / std::sin(kPi * th);
            CHECK(s.value(true) == Catch::Approx(expect).margin(std::fabs(expect) * 1e-10 + 1e-12));
        }
    }
}

TEST_CASE("e2 initial data gives (D_1, D_0) = (-1, 0)") {
    auto st = d_recursion(0.0, 1.0, 0.123, [](std::uint64_t) { return 0.37; }, 1);
    CHECK(st.value(true) == Catch::Approx(-1.0).epsilon(1e-15));
    CHECK(st.value(false) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("linearity in the initial vector") {
    const auto b = random_b(5, 200);
    const auto bs = [&](std::uint64_t k) { return b[k]; };
    for (double alpha : {-1.0, 2.0}) {
        auto base = d_recursion(1.0, 0.4, 0.08, bs, 200);
        auto scaled = d_recursion(alpha * 1.0, alpha * 0.4, 0.08, bs, 200);
        CHECK(scaled.value(true) == Catch::Approx(alpha * base.value(true)).epsilon(1e-12));
    }
}

TEST_CASE("wronskian identities") {
    // n = 0
    DPairState e1, e2;
    e2.d_cur = 0.0;
    e2.d_prev = 1.0;
    CHECK(wronskian(e1, e2) == 1.0);

    // n = 1, w = 0.1, b = 0
    const double w = 0.1;
    auto s1 = d_recursion(1.0, 0.0, w, [](std::uint64_t) { return 0.0; }, 1);
    auto s2 = d_recursion(0.0, 1.0, w, [](std::uint64_t) { return 0.0; }, 1);
    CHECK(wronskian(s1, s2) == Catch::Approx(1.0).epsilon(1e-14));

    // long product, moderate scale regime for the raw two-state form
    const auto b = random_b(31337, 10000);
    const auto bs = [&](std::uint64_t k) { return b[k]; };
    auto l1 = d_recursion(1.0, 0.0, 0.05, bs, b.size());
    auto l2 = d_recursion(0.0, 1.0, 0.05, bs, b.size());
    CHECK(wronskian(l1, l2) == Catch::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("wronskian product exposes matching matrix entries") {
    const auto b = random_b(99, 300);
    const auto bs = [&](std::uint64_t k) { return b[k]; };
    const double w = 0.12;
    const auto wp = wronskian_product(w, bs, b.size());
    auto s1 = d_recursion(1.0, 0.0, w, bs, b.size());
    auto s2 = d_recursion(0.0, 1.0, w, bs, b.size());
    CHECK(wp.d_n_e1() == Catch::Approx(s1.value(true)).epsilon(1e-9));
    CHECK(wp.d_nm1_e1() == Catch::Approx(s1.value(false)).epsilon(1e-9));
    CHECK(wp.d_n_e2() == Catch::Approx(s2.value(true)).epsilon(1e-9));
    CHECK(wp.d_nm1_e2() == Catch::Approx(s2.value(false)).epsilon(1e-9));
}

#include <catch2/catch_amalgamated.hpp>

#include "chainflux/circlemap.hpp"
#include "chainflux/disorder.hpp"

#include <cmath>
#include <vector>

using namespace chainflux;

namespace {

std::vector<double> random_b(rng::u64 seed, std::size_t n, double halfwidth = 0.5) {
    const auto dist = MassDisorder::uniform_symmetric(halfwidth);
    const rng::RandomStream s(seed, rng::StreamTag::masses);
    std::vector<double> b(n);
    for (std::size_t k = 0; k < n; ++k) b[k] = dist.quantile(s.u01(k));
    return b;
}

// Mobius action of the transfer matrix on the extended reals.
double mobius_transfer(double w, double b, double xi) {
    const double a11 = 2.0 - kPi * kPi * w * w * (1.0 + b);
    if (std::isinf(xi)) return a11;
    if (xi == 0.0) return std::numeric_limits<double>::infinity();
    return (a11 * xi - 1.0) / xi;
}

} // namespace

TEST_CASE("theta expansion and domain") {
    // defining formula, evaluated independently through acos
    for (double w : {0.02, 0.1, 0.2}) {
        const double via_acos = std::acos(1.0 - kPi * kPi * w * w / 2.0) / kPi;
        CHECK(theta(w) == Catch::Approx(via_acos).epsilon(1e-13));
    }
    CHECK(theta(0.1) == Catch::Approx(0.100415868).epsilon(1e-8));
    // theta / w -> 1 and the w^3 series coefficient is pi^2/24
    for (double w : {1e-3, 1e-2}) {
        const double t = theta(w);
        CHECK(t / w == Catch::Approx(1.0 + kPi * kPi * w * w / 24.0).epsilon(1e-8));
    }
    CHECK_THROWS_AS(theta(2.0 / kPi), config_error);
    CHECK_THROWS_AS(theta(0.7), config_error);
}

TEST_CASE("g and its inverse") {
    const CircleMap map(0.05);
    CHECK(map.g(0.0) == 0.0);
    CHECK(map.g_inv(0.0) == 0.0);
    CHECK(map.g_inv(std::numeric_limits<double>::infinity()) == Catch::Approx(map.theta()));
    // round trip over the torus
    const rng::RandomStream s(321, rng::StreamTag::calibration);
    for (int i = 0; i < 1000; ++i) {
        const double x = s.u01(static_cast<rng::u64>(i));
        const double back = map.g_inv(map.g(x));
        CHECK(torus_distance(back, x) < 1e-12);
    }
    // tilted directions used by the Rubin-Greer sandwich
    CHECK(map.g_inv(1.0) == Catch::Approx(0.5 + map.theta() / 2.0).epsilon(1e-12));
    CHECK(map.g_inv(-1.0) == Catch::Approx(map.theta() / 2.0).epsilon(1e-12));
}

TEST_CASE("phi values") {
    const CircleMap map(0.1);
    for (double b : {-0.5, -0.1, 0.3, 0.5}) CHECK(map.phi(0.0, b) == 0.0);
    for (double x : {0.1, 0.33, 0.77}) CHECK(map.phi(x, 0.0) == 0.0);
    CHECK(map.phi(0.5, 0.5) == Catch::Approx(0.0502077).epsilon(1e-5));
    // leading term w b sin^2(pi x)
    const CircleMap small(0.002);
    for (double x : {0.2, 0.5, 0.9})
        CHECK(small.phi(x, 0.4) ==
              Catch::Approx(0.002 * 0.4 * phi_shape(x)).epsilon(2e-2));
}

TEST_CASE("f_b is the conjugated Mobius action") {
    for (double w : {0.02, 0.1, 0.2}) {
        const CircleMap map(w);
        const rng::RandomStream s(9, rng::StreamTag::calibration);
        for (int i = 0; i < 300; ++i) {
            const double x = s.u01(static_cast<rng::u64>(i));
            const double b = -0.5 + s.u01(static_cast<rng::u64>(i), 1);
            const double via_mobius = map.g_inv(mobius_transfer(w, b, map.g(x)));
            const double direct = torus_reduce(map.f(x, b));
            CHECK(torus_distance(via_mobius, direct) < 1e-11);
        }
    }
}

TEST_CASE("f_b inverse identity") {
    const CircleMap map(0.05);
    const rng::RandomStream s(17, rng::StreamTag::calibration);
    for (int i = 0; i < 1000; ++i) {
        const double x = s.u01(static_cast<rng::u64>(i));
        const double b = -0.5 + s.u01(static_cast<rng::u64>(i), 1);
        CHECK(torus_distance(map.f_inv(map.f(x, b), b), x) < 1e-12);
    }
    // zero noise is the pure shift
    for (double x : {0.0, 0.3, 0.9}) CHECK(map.f(x, 0.0) == Catch::Approx(x + map.theta()));
}

TEST_CASE("step increments stay in the stated band at w = 0.02") {
    const CircleMap map(0.02);
    double lo = 1.0, hi = 0.0;
    for (int ix = 0; ix <= 200; ++ix)
        for (int ib = 0; ib <= 40; ++ib) {
            const double x = ix / 200.0;
            const double b = -0.5 + ib / 40.0;
            const double inc = map.f(x, b) - x;
            lo = std::fmin(lo, inc);
            hi = std::fmax(hi, inc);
        }
    CHECK(lo >= 0.0099);
    CHECK(hi <= 0.0302);
    CHECK(lo > 0.0);
}

TEST_CASE("shape function values") {
    CHECK(phi_shape(0.0) == 0.0);
    CHECK(psi_shape(0.0) == 0.0);
    CHECK(s_shape(0.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(r_shape(0.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(phi_shape(0.25) == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(psi_shape(0.25) == Catch::Approx(kPi / 4.0).epsilon(1e-12));
    CHECK(s_shape(0.25) == Catch::Approx(-kPi / 2.0).epsilon(1e-12));
    CHECK(r_shape(0.25) == Catch::Approx(0.0).margin(1e-12));
    // integral of r over the torus = pi^2 / 8
    const int N = 20000;
    double acc = 0.0;
    for (int i = 0; i < N; ++i) acc += r_shape((i + 0.5) / N);
    CHECK(acc / N == Catch::Approx(kPi * kPi / 8.0).epsilon(1e-10));
}

TEST_CASE("zero-noise chain is the rigid rotation") {
    const CircleMap map(0.05);
    const auto zero = [](std::uint64_t) { return 0.0; };
    const auto st = evolve_chain(map, 0.3, zero, 1000);
    CHECK(torus_distance(st.x.v, torus_reduce(0.3 + 1000.0 * map.theta())) < 1e-9);
    CHECK(st.x_lifted == Catch::Approx(0.3 + 1000.0 * map.theta()).epsilon(1e-12));
    CHECK(st.log_gamma_s_sum == 0.0);
    CHECK(st.log_gamma_r_sum == 0.0);
    // Gamma reproduces the zero-noise D_n through the representation
    const auto rec = reconstruct_d(1.0, 0.0, map, zero, 500);
    const double expect = std::sin(kPi * map.theta() * 501.0) / std::sin(kPi * map.theta());
    CHECK(rec.value() == Catch::Approx(expect).epsilon(1e-9));
}

TEST_CASE("monotone lift with positive increments") {
    const CircleMap map(0.02);
    const auto b = random_b(55, 5000);
    double prev = 0.2;
    std::uint64_t count = 0;
    const auto st = evolve_chain(
        map, 0.2, [&](std::uint64_t k) { return b[k]; }, b.size(), GammaMode::none,
        [&](std::uint64_t l, double) { ++count; (void)l; });
    CHECK(count == b.size() + 1);
    const double n = static_cast<double>(b.size());
    CHECK(st.x_lifted - 0.2 > n * 0.5 * 0.02 * 0.99);
    CHECK(st.x_lifted - 0.2 < n * 1.5 * 0.02 * 1.01);
    (void)prev;
}

TEST_CASE("representation identity against the recursion") {
    // n values with both even and odd winding counts of the lift
    for (double w : {0.01, 0.05, 0.2}) {
        for (std::uint64_t n : {150ULL, 200ULL, 271ULL}) {
            const CircleMap map(w);
            const auto b = random_b(7321 + static_cast<rng::u64>(w * 1000) + n, n);
            const auto bs = [&](std::uint64_t k) { return b[k]; };
            // e1
            auto rec = reconstruct_d(1.0, 0.0, map, bs, n);
            auto dir = d_recursion(1.0, 0.0, w, bs, n);
            CHECK(rec.sign == (dir.d_cur > 0 ? 1.0 : -1.0));
            CHECK(rec.log_abs == Catch::Approx(dir.log_abs(true)).margin(1e-9));
            // e2 via the shift construction
            rec = reconstruct_d(0.0, 1.0, map, bs, n);
            dir = d_recursion(0.0, 1.0, w, bs, n);
            CHECK(rec.sign == (dir.d_cur > 0 ? 1.0 : -1.0));
            CHECK(rec.log_abs == Catch::Approx(dir.log_abs(true)).margin(1e-9));
        }
    }
}

TEST_CASE("exponential form approximates the exact product") {
    const double w = 0.05;
    const CircleMap map(w);
    const std::uint64_t n = 2000;
    const auto b = random_b(4242, n);
    const auto st = evolve_chain(map, map.theta(), [&](std::uint64_t k) { return b[k]; }, n);
    const double resid =
        std::fabs(st.log_gamma_exact - (st.log_gamma_s_sum + st.log_gamma_r_sum));
    CHECK(resid < 5.0 * w * w * w * static_cast<double>(n)); // O(w^3 n) with generous constant
    CHECK(resid > 0.0);
}

TEST_CASE("joint evolution") {
    const double w = 0.04;
    const CircleMap map(w);
    // zero noise: both chains are rigid rotations theta apart
    const auto zero = [](std::uint64_t) { return 0.0; };
    auto js = evolve_joint(map, zero, 500);
    CHECK(js.lifted_diff == Catch::Approx(map.theta()).epsilon(1e-12));
    CHECK(js.m_n == 0.0);
    CHECK(js.order_preserved);
    // noisy: order preserved, residuals bounded
    for (rng::u64 seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
        const auto b = random_b(seed, 10000);
        js = evolve_joint(map, [&](std::uint64_t k) { return b[k]; }, b.size());
        CHECK(js.order_preserved);
        CHECK(js.lifted_diff > 0.0);
        CHECK(std::fabs(js.l_n) < 1.0 + 2.0 * w * w * 10000.0);
        CHECK(std::fabs(js.k_n) < 1.0 + 2.0 * (w + w * w * 10000.0));
    }
}

TEST_CASE("near-martingale and diffusion floor by quadrature") {
    const double w = 0.02;
    const CircleMap map(w);
    const auto dist = MassDisorder::uniform_symmetric(0.5);
    double worst_mean = 0.0;
    for (int i = 0; i < 64; ++i) {
        const double x = i / 64.0;
        worst_mean = std::fmax(worst_mean, std::fabs(mean_step_minus_w(map, dist, x)));
    }
    CHECK(worst_mean < 3.0 * w * w); // |E[dX - w | x]| = O(w^2), constant ~ pi^2/24 + shapes
    for (double x : {0.1, 0.25, 0.5, 0.9}) {
        const double m2 = second_moment_step_minus_w(map, dist, x);
        CHECK(m2 > 1e-4 * w * w); // alpha(0.1) > 0
        CHECK(m2 < 1.0 * w * w);  // beta
    }
}

TEST_CASE("degenerate start at zero is the e2 limit") {
    const CircleMap map(0.05);
    const auto b = random_b(11, 50);
    // starting at 0 must not throw: first factor is the limit 1
    const auto st = evolve_chain(map, 0.0, [&](std::uint64_t k) { return b[k]; }, 50);
    CHECK(std::isfinite(st.log_gamma_exact));
}

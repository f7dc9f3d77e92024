#include <catch2/catch_amalgamated.hpp>

#include "chainflux/spectral.hpp"

#include <cmath>

using namespace chainflux;

TEST_CASE("lambda normalization and modulus bound") {
    const CircleMap map(0.04);
    const auto dist = MassDisorder::uniform_symmetric(0.5);
    for (int i = 0; i < 64; ++i) {
        const double y = i / 64.0;
        CHECK(std::abs(lambda_k(0.0, y, map, dist)) == Catch::Approx(1.0).epsilon(1e-12));
        for (double z : {0.01, 0.1, 0.5, 2.0, 17.0})
            CHECK(std::abs(lambda_k(z, y, map, dist)) <= 1.0 + 1e-12);
    }
    // nonzero h keeps lambda(0) = 1 through E[B] = 0
    const TorusFunction h = [](double x) { return std::cos(2.0 * kPi * x); };
    CHECK(std::abs(lambda_k(0.0, 0.3, map, dist, h)) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("small-z modulus expansion") {
    const CircleMap map(0.01);
    const auto dist = MassDisorder::uniform_symmetric(0.5);
    for (double y : {0.2, 0.45, 0.8}) {
        const double target = -2.0 * kPi * kPi * phi_shape(y) * phi_shape(y) * dist.moment2();
        const double z = 1e-3;
        const double ratio = std::log(std::abs(lambda_k(z, y, map, dist))) / (z * z);
        CHECK(ratio == Catch::Approx(target).epsilon(0.05));
    }
}

TEST_CASE("quadrature node doubling is converged") {
    const CircleMap map(0.03);
    const auto dist = MassDisorder::truncated_quadratic(0.5);
    for (double z : {0.3, 1.7})
        for (double y : {0.15, 0.6}) {
            const auto a = lambda_k(z, y, map, dist, {}, 64);
            const auto b = lambda_k(z, y, map, dist, {}, 128);
            CHECK(std::abs(a - b) < 1e-12);
        }
}

TEST_CASE("big lambda basics") {
    const CircleMap map(0.05);
    const auto dist = MassDisorder::uniform_symmetric(0.5);
    const auto lp0 = big_lambda(0.0, 0.3, 50, map, dist);
    CHECK(lp0.log_mod == Catch::Approx(0.0).margin(1e-10));
    // Hermitian symmetry via explicit conjugate evaluation
    const auto lp = big_lambda(3.0, 0.3, 50, map, dist);
    const auto lm = big_lambda(-3.0, 0.3, 50, map, dist);
    CHECK(lp.log_mod == Catch::Approx(lm.log_mod).margin(1e-12));
    CHECK(lp.phase == Catch::Approx(-lm.phase).margin(1e-12));
    // modulus falls with |xi| in the Gaussian window
    const auto l1 = big_lambda(1.0, 0.3, 400, map, dist);
    const auto l2 = big_lambda(2.0, 0.3, 400, map, dist);
    CHECK(l2.log_mod < l1.log_mod);
    CHECK(l1.log_mod < 0.0);
}

TEST_CASE("synthesis identity and constants") {
    const CircleMap map(0.05);
    const auto dist = MassDisorder::uniform_symmetric(0.5);
    // u = 1: only xi = 0 survives, S_{y,n} 1 = 1
    FourierMultiplier one;
    one.cutoff = 2;
    one.coef = {0.0, 0.0, 1.0, 0.0, 0.0};
    const auto res = s_yn_apply(one, 0.3, 100, map, dist);
    for (double v : res.values) CHECK(v == Catch::Approx(1.0).margin(1e-9));

    // n = 0 returns the (truncated) bump itself: grid peak ~ sum of coef
    const auto bump = bump_multiplier(0.05 * 0.05, 60);
    const auto id = s_yn_apply(bump, 0.3, 0, map, dist, 2048, 1e-2);
    double expect_peak = 0.0;
    for (int xi = -bump.cutoff; xi <= bump.cutoff; ++xi) expect_peak += bump.at(xi).real();
    // the grid can sit half a step off the exact peak
    CHECK(id.sup_abs == Catch::Approx(expect_peak).epsilon(2e-3));
    // and the peak sits at x = y
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < id.values.size(); ++i)
        if (id.values[i] > id.values[argmax]) argmax = i;
    CHECK(torus_distance(id.grid[argmax], 0.3) < 2.0 / 2048.0);
}

TEST_CASE("cutoff insufficiency is reported with a suggestion") {
    const CircleMap map(0.05);
    const auto dist = MassDisorder::uniform_symmetric(0.5);
    const auto bump = bump_multiplier(0.0025, 8);
    CHECK_THROWS_AS(s_yn_apply(bump, 0.3, 8, map, dist, 256, 1e-12), config_error);
}

TEST_CASE("kernel bound shape: sup S_{y,n} u ~ 1/(w sqrt n)") {
    const CircleMap map(0.05);
    const auto dist = MassDisorder::uniform_symmetric(0.5);
    const auto bump = bump_multiplier(0.0025, 220);
    const auto r100 = s_yn_apply(bump, 0.3, 100, map, dist, 512);
    const auto r400 = s_yn_apply(bump, 0.3, 400, map, dist, 512);
    // quadrupling n roughly halves the sup
    CHECK(r400.sup_abs / r100.sup_abs == Catch::Approx(0.5).margin(0.2));
    CHECK(r100.sup_abs < 8.0 / (0.05 * 10.0));
}

TEST_CASE("empirical density: deterministic rotation is a point mass") {
    // vanishing disorder: all mass lands in the bin of x0 + n theta
    const auto dist = MassDisorder::uniform_symmetric(1e-12);
    const double w = 0.05;
    const std::uint64_t n = 100;
    const auto dc = empirical_density_check(0.37, w, n, 20000, dist, 5);
    std::uint64_t nonzero_bins = 0;
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < dc.fine_hist.size(); ++i) {
        if (dc.fine_hist[i] > 0) ++nonzero_bins;
        if (dc.fine_hist[i] > dc.fine_hist[argmax]) argmax = i;
    }
    CHECK(nonzero_bins == 1);
    const double target = torus_reduce(0.37 + static_cast<double>(n) * theta(w));
    CHECK(torus_distance((argmax + 0.5) / static_cast<double>(dc.fine_bins), target) <
          1.0 / dc.fine_bins);
}

TEST_CASE("empirical density spreads to a near-uniform profile at w^2 n = 1") {
    const auto dist = MassDisorder::uniform_symmetric(0.5);
    const double w = 0.05;
    const std::uint64_t n = 400; // w^2 n = 1
    const auto dc = empirical_density_check(0.3, w, n, 200000, dist, 5);
    CHECK(dc.sup_density < 8.0);     // K / (w sqrt n) with w sqrt n = 1
    CHECK(dc.inf_density > 1e-3);    // strictly positive floor
    CHECK(dc.fine_bins >= 100);
}

TEST_CASE("gaussian window at small wn") {
    const auto dist = MassDisorder::uniform_symmetric(0.5);
    const double w = 0.01;
    const std::uint64_t n = 50; // wn = 0.5
    const auto dc = empirical_density_check(0.0, w, n, 50000, dist, 5);
    // mass concentrated near x0 + wn within a C w sqrt(n) band
    double mass_near = 0.0;
    const double center = torus_reduce(0.0 + static_cast<double>(n) * w);
    for (std::size_t i = 0; i < dc.fine_bins; ++i) {
        const double x = (i + 0.5) / static_cast<double>(dc.fine_bins);
        if (torus_distance(x, center) < 8.0 * w * std::sqrt(static_cast<double>(n)))
            mass_near += static_cast<double>(dc.fine_hist[i]);
    }
    CHECK(mass_near / static_cast<double>(dc.samples) > 0.999);
}

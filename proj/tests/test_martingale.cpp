#include <catch2/catch_amalgamated.hpp>

#include "chainflux/martingale.hpp"

#include <cmath>

using namespace chainflux;

TEST_CASE("kappa_m values and scaling identity") {
    CHECK(kappa_m(0.0, 1.0) == 0.0);
    CHECK(kappa_m(0.0, 0.37) == 0.0);
    CHECK(kappa_m(1.0, 1.0) == Catch::Approx(std::exp(1.0) - 2.0).epsilon(1e-14));
    // kappa_m(t) m^2 = kappa_1(t m)
    for (double m : {0.1, 0.5, 2.0})
        for (double t : {-3.0, -0.2, 0.1, 1.7})
            CHECK(kappa_m(t, m) * m * m == Catch::Approx(kappa_m(t * m, 1.0)).margin(1e-12));
    // kappa_m(t) >= t^2/2 for t > 0 (convexity of exp)
    for (double t = 0.05; t < 3.0; t += 0.05) CHECK(kappa_m(t, 1.0) >= t * t / 2.0);
    // upper bound of the display
    for (double t : {-1.0, -0.3, 0.4, 1.1}) {
        const double m = 0.8;
        CHECK(kappa_m(t, m) <=
              t * t / 2.0 + m / 6.0 * std::exp(m * std::fabs(t)) * std::pow(std::fabs(t), 3) + 1e-12);
    }
}

TEST_CASE("bounds at t = 0 and degenerate budgets") {
    CHECK(freedman_bound(0.0, 1.0, 100.0) == 1.0);
    CHECK(azuma_bound(0.0, 1.0, 100) == 1.0);
    CHECK(freedman_bound(0.7, 0.3, 0.0) == 1.0);
    // freedman <= azuma when v_n <= m^2 n and |t| small
    const double m = 0.5;
    const std::uint64_t n = 100;
    for (double t = -0.1; t <= 0.1; t += 0.02)
        CHECK(freedman_bound(t, m, 0.8 * m * m * n) <= azuma_bound(t, m, n) * (1.0 + 1e-9));
}

TEST_CASE("azuma tail values") {
    CHECK(azuma_tail(1e-9, 1.0, 10) == 1.0); // capped
    const double r = 0.5 * 100.0;            // r = m n with m = 0.5, n = 100
    CHECK(azuma_tail(r, 0.5, 100) == Catch::Approx(2.0 * std::exp(-50.0)).epsilon(1e-12));
}

TEST_CASE("exponential bound harness on the s-martingale") {
    const double w = 0.05;
    const std::uint64_t n = 400;
    SMartingaleSampler sm{CircleMap(w), MassDisorder::uniform_symmetric(0.5),
                          rng::RandomStream(1234, rng::StreamTag::chain_noise), n, theta(w)};
    const double m = sm.increment_bound();
    const double vn = sm.variance_budget();
    const double tbase = 1.0 / (m * std::sqrt(static_cast<double>(n)));
    const std::vector<double> tg{-2.0 * tbase, -tbase, -0.5 * tbase,
                                 0.5 * tbase, tbase, 2.0 * tbase};
    const auto rep = verify_exponential_bound(sm, 20000, tg, m, vn, n,
                                              {1.0 * m * std::sqrt(static_cast<double>(n)),
                                               3.0 * m * std::sqrt(static_cast<double>(n))});
    CHECK(rep.pass);
    for (const auto& row : rep.rows) {
        CHECK(row.estimate > 0.0);
        CHECK(row.pass);
    }
}

TEST_CASE("degenerate martingale and adversarial drift") {
    // dM = 0: E e^{tM} = 1 <= bounds
    const auto zero_sampler = [](std::size_t) { return MartingaleSample{0.0, 0.0}; };
    const auto rep = verify_exponential_bound(zero_sampler, 100, {-1.0, 0.5}, 0.1, 1.0, 10);
    CHECK(rep.pass);
    for (const auto& row : rep.rows) CHECK(row.estimate == Catch::Approx(1.0));

    // dM = +m: E e^{tM} = e^{tmn} beats e^{t^2 m^2 n / 2} at small t -> FAIL flagged
    const double m = 0.05;
    const std::uint64_t n = 100;
    SMartingaleSampler bad{CircleMap(0.05), MassDisorder::uniform_symmetric(0.5),
                           rng::RandomStream(1, rng::StreamTag::chain_noise), n, 0.25, true};
    const double tbase = 0.5 / (m * std::sqrt(static_cast<double>(n)));
    const auto rep2 = verify_exponential_bound(bad, 200, {tbase}, bad.increment_bound(),
                                               bad.variance_budget(), n);
    CHECK_FALSE(rep2.pass);
}

TEST_CASE("increment bound violations abort") {
    const auto liar = [](std::size_t) { return MartingaleSample{0.0, 10.0}; };
    CHECK_THROWS_AS(verify_exponential_bound(liar, 10, {0.1}, 1.0, 1.0, 10), config_error);
}

TEST_CASE("block martingale stays within its bounds") {
    const double w = 0.05;
    const auto dist = MassDisorder::uniform_symmetric(0.5);
    const auto table = build_gamma_table(w, dist, 5, 64, 500);
    // gamma should be close to E(B^2) * w * floor(1/w) * int r = E(B^2) pi^2/8 (w floor(1/w) ~ 1)
    double gbar = 0.0;
    for (double v : table.values) gbar += v;
    gbar /= static_cast<double>(table.values.size());
    CHECK(gbar == Catch::Approx(dist.moment2() * kPi * kPi / 8.0).epsilon(0.1));

    BlockMartingaleSampler bm{CircleMap(w), dist,
                              rng::RandomStream(77, rng::StreamTag::chain_noise), 40, theta(w),
                              &table};
    const double m = bm.increment_bound();
    const std::uint64_t nb = 40;
    const double tbase = 1.0 / (m * std::sqrt(static_cast<double>(nb)));
    const auto rep = verify_exponential_bound(bm, 5000, {-tbase, 0.5 * tbase, tbase}, m,
                                              m * m * static_cast<double>(nb), nb);
    CHECK(rep.pass);
}

TEST_CASE("gamma tail cell sanity") {
    const auto dist = MassDisorder::uniform_symmetric(0.5);
    const auto row = gamma_tail_cell(0.05, 800, 4000, dist, 31, theta(0.05));
    CHECK(row.w2n == Catch::Approx(2.0));
    CHECK(row.e_inv_gamma > 0.0);
    CHECK(row.alpha_hat > 0.1 * kPi * kPi / 96.0);
}

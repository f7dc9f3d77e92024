#pragma once

// Fourier-diagonal approximation machinery: the per-step symbols
// lambda_k(z), their products Lambda_n(xi), synthesis of S_{y,n} u, and the
// empirical density checks for the phase chain.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chainflux/circlemap.hpp"
#include "chainflux/disorder.hpp"
#include "chainflux/parallel.hpp"
#include "chainflux/quadrature.hpp"

namespace chainflux {

using complexd = std::complex<double>;

using TorusFunction = std::function<double(double)>;

// lambda_k(z) = int e^{i 2 pi z w^-1 (theta - w + Phi(y, b))} (1 + w h(y) b) tau(b) db,
// by Gauss-Legendre in b (node doubling is checked in the tests).
template <typename Dist>
complexd lambda_k(double z, double y, const CircleMap& map, const Dist& dist,
                  const TorusFunction& h = {}, int nodes = 64) {
    const QuadratureRule q = gauss_legendre(nodes);
    const double mid = 0.5 * (dist.b_minus() + dist.b_plus());
    const double half = 0.5 * (dist.b_plus() - dist.b_minus());
    const double w = map.w();
    const double hy = h ? h(y) : 0.0;
    complexd acc(0.0, 0.0);
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        const double b = mid + half * q.nodes[i];
        const double phase = 2.0 * kPi * z * (map.theta() - w + map.phi(y, b)) / w;
        acc += half * q.weights[i] * dist.density(b) * (1.0 + w * hy * b) *
               complexd(std::cos(phase), std::sin(phase));
    }
    return acc;
}

struct LogPolar {
    double log_mod = 0.0;
    double phase = 0.0; // unwrapped: sum of per-factor arguments

    complexd value() const { return std::polar(std::exp(log_mod), phase); }
};

// Lambda_n(xi) = prod_{j=1..n} lambda_j(xi w) with y_j = y - j w, accumulated
// in log-polar form.
template <typename Dist>
LogPolar big_lambda(double xi, double y, std::uint64_t n, const CircleMap& map, const Dist& dist,
                    const TorusFunction& h = {}, int nodes = 64) {
    const double w = map.w();
    LogPolar lp;
    for (std::uint64_t j = 1; j <= n; ++j) {
        const complexd l = lambda_k(xi * w, torus_reduce(y - static_cast<double>(j) * w), map,
                                    dist, h, nodes);
        lp.log_mod += std::log(std::abs(l));
        lp.phase += std::arg(l);
    }
    return lp;
}

// Fourier coefficients of a test function on integer frequencies [-cutoff, cutoff].
struct FourierMultiplier {
    int cutoff = 0;
    std::vector<complexd> coef; // index xi + cutoff

    complexd at(int xi) const { return coef[static_cast<std::size_t>(xi + cutoff)]; }
};

// Coefficients of the normalized bump of half-width hw (||u||_1 = 1) centered
// at the synthesis point: v(x) = u(x + y), so v_hat is real (sinc).
inline FourierMultiplier bump_multiplier(double half_width, int cutoff) {
    FourierMultiplier m;
    m.cutoff = cutoff;
    m.coef.resize(2 * cutoff + 1);
    for (int xi = -cutoff; xi <= cutoff; ++xi) {
        const double a = 2.0 * kPi * xi * half_width;
        m.coef[static_cast<std::size_t>(xi + cutoff)] =
            xi == 0 ? 1.0 : std::sin(a) / a;
    }
    return m;
}

struct SynthesisResult {
    std::vector<double> grid;   // x values
    std::vector<double> values; // S_{y,n} u (x)
    double sup_abs = 0.0;
    double min_val = 0.0;
};

// S_{y,n} u (x) = sum_xi e^{i 2 pi xi (x + n w - y)} Lambda_n(xi) u_hat(xi).
// u_hat are the coefficients of u recentered at y (bump_multiplier builds
// them for bump inputs). Errors out if the cutoff is too small for the
// requested truncation tolerance.
template <typename Dist>
SynthesisResult s_yn_apply(const FourierMultiplier& u_hat, double y, std::uint64_t n,
                           const CircleMap& map, const Dist& dist, int grid_points = 1024,
                           double trunc_tol = 1e-12, const TorusFunction& h = {},
                           int threads = 0) {
    const int cutoff = u_hat.cutoff;
    std::vector<complexd> lam(static_cast<std::size_t>(cutoff) + 1);
    parallel_for(static_cast<std::size_t>(cutoff) + 1, threads, [&](std::size_t xi) {
        lam[xi] = n == 0 ? complexd(1.0, 0.0)
                         : big_lambda(static_cast<double>(xi), y, n, map, dist, h).value();
    });
    // n = 0 is the identity on the truncated space; the decay check applies
    // to genuine evolution only.
    if (n >= 1) {
        const double partial = std::abs(lam[0] * u_hat.at(0));
        const double edge = std::abs(lam[static_cast<std::size_t>(cutoff)] * u_hat.at(cutoff));
        if (edge >= trunc_tol * std::fmax(partial, 1e-300)) {
            throw config_error("s_yn_apply cutoff " + std::to_string(cutoff) +
                               " insufficient: edge coefficient " + std::to_string(edge) +
                               "; suggest cutoff >= " + std::to_string(2 * cutoff));
        }
    }
    SynthesisResult res;
    res.grid.resize(grid_points);
    res.values.resize(grid_points);
    const double shift = static_cast<double>(n) * map.w() - y;
    for (int gi = 0; gi < grid_points; ++gi) {
        const double x = static_cast<double>(gi) / grid_points;
        complexd acc = lam[0] * u_hat.at(0);
        for (int xi = 1; xi <= cutoff; ++xi) {
            const double ang = 2.0 * kPi * xi * (x + shift);
            const complexd e(std::cos(ang), std::sin(ang));
            // Hermitian symmetry: Lambda_n(-xi) = conj(Lambda_n(xi)) for real tau.
            acc += e * lam[static_cast<std::size_t>(xi)] * u_hat.at(xi) +
                   std::conj(e * lam[static_cast<std::size_t>(xi)] * u_hat.at(xi));
        }
        res.grid[gi] = x;
        res.values[gi] = acc.real();
        res.sup_abs = std::fmax(res.sup_abs, std::fabs(acc.real()));
    }
    res.min_val = res.values[0];
    for (double v : res.values) res.min_val = std::fmin(res.min_val, v);
    return res;
}

struct DensityCheck {
    double w = 0.0;
    std::uint64_t n = 0;
    std::uint64_t samples = 0;
    double sup_density = 0.0;      // fine bins, width max(w^2, samples^-1/2)
    double inf_density = 0.0;      // coarse bins (lower bound is an interval-mass statement)
    std::size_t fine_bins = 0;
    std::size_t coarse_bins = 0;
    std::vector<std::uint64_t> fine_hist;
    std::vector<std::uint64_t> coarse_hist;
};

// Histogram of X_n^{x0} over many noise realizations.
inline DensityCheck empirical_density_check(double x0, double w, std::uint64_t n,
                                            std::uint64_t samples, const MassDisorder& dist,
                                            rng::u64 seed, int threads = 0,
                                            std::size_t coarse_bins = 32) {
    const CircleMap map(w);
    const double fine_width = std::fmax(w * w, 1.0 / std::sqrt(static_cast<double>(samples)));
    const std::size_t fine_bins = std::max<std::size_t>(8, static_cast<std::size_t>(std::llround(1.0 / fine_width)));
    const rng::RandomStream stream(seed, rng::StreamTag::chain_noise);

    const int nt = resolve_threads(threads);
    std::vector<std::vector<std::uint64_t>> fine_loc(nt, std::vector<std::uint64_t>(fine_bins, 0));
    std::vector<std::vector<std::uint64_t>> coarse_loc(nt, std::vector<std::uint64_t>(coarse_bins, 0));
    // integer counts merge exactly, so the histogram is thread-count independent
    parallel_for(static_cast<std::size_t>(nt), threads, [&](std::size_t t) {
        auto& fh = fine_loc[t];
        auto& ch = coarse_loc[t];
        for (std::uint64_t s = t; s < samples; s += static_cast<std::uint64_t>(nt)) {
            double xr = torus_reduce(x0);
            for (std::uint64_t k = 0; k < n; ++k) {
                const double b = dist.quantile(stream.u01(k, s));
                const double si = std::sin(kPi * xr), c = std::cos(kPi * xr);
                xr += map.theta() + map.phi_sc(si, c, b);
                if (xr >= 1.0) xr -= 1.0;
            }
            ++fh[std::min(fine_bins - 1, static_cast<std::size_t>(xr * fine_bins))];
            ++ch[std::min(coarse_bins - 1, static_cast<std::size_t>(xr * coarse_bins))];
        }
    });
    DensityCheck dc;
    dc.w = w;
    dc.n = n;
    dc.samples = samples;
    dc.fine_bins = fine_bins;
    dc.coarse_bins = coarse_bins;
    dc.fine_hist.assign(fine_bins, 0);
    dc.coarse_hist.assign(coarse_bins, 0);
    for (int t = 0; t < nt; ++t) {
        for (std::size_t i = 0; i < fine_bins; ++i) dc.fine_hist[i] += fine_loc[t][i];
        for (std::size_t i = 0; i < coarse_bins; ++i) dc.coarse_hist[i] += coarse_loc[t][i];
    }
    std::uint64_t mx = 0, mn_coarse = ~0ULL;
    for (auto c : dc.fine_hist) mx = std::max(mx, c);
    for (auto c : dc.coarse_hist) mn_coarse = std::min(mn_coarse, c);
    dc.sup_density = static_cast<double>(mx) * fine_bins / static_cast<double>(samples);
    dc.inf_density = static_cast<double>(mn_coarse) * coarse_bins / static_cast<double>(samples);
    return dc;
}

} // namespace chainflux

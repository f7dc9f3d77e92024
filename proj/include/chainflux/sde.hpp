#pragma once

// Langevin-thermostatted chain: white noise and viscous friction on the end
// oscillators, fixed boundaries q_0 = q_{n+1} = 0, unit springs. Euler-
// Maruyama by default, with a BAOAB splitting (exact Ornstein-Uhlenbeck
// boundary kick) as an option; BAOAB reduces to velocity Verlet at lambda=0.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "chainflux/errors.hpp"
#include "chainflux/rng.hpp"

namespace chainflux {

enum class SdeScheme { euler_maruyama, baoab };

struct ChainState {
    std::vector<double> q;
    std::vector<double> p;
    std::vector<double> masses;
    double T1 = 1.0;
    double Tn = 1.0;
    double lambda = 1.0;
    double t = 0.0;
    std::uint64_t step = 0;

    static ChainState at_rest(std::vector<double> masses, double T1, double Tn, double lambda) {
        ChainState st;
        st.q.assign(masses.size(), 0.0);
        st.p.assign(masses.size(), 0.0);
        st.masses = std::move(masses);
        st.T1 = T1;
        st.Tn = Tn;
        st.lambda = lambda;
        for (double m : st.masses)
            if (!(m > 0.0)) throw config_error("chain masses must be strictly positive");
        if (!(T1 >= Tn) || !(Tn > 0.0)) throw config_error("need T1 >= Tn > 0");
        if (!(lambda > 0.0)) throw config_error("need lambda > 0");
        return st;
    }

    std::size_t n() const { return q.size(); }

    double energy() const {
        double e = 0.0;
        const std::size_t N = n();
        for (std::size_t k = 0; k < N; ++k) e += 0.5 * p[k] * p[k] / masses[k];
        double prev = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
            e += 0.5 * (q[k] - prev) * (q[k] - prev);
            prev = q[k];
        }
        e += 0.5 * prev * prev; // bond to the fixed right wall
        return e;
    }
};

namespace detail {

inline void chain_forces(const ChainState& st, std::vector<double>& f) {
    const std::size_t N = st.n();
    f.resize(N);
    for (std::size_t k = 0; k < N; ++k) {
        const double left = k == 0 ? 0.0 : st.q[k - 1];
        const double right = k + 1 == N ? 0.0 : st.q[k + 1];
        f[k] = right - 2.0 * st.q[k] + left;
    }
}

inline void check_finite(const ChainState& st) {
    for (double v : st.q)
        if (!std::isfinite(v)) throw numeric_guard_error("SDE state non-finite (dt too large?)");
    for (double v : st.p)
        if (!std::isfinite(v)) throw numeric_guard_error("SDE state non-finite (dt too large?)");
}

} // namespace detail

// One step. Noise is addressed by (state.step, trajectory) so trajectories
// are reproducible and independent of scheduling.
inline void langevin_step(ChainState& st, double dt, const rng::RandomStream& stream,
                          rng::u64 trajectory = 0, SdeScheme scheme = SdeScheme::euler_maruyama) {
    if (!(dt > 0.0) || !(dt * st.lambda < 0.1))
        throw config_error("langevin_step needs 0 < dt with dt * lambda < 0.1");
    const std::size_t N = st.n();
    const std::size_t last = N - 1;
    static thread_local std::vector<double> f;
    const auto g = stream.normal2(st.step, trajectory);
    if (scheme == SdeScheme::euler_maruyama) {
        detail::chain_forces(st, f);
        const double sq1 = std::sqrt(2.0 * st.lambda * st.T1 * st.masses[0] * dt);
        const double sqn = std::sqrt(2.0 * st.lambda * st.Tn * st.masses[last] * dt);
        for (std::size_t k = 0; k < N; ++k) {
            const double pk = st.p[k];
            st.q[k] += pk / st.masses[k] * dt;
            double dp = f[k] * dt;
            if (k == 0) dp += -st.lambda * pk * dt + sq1 * g[0];
            if (k == last) dp += -st.lambda * pk * dt + sqn * g[1];
            st.p[k] += dp;
        }
    } else {
        // B (half kick) - A (half drift) - O (exact OU at the ends) - A - B
        detail::chain_forces(st, f);
        for (std::size_t k = 0; k < N; ++k) st.p[k] += 0.5 * dt * f[k];
        for (std::size_t k = 0; k < N; ++k) st.q[k] += 0.5 * dt * st.p[k] / st.masses[k];
        const double decay = std::exp(-st.lambda * dt);
        const double s1 = std::sqrt(st.T1 * st.masses[0] * (1.0 - decay * decay));
        const double sn = std::sqrt(st.Tn * st.masses[last] * (1.0 - decay * decay));
        st.p[0] = decay * st.p[0] + s1 * g[0];
        st.p[last] = decay * st.p[last] + sn * g[1];
        for (std::size_t k = 0; k < N; ++k) st.q[k] += 0.5 * dt * st.p[k] / st.masses[k];
        detail::chain_forces(st, f);
        for (std::size_t k = 0; k < N; ++k) st.p[k] += 0.5 * dt * f[k];
    }
    st.t += dt;
    ++st.step;
    if ((st.step & 0xFFF) == 0) detail::check_finite(st);
}

// Deterministic Hamiltonian step (no baths); used for the energy-drift check.
inline void verlet_step(ChainState& st, double dt) {
    static thread_local std::vector<double> f;
    const std::size_t N = st.n();
    detail::chain_forces(st, f);
    for (std::size_t k = 0; k < N; ++k) st.p[k] += 0.5 * dt * f[k];
    for (std::size_t k = 0; k < N; ++k) st.q[k] += dt * st.p[k] / st.masses[k];
    detail::chain_forces(st, f);
    for (std::size_t k = 0; k < N; ++k) st.p[k] += 0.5 * dt * f[k];
    st.t += dt;
    ++st.step;
}

struct SteadyCurrent {
    double J = 0.0;
    double stderr_ = 0.0;
    std::vector<double> bond_means; // per-bond time averages
    double bond_spread = 0.0;       // max |bond - J|
};

inline double default_sde_dt(const std::vector<double>& masses, double lambda) {
    double mmin = masses[0];
    for (double m : masses) mmin = std::fmin(mmin, m);
    return 0.01 * std::fmin(1.0 / lambda, std::sqrt(mmin));
}

// Time-averaged symmetric bond flux after burn-in, with a blocked stderr:
// j_{k,k+1} = -(q_{k+1} - q_k) (p_k/m_k + p_{k+1}/m_{k+1}) / 2.
inline SteadyCurrent steady_current_estimate(std::vector<double> masses, double T1, double Tn,
                                             double lambda, double dt, double t_burn,
                                             double t_total, const rng::RandomStream& stream,
                                             rng::u64 trajectory = 0,
                                             SdeScheme scheme = SdeScheme::baoab,
                                             int n_blocks = 32) {
    ChainState st = ChainState::at_rest(std::move(masses), T1, Tn, lambda);
    const std::size_t N = st.n();
    if (N < 2) throw config_error("steady_current_estimate needs n >= 2");
    const std::uint64_t burn_steps = static_cast<std::uint64_t>(t_burn / dt);
    const std::uint64_t run_steps = static_cast<std::uint64_t>((t_total - t_burn) / dt);
    if (run_steps < static_cast<std::uint64_t>(4 * n_blocks))
        throw config_error("steady_current_estimate: averaging window too short");
    for (std::uint64_t i = 0; i < burn_steps; ++i) langevin_step(st, dt, stream, trajectory, scheme);
    std::vector<double> bond_acc(N - 1, 0.0);
    std::vector<double> block_means(n_blocks, 0.0);
    const std::uint64_t per_block = run_steps / n_blocks;
    for (int blk = 0; blk < n_blocks; ++blk) {
        double acc = 0.0;
        for (std::uint64_t i = 0; i < per_block; ++i) {
            langevin_step(st, dt, stream, trajectory, scheme);
            double site_sum = 0.0;
            for (std::size_t k = 0; k + 1 < N; ++k) {
                const double j = -(st.q[k + 1] - st.q[k]) *
                                 (st.p[k] / st.masses[k] + st.p[k + 1] / st.masses[k + 1]) * 0.5;
                bond_acc[k] += j;
                site_sum += j;
            }
            acc += site_sum / static_cast<double>(N - 1);
        }
        block_means[blk] = acc / static_cast<double>(per_block);
    }
    SteadyCurrent out;
    const std::uint64_t used = per_block * static_cast<std::uint64_t>(n_blocks);
    for (double& b : bond_acc) b /= static_cast<double>(used);
    out.bond_means = bond_acc;
    double mean = 0.0;
    for (double b : block_means) mean += b;
    mean /= n_blocks;
    double var = 0.0;
    for (double b : block_means) var += (b - mean) * (b - mean);
    out.J = mean;
    out.stderr_ = std::sqrt(var / (n_blocks * (n_blocks - 1.0)));
    for (double b : bond_acc) out.bond_spread = std::fmax(out.bond_spread, std::fabs(b - mean));
    return out;
}

} // namespace chainflux

#pragma once

// Circle-map representation of the matrix-element process.
//
// The coordinate change g maps the ratio chain xi_n = D_n / D_{n-1} to a
// Markov chain X_n on the torus driven by the noisy rotation
// f_b(x) = x + theta + Phi(x, b), and a matrix element factorizes into an
// exponential amplitude times sin(pi X_n):
//
//     D_n(v) = v_0 * Gamma_n^x * sin(pi X_n^x) / sin(pi x),  x = g^{-1}(v0/v-1),
//
// with Gamma_n the exact product of sine ratios, one factor per site. The
// same product expands to exp[w sum s(X_{l-1}) B_l + w^2 sum r(X_{l-1}) B_l^2
// + O(w^3 n)]; both forms are carried side by side.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "chainflux/errors.hpp"
#include "chainflux/quadrature.hpp"
#include "chainflux/transfer.hpp"

namespace chainflux {

struct TorusPoint {
    double v = 0.0; // representative in [0, 1)
};

inline double torus_reduce(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r = 0.0; // x slightly below an integer can round up
    return r;
}

inline double torus_distance(double a, double b) {
    const double d = torus_reduce(a - b);
    return std::fmin(d, 1.0 - d);
}

// Shape functions of the expansion.
inline double phi_shape(double x) {
    const double s = std::sin(kPi * x);
    return s * s;
}
inline double psi_shape(double x) {
    const double s = std::sin(kPi * x), c = std::cos(kPi * x);
    return kPi * s * s * s * c;
}
inline double s_shape(double x) { return -0.5 * kPi * std::sin(2.0 * kPi * x); }
inline double r_shape(double x) {
    const double c2 = std::cos(2.0 * kPi * x);
    return 0.25 * kPi * kPi * (c2 * c2 - c2);
}
// phi' for the joint-behavior martingale.
inline double phi_shape_prime(double x) { return kPi * std::sin(2.0 * kPi * x); }

class CircleMap {
public:
    explicit CircleMap(double w) : w_(w) {
        if (!(w > 0.0) || !(kPi * w / 2.0 < 1.0))
            throw config_error("circle map needs 0 < w < 2/pi (got w=" + std::to_string(w) + ")");
        sh_ = 0.5 * kPi * w;                  // sin(pi theta / 2)
        ch_ = std::sqrt(1.0 - sh_ * sh_);     // cos(pi theta / 2)
        theta_ = (2.0 / kPi) * std::asin(sh_); // = acos(1 - pi^2 w^2 / 2)/pi, stable at small w
        sin_pi_theta_ = 2.0 * sh_ * ch_;
        cos_pi_theta_ = 1.0 - 2.0 * sh_ * sh_;
    }

    double w() const { return w_; }
    double theta() const { return theta_; }
    double sin_pi_theta() const { return sin_pi_theta_; }

    // Noise kick. Numerator uses 1 - cos(2 pi x) = 2 sin^2(pi x) exactly.
    double phi(double x, double b) const {
        const double s = std::sin(kPi * x), c = std::cos(kPi * x);
        return phi_sc(s, c, b);
    }
    double phi_sc(double s, double c, double b) const {
        const double num = 2.0 * sh_ * s * s * b;
        const double den = ch_ - 2.0 * sh_ * s * c * b;
        return std::atan2(num, den) / kPi;
    }

    double f(double x, double b) const { return x + theta_ + phi(x, b); }
    double f_inv(double y, double b) const { return y - theta_ + phi(y - theta_, -b); }

    // g(x) = sin(pi x) / sin(pi (x - theta)); pole at x = theta maps to the
    // single point at infinity.
    double g(double x) const {
        const double den = std::sin(kPi * (x - theta_));
        if (den == 0.0) return std::numeric_limits<double>::infinity();
        return std::sin(kPi * x) / den;
    }

    // Branch fixed by the unit-circle form: x = arg(e^{i pi theta} xi - 1)/pi
    // mod 1, which satisfies g_inv(g(x)) = x on the torus and g_inv(inf) = theta.
    double g_inv(double xi) const {
        if (std::isinf(xi)) return theta_;
        return torus_reduce(std::atan2(sin_pi_theta_ * xi, cos_pi_theta_ * xi - 1.0) / kPi);
    }

private:
    double w_, theta_, sh_, ch_, sin_pi_theta_, cos_pi_theta_;
};

inline double theta(double w) { return CircleMap(w).theta(); }

struct PhaseAmplitudeState {
    TorusPoint x;               // X_n
    double x_lifted = 0.0;      // chain lifted to the line
    double log_gamma_exact = 0.0;   // log of the exact product of sine ratios
    double log_gamma_s_sum = 0.0;   // w   * sum s(X_{l-1}) B_l
    double log_gamma_r_sum = 0.0;   // w^2 * sum r(X_{l-1}) B_l^2
    std::uint64_t n = 0;
};

enum class GammaMode {
    none,           // phase only
    exact_and_sums, // product form + both exponential-form sums
};

namespace detail {

struct NullVisitor {
    void operator()(std::uint64_t, double) const {}
};

} // namespace detail

// Iterates X_l = f_{B_l}(X_{l-1}) from X_0 = x0 over B_1..B_n (b_seq(k) =
// B_{k+1}) and accumulates the amplitude. Trig runs on the reduced
// representative; the wrap subtraction is exact in floating point, so the
// lift costs no precision. visitor(l, X_l reduced) is called for l = 0..n.
//
// The product factor at a site with X_{l-1} = 0 exactly is the limit 1
// (Phi(0, b) = 0 and s(0) = r(0) = 0): that is the legitimate e2 start. At
// any later site an exact zero of sin(pi X_l) aborts.
template <typename BSeq, typename Visitor = detail::NullVisitor>
PhaseAmplitudeState evolve_chain(const CircleMap& map, double x0, BSeq&& b_seq, std::uint64_t n,
                                 GammaMode mode = GammaMode::exact_and_sums,
                                 Visitor&& visitor = Visitor{}) {
    const double w = map.w();
    const double th = map.theta();
    double xr = torus_reduce(x0);
    const double xr0 = xr;
    double xc = 0.0; // Kahan compensation of the phase accumulation
    double gc = 0.0; // and of the exact log product
    std::int64_t winding = 0;
    PhaseAmplitudeState st;
    visitor(0, xr);
    for (std::uint64_t k = 0; k < n; ++k) {
        const double b = b_seq(k);
        const double s = std::sin(kPi * xr), c = std::cos(kPi * xr);
        const double ph = map.phi_sc(s, c, b);
        if (mode == GammaMode::exact_and_sums) {
            if (s == 0.0) {
                if (k != 0)
                    throw degenerate_sine_error("sin(pi X_l) = 0 at site " + std::to_string(k) +
                                                " while accumulating the exact amplitude");
                // X_0 = 0: limit factor 1, zero s/r contributions.
            } else {
                // log[sin(pi x) / sin(pi (x + Phi))] = -log1p(rel) with
                // rel = 2 cos(pi(x + Phi/2)) sin(pi Phi/2) / sin(pi x).
                const double rel =
                    2.0 * std::cos(kPi * (xr + 0.5 * ph)) * std::sin(0.5 * kPi * ph) / s;
                const double term = -std::log1p(rel) - gc;
                const double tot = st.log_gamma_exact + term;
                gc = (tot - st.log_gamma_exact) - term;
                st.log_gamma_exact = tot;
                st.log_gamma_s_sum += w * (-kPi * s * c) * b;
                const double c2 = 1.0 - 2.0 * s * s;
                st.log_gamma_r_sum += w * w * (0.25 * kPi * kPi * (c2 * c2 - c2)) * b * b;
            }
        }
        {
            const double inc = (th + ph) - xc;
            const double xn = xr + inc;
            xc = (xn - xr) - inc;
            xr = xn;
        }
        if (xr >= 1.0) {
            xr -= 1.0; // exact: xr in [1, 2)
            ++winding;
        }
        visitor(k + 1, xr);
    }
    st.x = TorusPoint{xr};
    st.x_lifted = x0 + (xr - xr0) + static_cast<double>(winding);
    st.n = n;
    return st;
}

struct LogSigned {
    double log_abs = -std::numeric_limits<double>::infinity();
    double sign = 0.0;

    double value() const { return sign * std::exp(log_abs); }
    // |a/b - 1| computed in log space.
    double rel_diff(const LogSigned& o) const {
        if (sign == 0.0 && o.sign == 0.0) return 0.0;
        return std::fabs(sign * o.sign * std::exp(log_abs - o.log_abs) - 1.0);
    }
};

// D_n(v) through the representation, using the exact product-form amplitude.
// v0 != 0: chain from x = g^{-1}(v0/v_minus1), D_n = v0 Gamma sin(pi X_n)/sin(pi x).
// v0 == 0 (e2 direction): start the chain at 0; the first factor is the
// limit 1 and D_n(e2) = -Gamma^0_n sin(pi X^0_n) / sin(pi theta).
template <typename BSeq>
LogSigned reconstruct_d(double v0, double v_minus1, const CircleMap& map, BSeq&& b_seq,
                        std::uint64_t n) {
    if (v0 == 0.0 && v_minus1 == 0.0)
        throw config_error("reconstruct_d needs (v0, v_minus1) != (0, 0)");
    if (n == 0)
        return LogSigned{std::log(std::fabs(v0)), v0 > 0 ? 1.0 : (v0 < 0 ? -1.0 : 0.0)};
    double x, amp, denom;
    if (v0 != 0.0) {
        const double xi0 = v_minus1 == 0.0 ? std::numeric_limits<double>::infinity() : v0 / v_minus1;
        x = map.g_inv(xi0);
        amp = v0;
        denom = std::sin(kPi * x);
        if (denom == 0.0)
            throw config_error("reconstruct_d: sin(pi x) = 0 outside the e2 path (v0/v-1 = 0?)");
    } else {
        x = 0.0;
        amp = -v_minus1;
        denom = map.sin_pi_theta();
    }
    const auto st = evolve_chain(map, x, b_seq, n, GammaMode::exact_and_sums);
    // sin(pi X_n) on the lift flips sign with every wrap of the torus
    const std::int64_t winding = static_cast<std::int64_t>(std::llround(st.x_lifted - st.x.v));
    const double num = std::sin(kPi * st.x.v) * ((winding & 1) ? -1.0 : 1.0);
    const double mag = std::fabs(amp) * std::fabs(num) / std::fabs(denom);
    double sign = (amp < 0 ? -1.0 : 1.0) * (num < 0 ? -1.0 : (num > 0 ? 1.0 : 0.0)) *
                  (denom < 0 ? -1.0 : 1.0);
    return LogSigned{st.log_gamma_exact + std::log(mag), mag == 0.0 ? 0.0 : sign};
}

// Co-evolution of X^theta and X^0 on the same noise, with the explicit
// martingale M_n (dM = w phi'(X^theta_{n-1}) B_n) and the residuals the
// joint-behavior lemma controls:
//   l_n = log((X^theta_n - X^0_n)/w) - M_n         (= L_n + O(w^2 n))
//   k_n = log(Gamma^0_n / Gamma^theta_n)           (= K_n + O(w + w^2 n))
struct JointState {
    PhaseAmplitudeState state_theta;
    PhaseAmplitudeState state_zero;
    double lifted_diff = 0.0;
    double m_n = 0.0;
    double l_n = 0.0;
    double k_n = 0.0;
    bool order_preserved = true; // lifted difference stayed positive throughout
};

template <typename BSeq>
JointState evolve_joint(const CircleMap& map, BSeq&& b_seq, std::uint64_t n) {
    const double w = map.w();
    const double th = map.theta();
    double xt = torus_reduce(th), x0 = 0.0;
    std::int64_t wind_t = 0, wind_0 = 0;
    JointState js;
    PhaseAmplitudeState& at = js.state_theta;
    PhaseAmplitudeState& a0 = js.state_zero;
    for (std::uint64_t k = 0; k < n; ++k) {
        const double b = b_seq(k);
        js.m_n += w * phi_shape_prime(xt) * b;
        // theta chain
        {
            const double s = std::sin(kPi * xt), c = std::cos(kPi * xt);
            const double ph = map.phi_sc(s, c, b);
            const double rel = 2.0 * std::cos(kPi * (xt + 0.5 * ph)) * std::sin(0.5 * kPi * ph) / s;
            at.log_gamma_exact -= std::log1p(rel);
            at.log_gamma_s_sum += w * (-kPi * s * c) * b;
            xt += th + ph;
            if (xt >= 1.0) {
                xt -= 1.0;
                ++wind_t;
            }
        }
        // zero chain (first factor is the limit 1 at x=0)
        {
            const double s = std::sin(kPi * x0), c = std::cos(kPi * x0);
            const double ph = map.phi_sc(s, c, b);
            if (s != 0.0) {
                const double rel =
                    2.0 * std::cos(kPi * (x0 + 0.5 * ph)) * std::sin(0.5 * kPi * ph) / s;
                a0.log_gamma_exact -= std::log1p(rel);
                a0.log_gamma_s_sum += w * (-kPi * s * c) * b;
            } else if (k != 0) {
                throw degenerate_sine_error("sin(pi X^0_l) = 0 at site " + std::to_string(k));
            }
            x0 += th + ph;
            if (x0 >= 1.0) {
                x0 -= 1.0;
                ++wind_0;
            }
        }
        const double lift_t = th + (xt - torus_reduce(th)) + static_cast<double>(wind_t);
        const double lift_0 = x0 + static_cast<double>(wind_0);
        if (!(lift_t - lift_0 > 0.0)) js.order_preserved = false;
    }
    at.x = TorusPoint{xt};
    at.x_lifted = th + (xt - torus_reduce(th)) + static_cast<double>(wind_t);
    at.n = n;
    a0.x = TorusPoint{x0};
    a0.x_lifted = x0 + static_cast<double>(wind_0);
    a0.n = n;
    js.lifted_diff = at.x_lifted - a0.x_lifted;
    js.l_n = std::log(js.lifted_diff / w) - js.m_n;
    js.k_n = a0.log_gamma_exact - at.log_gamma_exact;
    return js;
}

// Deterministic b-averages against tau (64-point Gauss-Legendre), used by
// the near-martingale and diffusion-floor checks.
template <typename Dist>
double mean_step_minus_w(const CircleMap& map, const Dist& dist, double x, int nodes = 64) {
    const QuadratureRule q = gauss_legendre(nodes);
    const double mid = 0.5 * (dist.b_minus() + dist.b_plus());
    const double half = 0.5 * (dist.b_plus() - dist.b_minus());
    double acc = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        const double b = mid + half * q.nodes[i];
        acc += half * q.weights[i] * dist.density(b) * (map.theta() + map.phi(x, b) - map.w());
    }
    return acc;
}

template <typename Dist>
double second_moment_step_minus_w(const CircleMap& map, const Dist& dist, double x,
                                  int nodes = 64) {
    const QuadratureRule q = gauss_legendre(nodes);
    const double mid = 0.5 * (dist.b_minus() + dist.b_plus());
    const double half = 0.5 * (dist.b_plus() - dist.b_minus());
    double acc = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        const double b = mid + half * q.nodes[i];
        const double d = map.theta() + map.phi(x, b) - map.w();
        acc += half * q.weights[i] * dist.density(b) * d * d;
    }
    return acc;
}

} // namespace chainflux

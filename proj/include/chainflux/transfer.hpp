#pragma once

// Transfer matrices A_k(w), renormalized products Q_n = A_n...A_1, and the
// scalar recursion D_n(v) = (2 - pi^2 w^2 (1+B_n)) D_{n-1}(v) - D_{n-2}(v).
//
// Renormalization uses exact power-of-two scaling: values are rescaled by
// 2^-e whenever the working magnitude leaves [1/2, 2), and the binary
// exponent is accumulated as an integer. The bookkeeping is lossless and the
// hot loop carries no log/exp calls.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "chainflux/errors.hpp"

namespace chainflux {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kLn2 = 0.693147180559945309417232121458176568;

// Default ceiling for accumulated log scales; trips loudly instead of
// saturating (a trip signals a mis-set frequency grid).
inline constexpr double kDefaultLogScaleGuard = 600.0;

struct TransferMatrix {
    double a11, a12, a21, a22;

    static TransferMatrix make(double w, double b) {
        return {2.0 - kPi * kPi * w * w * (1.0 + b), -1.0, 1.0, 0.0};
    }
    double det() const { return a11 * a22 - a12 * a21; }
};

inline TransferMatrix transfer_matrix(double w, double b) { return TransferMatrix::make(w, b); }

// Recursion coefficient 2 - pi^2 w^2 (1+b); equals the (1,1) entry of A.
inline double transfer_coefficient(double w, double b) {
    return 2.0 - kPi * kPi * w * w * (1.0 + b);
}

namespace detail {

// Rescale x (nonzero) into [1, 2) by a power of two; adds the exponent shift
// to e2. Exact in floating point.
inline double pow2_normalize(double x, std::int64_t& e2) {
    int e = 0;
    const double m = std::frexp(x, &e); // |m| in [0.5, 1)
    e2 += e;
    return m * 2.0;
}

} // namespace detail

// Q_n kept near unit norm plus an accumulated log-scale:
// true product = 2^exp2 * m, log_scale = exp2 * ln 2.
struct ScaledMatrixProduct {
    std::array<std::array<double, 2>, 2> m{{{1.0, 0.0}, {0.0, 1.0}}};
    std::int64_t exp2 = 0;
    double guard = kDefaultLogScaleGuard;

    static ScaledMatrixProduct identity(double guard = kDefaultLogScaleGuard) {
        ScaledMatrixProduct p;
        p.guard = guard;
        return p;
    }

    double log_scale() const { return static_cast<double>(exp2) * kLn2; }

    double frobenius() const {
        return std::sqrt(m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] +
                         m[1][1] * m[1][1]);
    }

    // det of the scaled factor; the true product has det 2^(2*exp2) * this.
    double det_scaled() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

    // log |D| and sign for an entry of the true product.
    double entry_log_abs(int r, int c) const { return std::log(std::fabs(m[r][c])) + log_scale(); }
};

inline void step_product(ScaledMatrixProduct& p, const TransferMatrix& a) {
    const double m00 = a.a11 * p.m[0][0] + a.a12 * p.m[1][0];
    const double m01 = a.a11 * p.m[0][1] + a.a12 * p.m[1][1];
    p.m[1][0] = p.m[0][0];
    p.m[1][1] = p.m[0][1];
    p.m[0][0] = m00;
    p.m[0][1] = m01;
    const double f = p.frobenius();
    if (f >= 2.0 || f < 0.5) {
        std::int64_t e2 = 0;
        (void)detail::pow2_normalize(f, e2);
        const double s = std::ldexp(1.0, static_cast<int>(-e2));
        for (auto& row : p.m)
            for (auto& v : row) v *= s;
        p.exp2 += e2;
    }
    if (p.log_scale() > p.guard)
        throw numeric_guard_error("matrix product log-scale exceeded guard " +
                                  std::to_string(p.guard) + " (check the frequency grid)");
}

// (D_n(v), D_{n-1}(v)) up to a common factor 2^exp2.
struct DPairState {
    double d_cur = 1.0;
    double d_prev = 0.0;
    std::int64_t exp2 = 0;

    double log_scale() const { return static_cast<double>(exp2) * kLn2; }

    // log|D_n| (cur = true) or log|D_{n-1}|, and its sign.
    double log_abs(bool cur = true) const {
        return std::log(std::fabs(cur ? d_cur : d_prev)) + log_scale();
    }
    double value(bool cur = true) const {
        return std::ldexp(cur ? d_cur : d_prev, static_cast<int>(exp2));
    }
};

namespace detail {

// Compensated (double-double) arithmetic for the scalar recursion. The pair
// components span many orders of magnitude relative to the running scale,
// and plain double rounding injected at O(1) scale does not shrink with a
// small component; the compensated core keeps the recursion error below the
// 1e-9 representation-identity budget. Dekker split, no fma dependency.
struct DoubleDouble {
    double hi = 0.0;
    double lo = 0.0;
};

inline DoubleDouble two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

inline DoubleDouble two_prod(double a, double b) {
    constexpr double split = 134217729.0; // 2^27 + 1
    const double p = a * b;
    const double ca = split * a;
    const double ah = ca - (ca - a), al = a - ah;
    const double cb = split * b;
    const double bh = cb - (cb - b), bl = b - bh;
    const double err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    return {p, err};
}

inline DoubleDouble dd_add(DoubleDouble a, DoubleDouble b) {
    DoubleDouble s = two_sum(a.hi, b.hi);
    s.lo += a.lo + b.lo;
    return two_sum(s.hi, s.lo);
}

inline DoubleDouble dd_mul_d(DoubleDouble a, double b) {
    DoubleDouble p = two_prod(a.hi, b);
    p.lo += a.lo * b;
    return two_sum(p.hi, p.lo);
}

inline void dpair_renormalize(DPairState& s) {
    const double m = std::fmax(std::fabs(s.d_cur), std::fabs(s.d_prev));
    if (m >= 2.0 || m < 0.5) {
        if (m == 0.0) throw numeric_guard_error("d_recursion reached the zero vector");
        std::int64_t e2 = 0;
        (void)pow2_normalize(m, e2);
        const double sc = std::ldexp(1.0, static_cast<int>(-e2));
        s.d_cur *= sc;
        s.d_prev *= sc;
        s.exp2 += e2;
    }
}

} // namespace detail

// Iterates the pair recursion over B_1..B_n supplied by b_seq(k) = B_{k+1},
// with a compensated inner loop (see detail::DoubleDouble). Power-of-two
// renormalization is exact on both limbs.
template <typename BSeq>
DPairState d_recursion(double v0, double v_minus1, double w, BSeq&& b_seq, std::uint64_t n,
                       double guard = kDefaultLogScaleGuard) {
    if (v0 == 0.0 && v_minus1 == 0.0)
        throw config_error("d_recursion needs (v0, v_minus1) != (0, 0)");
    detail::DoubleDouble cur{v0, 0.0}, prev{v_minus1, 0.0};
    std::int64_t exp2 = 0;
    const double w2pi2 = kPi * kPi * w * w;
    for (std::uint64_t k = 0; k < n; ++k) {
        // the coefficient is carried as the exact pair (2, -t): rounding
        // 2 - t to one double loses relative precision 1 ulp / (pi^2 w^2),
        // which the circle-map route does not, and the two routes would
        // drift apart in phase at small w
        const double t = w2pi2 * (1.0 + b_seq(k));
        const detail::DoubleDouble next = detail::dd_add(
            detail::dd_add(detail::dd_mul_d(cur, 2.0),
                           detail::dd_mul_d(cur, -t)),
            detail::DoubleDouble{-prev.hi, -prev.lo});
        prev = cur;
        cur = next;
        const double m = std::fmax(std::fabs(cur.hi), std::fabs(prev.hi));
        if (m >= 2.0 || m < 0.5) {
            if (m == 0.0) throw numeric_guard_error("d_recursion reached the zero vector");
            std::int64_t e2 = 0;
            (void)detail::pow2_normalize(m, e2);
            const double sc = std::ldexp(1.0, static_cast<int>(-e2));
            cur.hi *= sc;
            cur.lo *= sc;
            prev.hi *= sc;
            prev.lo *= sc;
            exp2 += e2;
        }
        if (static_cast<double>(exp2) * kLn2 > guard)
            throw numeric_guard_error("d_recursion log-scale exceeded guard " +
                                      std::to_string(guard));
    }
    DPairState s;
    s.d_cur = cur.hi + cur.lo;
    s.d_prev = prev.hi + prev.lo;
    s.exp2 = exp2;
    return s;
}

// Evolves the e1 and e2 pairs together on one mass sequence (they share the
// coefficients). Used by the current density, which needs all four entries.
template <typename BSeq>
std::array<DPairState, 2> d_recursion_pair(double w, BSeq&& b_seq, std::uint64_t n,
                                           double guard = kDefaultLogScaleGuard) {
    DPairState s1; // v = e1: (D_0, D_-1) = (1, 0)
    DPairState s2; // v = e2: (D_0, D_-1) = (0, 1)
    s2.d_cur = 0.0;
    s2.d_prev = 1.0;
    const double w2pi2 = kPi * kPi * w * w;
    for (std::uint64_t k = 0; k < n; ++k) {
        const double a = 2.0 - w2pi2 * (1.0 + b_seq(k));
        double next = a * s1.d_cur - s1.d_prev;
        s1.d_prev = s1.d_cur;
        s1.d_cur = next;
        next = a * s2.d_cur - s2.d_prev;
        s2.d_prev = s2.d_cur;
        s2.d_cur = next;
        detail::dpair_renormalize(s1);
        detail::dpair_renormalize(s2);
        if (s1.log_scale() > guard || s2.log_scale() > guard)
            throw numeric_guard_error("d_recursion_pair log-scale exceeded guard " +
                                      std::to_string(guard));
    }
    return {s1, s2};
}

// D_n(e1) D_{n-1}(e2) - D_{n-1}(e1) D_n(e2), reconstructed from two scaled
// states evolved on the same (w, b_seq). Contract: equals det Q_n = 1.
//
// The direct difference cancels catastrophically once the product of the two
// scales exceeds ~1/eps; for large w^2 n use WronskianProduct below.
inline double wronskian(const DPairState& e1, const DPairState& e2) {
    const double diff = e1.d_cur * e2.d_prev - e1.d_prev * e2.d_cur;
    return std::ldexp(diff, static_cast<int>(e1.exp2 + e2.exp2));
}

// Q_n maintained as rotation * upper-triangular, Q = U * T with
// T = [[t11, t12], [0, t22]]. The diagonal of T updates multiplicatively, so
// det Q_n = t11 * t22 is carried as a sum of per-step logs and never suffers
// the subtractive cancellation of the raw 2x2 determinant. This is the
// det-multiplicativity bookkeeping behind the Wronskian checks at large
// w^2 n, where both Lyapunov directions must be tracked.
struct WronskianProduct {
    // U = [[c, -s], [s, c]]
    double c = 1.0, s = 0.0;
    // t11 = a * 2^exp2 (a > 0), t12 = x12 * 2^exp2, log|t22| and its sign.
    double a = 1.0, x12 = 0.0;
    std::int64_t exp2 = 0;
    double log_t22 = 0.0;
    double sign_t22 = 1.0;
    std::uint64_t n = 0;

    void step(double coeff) {
        // M = A * U, A = [[coeff, -1], [1, 0]]
        const double m00 = coeff * c - s; // A row 1 . U col 1
        const double m01 = -coeff * s - c;
        const double m10 = c;
        const double m11 = -s;
        // Givens: U_new^T M upper triangular.
        const double r = std::hypot(m00, m10);
        const double cn = m00 / r;
        const double sn = m10 / r;
        const double s12 = cn * m01 + sn * m11;
        const double s22 = -sn * m01 + cn * m11;
        c = cn;
        s = sn;
        // T_new = S * T_old in scaled coordinates.
        const double t22_scaled = sign_t22 * std::exp(log_t22 - log_scale()); // may underflow to 0
        a = r * a;
        x12 = r * x12 + s12 * t22_scaled;
        log_t22 += std::log(std::fabs(s22));
        sign_t22 *= (s22 < 0.0 ? -1.0 : 1.0);
        const double m = std::fmax(a, std::fabs(x12));
        if (m >= 2.0 || m < 0.5) {
            std::int64_t e2 = 0;
            (void)detail::pow2_normalize(m, e2);
            const double sc = std::ldexp(1.0, static_cast<int>(-e2));
            a *= sc;
            x12 *= sc;
            exp2 += e2;
        }
        ++n;
    }

    double log_scale() const { return static_cast<double>(exp2) * kLn2; }

    // det Q_n, exact up to additive rounding in the log.
    double det() const { return sign_t22 * std::exp(std::log(a) + log_scale() + log_t22); }

    // Entries: D_n(e1) = t11 u11, D_{n-1}(e1) = t11 u21,
    //          D_n(e2) = u11 t12 + u12 t22, D_{n-1}(e2) = u21 t12 + u22 t22.
    double d_n_e1() const { return std::exp(log_scale() + std::log(a)) * c; }
    double d_nm1_e1() const { return std::exp(log_scale() + std::log(a)) * s; }
    double d_n_e2() const {
        return c * std::ldexp(x12, static_cast<int>(exp2)) - s * sign_t22 * std::exp(log_t22);
    }
    double d_nm1_e2() const {
        return s * std::ldexp(x12, static_cast<int>(exp2)) + c * sign_t22 * std::exp(log_t22);
    }
};

template <typename BSeq>
WronskianProduct wronskian_product(double w, BSeq&& b_seq, std::uint64_t n) {
    WronskianProduct p;
    const double w2pi2 = kPi * kPi * w * w;
    for (std::uint64_t k = 0; k < n; ++k) p.step(2.0 - w2pi2 * (1.0 + b_seq(k)));
    return p;
}

} // namespace chainflux

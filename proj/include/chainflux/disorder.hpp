#pragma once

// Distribution of the normalized mass fluctuations B_k: i.i.d., zero mean,
// density tau compactly supported on [b-, b+] strictly inside ]-1, oo[.

#include <cmath>
#include <string>

#include "chainflux/errors.hpp"
#include "chainflux/rng.hpp"

namespace chainflux {

enum class DisorderKind {
    uniform_symmetric,
    truncated_quadratic,
};

class MassDisorder {
public:
    static MassDisorder uniform_symmetric(double halfwidth) {
        return MassDisorder(DisorderKind::uniform_symmetric, halfwidth);
    }
    static MassDisorder truncated_quadratic(double halfwidth) {
        return MassDisorder(DisorderKind::truncated_quadratic, halfwidth);
    }
    static MassDisorder from_name(const std::string& kind, double halfwidth) {
        if (kind == "uniform") return uniform_symmetric(halfwidth);
        if (kind == "truncated_quadratic") return truncated_quadratic(halfwidth);
        throw config_error("unknown disorder kind '" + kind +
                           "' (expected 'uniform' or 'truncated_quadratic')");
    }

    DisorderKind kind() const { return kind_; }
    double halfwidth() const { return halfwidth_; }
    double b_minus() const { return -halfwidth_; }
    double b_plus() const { return halfwidth_; }
    double b_abs_max() const { return halfwidth_; }

    // E[B^2] in closed form.
    double moment2() const {
        const double a2 = halfwidth_ * halfwidth_;
        return kind_ == DisorderKind::uniform_symmetric ? a2 / 3.0 : a2 / 5.0;
    }

    double density(double b) const {
        if (b < b_minus() || b > b_plus()) return 0.0;
        const double a = halfwidth_;
        if (kind_ == DisorderKind::uniform_symmetric) return 0.5 / a;
        return 0.75 * (a * a - b * b) / (a * a * a);
    }

    // Inverse CDF. Both kinds have a closed form, so a sample is exactly one
    // uniform draw; this keeps the counter-based site addressing intact.
    double quantile(double u) const {
        const double a = halfwidth_;
        if (kind_ == DisorderKind::uniform_symmetric) return a * (2.0 * u - 1.0);
        // CDF(t) = (3t - t^3)/4 + 1/2 on t = b/a; invert via the trisection
        // identity for the depressed cubic.
        const double y = 4.0 * u - 2.0;
        const double t = 2.0 * std::sin(std::asin(0.5 * y) / 3.0);
        return a * t;
    }

    std::string name() const {
        return kind_ == DisorderKind::uniform_symmetric ? "uniform" : "truncated_quadratic";
    }

private:
    MassDisorder(DisorderKind kind, double halfwidth) : kind_(kind), halfwidth_(halfwidth) {
        if (!(halfwidth > 0.0))
            throw config_error("disorder halfwidth must be positive (zero-width support disallowed)");
        if (!(halfwidth < 1.0))
            throw config_error("disorder support must stay inside ]-1, oo[ (halfwidth < 1)");
    }

    DisorderKind kind_;
    double halfwidth_;
};

inline double sample_b(const MassDisorder& dist, const rng::RandomStream& stream,
                       rng::u64 c0, rng::u64 c1 = 0, rng::u64 c2 = 0) {
    return dist.quantile(stream.u01(c0, c1, c2));
}

// Deterministic view of one sample's mass sequence: operator()(k) is B_{k+1}.
// Depends only on (seed, tag, sample, k), never on the chain length, so
// shorter chains see a truncation of the same stream (common random numbers).
struct MassSequence {
    MassDisorder dist;
    rng::RandomStream stream;
    rng::u64 sample = 0;

    double operator()(rng::u64 k) const { return dist.quantile(stream.u01(k, sample)); }
};

} // namespace chainflux

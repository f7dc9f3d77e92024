#pragma once

// Declarative experiment configuration: one JSON document (key-value with
// nested tables), schema-versioned, validated on load. Command-line flags
// override file values; the CLI wires that up.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "chainflux/disorder.hpp"
#include "chainflux/errors.hpp"

namespace chainflux {

using json = nlohmann::json;

inline constexpr int kConfigSchema = 1;

// Representation-based experiments stay below this frequency by default; the
// O(w^3 n) residual envelope was checked to be tame up to here.
inline constexpr double kDefaultW0 = 0.2;

struct DisorderSpec {
    std::string kind = "uniform";
    double halfwidth = 0.5;

    MassDisorder make() const { return MassDisorder::from_name(kind, halfwidth); }
};

inline void to_json(json& j, const DisorderSpec& d) {
    j = json{{"kind", d.kind}, {"halfwidth", d.halfwidth}};
}
inline void from_json(const json& j, DisorderSpec& d) {
    d.kind = j.value("kind", d.kind);
    d.halfwidth = j.value("halfwidth", d.halfwidth);
}

struct GridPolicy {
    double w_min_coeff = 1e-4; // w_min = coeff / sqrt(n)
    double w_max = 4.0;
    int nodes_per_panel = 32;
    double resolution = 0.6; // panel ratio = 1 + resolution / sqrt(n)
};

inline void to_json(json& j, const GridPolicy& g) {
    j = json{{"w_min_coeff", g.w_min_coeff},
             {"w_max", g.w_max},
             {"nodes_per_panel", g.nodes_per_panel},
             {"resolution", g.resolution}};
}
inline void from_json(const json& j, GridPolicy& g) {
    g.w_min_coeff = j.value("w_min_coeff", g.w_min_coeff);
    g.w_max = j.value("w_max", g.w_max);
    g.nodes_per_panel = j.value("nodes_per_panel", g.nodes_per_panel);
    g.resolution = j.value("resolution", g.resolution);
}

struct ScalingConfig {
    std::vector<std::uint64_t> n_grid{128, 256, 512, 1024, 2048, 4096};
    std::uint64_t samples = 1000;
    DisorderSpec disorder;
    GridPolicy grid;
    double slope_target = -1.5;
    double slope_tol = 0.15;
    std::uint64_t chunk = 25; // samples per checkpoint cell
    std::int64_t halt_after_cells = -1; // testing hook: stop mid-run to exercise resume

    void validate() const {
        if (n_grid.empty()) throw config_error("scaling: empty n grid");
        for (auto n : n_grid)
            if (n < 1) throw config_error("scaling: chain lengths must be >= 1");
        if (samples < 1) throw config_error("scaling: samples must be >= 1");
        if (chunk < 1) throw config_error("scaling: chunk must be >= 1");
        if (!(grid.w_max > 0.0)) throw config_error("scaling: w_max must be positive");
        (void)disorder.kind;
    }
};

inline void to_json(json& j, const ScalingConfig& c) {
    j = json{{"n_grid", c.n_grid},         {"samples", c.samples},
             {"disorder", c.disorder},     {"grid", c.grid},
             {"slope_target", c.slope_target}, {"slope_tol", c.slope_tol},
             {"chunk", c.chunk},           {"halt_after_cells", c.halt_after_cells}};
}
inline void from_json(const json& j, ScalingConfig& c) {
    c.n_grid = j.value("n_grid", c.n_grid);
    c.samples = j.value("samples", c.samples);
    if (j.contains("disorder")) j.at("disorder").get_to(c.disorder);
    if (j.contains("grid")) j.at("grid").get_to(c.grid);
    c.slope_target = j.value("slope_target", c.slope_target);
    c.slope_tol = j.value("slope_tol", c.slope_tol);
    c.chunk = j.value("chunk", c.chunk);
    c.halt_after_cells = j.value("halt_after_cells", c.halt_after_cells);
}

struct VerifyConfig {
    std::vector<double> w_grid{1e-3, 1e-2, 0.1, 0.2};
    std::vector<std::uint64_t> n_grid{10, 100, 1000, 10000};
    std::uint64_t seeds = 20;
    DisorderSpec disorder;
    double w0 = kDefaultW0;
    bool inject_fault = false; // flips the sign of s(x) in the residual check

    void validate() const {
        if (w_grid.empty() || n_grid.empty()) throw config_error("verify: empty grid");
        for (double w : w_grid)
            if (!(w > 0.0) || w > w0 + 1e-12)
                throw config_error("verify: representation experiments need 0 < w <= w0 = " +
                                   std::to_string(w0));
        if (seeds < 1) throw config_error("verify: seeds must be >= 1");
    }
};

inline void to_json(json& j, const VerifyConfig& c) {
    j = json{{"w_grid", c.w_grid}, {"n_grid", c.n_grid},   {"seeds", c.seeds},
             {"disorder", c.disorder}, {"w0", c.w0}, {"inject_fault", c.inject_fault}};
}
inline void from_json(const json& j, VerifyConfig& c) {
    c.w_grid = j.value("w_grid", c.w_grid);
    c.n_grid = j.value("n_grid", c.n_grid);
    c.seeds = j.value("seeds", c.seeds);
    if (j.contains("disorder")) j.at("disorder").get_to(c.disorder);
    c.w0 = j.value("w0", c.w0);
    c.inject_fault = j.value("inject_fault", c.inject_fault);
}

struct LyapunovConfig {
    std::vector<double> w_grid{0.02, 0.05};
    // n = w2n / w^2. The estimator log||Q_n||/n carries a log(1/w)/n offset,
    // so gamma n has to dominate log(1/w); 1600 leaves the offset ~2%.
    double w2n = 1600.0;
    std::uint64_t samples = 800;
    DisorderSpec disorder;

    void validate() const {
        if (w_grid.empty()) throw config_error("lyapunov: empty w grid");
        if (!(w2n >= 8.0)) throw config_error("lyapunov: need w^2 n >= 8");
        if (samples < 2) throw config_error("lyapunov: samples must be >= 2");
    }
};

inline void to_json(json& j, const LyapunovConfig& c) {
    j = json{{"w_grid", c.w_grid}, {"w2n", c.w2n}, {"samples", c.samples}, {"disorder", c.disorder}};
}
inline void from_json(const json& j, LyapunovConfig& c) {
    c.w_grid = j.value("w_grid", c.w_grid);
    c.w2n = j.value("w2n", c.w2n);
    c.samples = j.value("samples", c.samples);
    if (j.contains("disorder")) j.at("disorder").get_to(c.disorder);
}

struct GammaTailConfig {
    std::vector<double> w_grid{0.02, 0.05};
    std::vector<double> w2n_grid{1.0, 2.0, 4.0};
    std::uint64_t samples = 10000;
    DisorderSpec disorder;
    double alpha_floor_fraction = 0.1; // threshold = fraction * pi^2 E(B^2)/8
    double collapse_tol = 0.25;

    void validate() const {
        if (w_grid.empty() || w2n_grid.empty()) throw config_error("gamma-tail: empty grid");
        for (double w : w_grid)
            if (!(w > 0.0) || w > kDefaultW0 + 1e-12)
                throw config_error("gamma-tail: need 0 < w <= 0.2");
        for (double v : w2n_grid)
            if (!(v >= 0.25)) throw config_error("gamma-tail: need w^2 n >= 1/4");
        if (samples < 2) throw config_error("gamma-tail: samples must be >= 2");
    }
};

inline void to_json(json& j, const GammaTailConfig& c) {
    j = json{{"w_grid", c.w_grid},   {"w2n_grid", c.w2n_grid},
             {"samples", c.samples}, {"disorder", c.disorder},
             {"alpha_floor_fraction", c.alpha_floor_fraction},
             {"collapse_tol", c.collapse_tol}};
}
inline void from_json(const json& j, GammaTailConfig& c) {
    c.w_grid = j.value("w_grid", c.w_grid);
    c.w2n_grid = j.value("w2n_grid", c.w2n_grid);
    c.samples = j.value("samples", c.samples);
    if (j.contains("disorder")) j.at("disorder").get_to(c.disorder);
    c.alpha_floor_fraction = j.value("alpha_floor_fraction", c.alpha_floor_fraction);
    c.collapse_tol = j.value("collapse_tol", c.collapse_tol);
}

struct DensityCell {
    double w = 0.05;
    std::uint64_t n = 400;
};

inline void to_json(json& j, const DensityCell& c) { j = json{{"w", c.w}, {"n", c.n}}; }
inline void from_json(const json& j, DensityCell& c) {
    c.w = j.value("w", c.w);
    c.n = j.value("n", c.n);
}

struct DensityConfig {
    std::vector<DensityCell> cells{{0.05, 200}, {0.05, 400}, {0.02, 1250}, {0.02, 2500}};
    DensityCell calibration{0.035, 410};
    std::uint64_t samples = 1000000;
    std::uint64_t seeds = 3;
    DisorderSpec disorder;
    double x0 = 0.3;
    double margin = 1.4; // frozen constants are calibration value x/ margin

    void validate() const {
        if (cells.empty()) throw config_error("density: no cells");
        for (const auto& c : cells) {
            if (!(c.w > 0.0) || c.w > kDefaultW0) throw config_error("density: need 0 < w <= 0.2");
            if (!(c.w * static_cast<double>(c.n) >= 1.0 - 1e-9))
                throw config_error("density: sup bound regime needs w n >= 1");
            const double w2n = c.w * c.w * static_cast<double>(c.n);
            if (!(w2n >= 0.5 - 1e-9 && w2n <= 1.0 + 1e-9))
                throw config_error("density: cells must satisfy 1/2 <= w^2 n <= 1");
        }
        if (samples < 1000) throw config_error("density: samples too small to resolve bins");
    }
};

inline void to_json(json& j, const DensityConfig& c) {
    j = json{{"cells", c.cells},   {"calibration", c.calibration}, {"samples", c.samples},
             {"seeds", c.seeds},   {"disorder", c.disorder},       {"x0", c.x0},
             {"margin", c.margin}};
}
inline void from_json(const json& j, DensityConfig& c) {
    c.cells = j.value("cells", c.cells);
    if (j.contains("calibration")) j.at("calibration").get_to(c.calibration);
    c.samples = j.value("samples", c.samples);
    c.seeds = j.value("seeds", c.seeds);
    if (j.contains("disorder")) j.at("disorder").get_to(c.disorder);
    c.x0 = j.value("x0", c.x0);
    c.margin = j.value("margin", c.margin);
}

struct SpectralConfig {
    std::vector<DensityCell> cells{{0.05, 100}, {0.02, 1000}, {0.03, 1000}};
    DensityCell calibration{0.025, 500};
    double eps_prime = 0.2; // sandwich window |xi w| <= eps'
    std::vector<double> y_grid{0.25, 0.5, 0.8};
    DisorderSpec disorder;
    double margin = 1.5;
    double bump_width_factor = 1.0; // bump half-width = factor * w^2
    // kernel lower bound: eps <= w^2 n <= 2 eps with a window 10 eps around
    // the transported center. The window is 10 eps ~ 69 sqrt(eps) kernel
    // widths, so w must be small enough that n >= 8 still lands the window
    // inside the kernel bulk: w = 0.008 puts it at ~1.6 sigma.
    double floor_eps = 5.12e-4;
    double floor_w = 0.008;

    void validate() const {
        if (cells.empty()) throw config_error("spectral: no cells");
        for (const auto& c : cells) {
            if (!(c.w > 0.0) || c.w > kDefaultW0) throw config_error("spectral: need 0 < w <= 0.2");
            if (c.n < 8) throw config_error("spectral: synthesis bounds need n >= 8");
            if (static_cast<double>(c.n) > 1.0 / (c.w * c.w) + 1e-9)
                throw config_error("spectral: kernel bounds need n <= w^-2");
        }
        if (!(eps_prime > 0.0 && eps_prime < 1.0)) throw config_error("spectral: bad eps'");
    }
};

inline void to_json(json& j, const SpectralConfig& c) {
    j = json{{"cells", c.cells},        {"calibration", c.calibration},
             {"eps_prime", c.eps_prime}, {"y_grid", c.y_grid},
             {"disorder", c.disorder},   {"margin", c.margin},
             {"bump_width_factor", c.bump_width_factor},
             {"floor_eps", c.floor_eps}, {"floor_w", c.floor_w}};
}
inline void from_json(const json& j, SpectralConfig& c) {
    c.cells = j.value("cells", c.cells);
    if (j.contains("calibration")) j.at("calibration").get_to(c.calibration);
    c.eps_prime = j.value("eps_prime", c.eps_prime);
    c.y_grid = j.value("y_grid", c.y_grid);
    if (j.contains("disorder")) j.at("disorder").get_to(c.disorder);
    c.margin = j.value("margin", c.margin);
    c.bump_width_factor = j.value("bump_width_factor", c.bump_width_factor);
    c.floor_eps = j.value("floor_eps", c.floor_eps);
    c.floor_w = j.value("floor_w", c.floor_w);
}

struct CrosscheckConfig {
    std::vector<std::uint64_t> n_grid{8, 16};
    std::uint64_t disorder_configs = 3;
    DisorderSpec disorder;
    double T1 = 1.5;
    double Tn = 0.5;
    double lambda = 1.0;
    double dt = 0.0; // 0: default policy
    double t_total = 60000.0;
    double burn_factor = 50.0; // t_burn = factor * n / lambda
    double cv_tol = 0.10;

    void validate() const {
        for (auto n : n_grid)
            if (n < 2 || n > 32)
                throw config_error("crosscheck: n must be in [2, 32] (SDE averaging budget)");
        if (disorder_configs < 2) throw config_error("crosscheck: need >= 2 disorder configs");
        if (!(T1 >= Tn) || !(Tn > 0.0)) throw config_error("crosscheck: need T1 >= Tn > 0");
        if (!(lambda > 0.0)) throw config_error("crosscheck: need lambda > 0");
        if (!(t_total > 0.0)) throw config_error("crosscheck: need t_total > 0");
    }
};

inline void to_json(json& j, const CrosscheckConfig& c) {
    j = json{{"n_grid", c.n_grid}, {"disorder_configs", c.disorder_configs},
             {"disorder", c.disorder}, {"T1", c.T1},     {"Tn", c.Tn},
             {"lambda", c.lambda},     {"dt", c.dt},     {"t_total", c.t_total},
             {"burn_factor", c.burn_factor}, {"cv_tol", c.cv_tol}};
}
inline void from_json(const json& j, CrosscheckConfig& c) {
    c.n_grid = j.value("n_grid", c.n_grid);
    c.disorder_configs = j.value("disorder_configs", c.disorder_configs);
    if (j.contains("disorder")) j.at("disorder").get_to(c.disorder);
    c.T1 = j.value("T1", c.T1);
    c.Tn = j.value("Tn", c.Tn);
    c.lambda = j.value("lambda", c.lambda);
    c.dt = j.value("dt", c.dt);
    c.t_total = j.value("t_total", c.t_total);
    c.burn_factor = j.value("burn_factor", c.burn_factor);
    c.cv_tol = j.value("cv_tol", c.cv_tol);
}

struct RgSandwichConfig {
    std::vector<double> w2n_grid{0.5, 1.0, 2.0, 4.0};
    std::vector<std::uint64_t> n_grid{400, 800, 1600, 3200};
    double w_lo = 0.002;
    double w_hi = 0.2;
    int w_nodes = 24;
    std::uint64_t samples = 200;
    DisorderSpec disorder;

    void validate() const {
        if (n_grid.empty() || w2n_grid.empty()) throw config_error("rg-sandwich: empty grid");
        if (!(w_lo > 0.0 && w_hi > w_lo && w_hi <= kDefaultW0 + 1e-12))
            throw config_error("rg-sandwich: need 0 < w_lo < w_hi <= 0.2");
        if (samples < 2) throw config_error("rg-sandwich: samples must be >= 2");
    }
};

inline void to_json(json& j, const RgSandwichConfig& c) {
    j = json{{"w2n_grid", c.w2n_grid}, {"n_grid", c.n_grid}, {"w_lo", c.w_lo},
             {"w_hi", c.w_hi},         {"w_nodes", c.w_nodes}, {"samples", c.samples},
             {"disorder", c.disorder}};
}
inline void from_json(const json& j, RgSandwichConfig& c) {
    c.w2n_grid = j.value("w2n_grid", c.w2n_grid);
    c.n_grid = j.value("n_grid", c.n_grid);
    c.w_lo = j.value("w_lo", c.w_lo);
    c.w_hi = j.value("w_hi", c.w_hi);
    c.w_nodes = j.value("w_nodes", c.w_nodes);
    c.samples = j.value("samples", c.samples);
    if (j.contains("disorder")) j.at("disorder").get_to(c.disorder);
}

// Top-level experiment document.
struct ExperimentConfig {
    std::uint64_t seed = 12345;
    int threads = 0; // 0: hardware concurrency
    ScalingConfig scaling;
    VerifyConfig verify;
    LyapunovConfig lyapunov;
    GammaTailConfig gamma_tail;
    DensityConfig density;
    SpectralConfig spectral;
    CrosscheckConfig crosscheck;
    RgSandwichConfig rg_sandwich;
};

inline void to_json(json& j, const ExperimentConfig& c) {
    j = json{{"schema", kConfigSchema},
             {"seed", c.seed},
             {"threads", c.threads},
             {"scaling", c.scaling},
             {"verify", c.verify},
             {"lyapunov", c.lyapunov},
             {"gamma_tail", c.gamma_tail},
             {"density", c.density},
             {"spectral", c.spectral},
             {"crosscheck", c.crosscheck},
             {"rg_sandwich", c.rg_sandwich}};
}
// Execution details (worker count, test hooks) do not change the science and
// are excluded from the identity used for hashing and output naming.
inline json canonical_config(const ExperimentConfig& c) {
    json j = c;
    j.erase("threads");
    j["scaling"].erase("halt_after_cells");
    return j;
}

inline void from_json(const json& j, ExperimentConfig& c) {
    const int schema = j.value("schema", kConfigSchema);
    if (schema != kConfigSchema)
        throw config_error("unsupported config schema " + std::to_string(schema));
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    if (j.contains("scaling")) j.at("scaling").get_to(c.scaling);
    if (j.contains("verify")) j.at("verify").get_to(c.verify);
    if (j.contains("lyapunov")) j.at("lyapunov").get_to(c.lyapunov);
    if (j.contains("gamma_tail")) j.at("gamma_tail").get_to(c.gamma_tail);
    if (j.contains("density")) j.at("density").get_to(c.density);
    if (j.contains("spectral")) j.at("spectral").get_to(c.spectral);
    if (j.contains("crosscheck")) j.at("crosscheck").get_to(c.crosscheck);
    if (j.contains("rg_sandwich")) j.at("rg_sandwich").get_to(c.rg_sandwich);
}

} // namespace chainflux

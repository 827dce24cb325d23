#pragma once

// Seed-reproducible ensembles of collapse runs and goodness-of-fit against
// the starting simplex coordinates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qimage/collapse_walk.hpp"
#include "qimage/errors.hpp"
#include "qimage/rng.hpp"
#include "qimage/simplex.hpp"

namespace qimage {

inline constexpr const char* kVersion = "0.1.0";

struct EnsembleConfig {
    std::uint64_t runs = 1;
    std::uint64_t master_seed = 0;
    WalkConfig walk{};
    /// Probability that a completed run is registered by the detector.
    double efficiency = 1.0;
    /// Worker threads; 0 means hardware concurrency. Does not affect results.
    unsigned threads = 0;

    void validate() const {
        if (runs < 1) throw ValidationError("EnsembleConfig: runs must be >= 1");
        if (!(efficiency > 0.0 && efficiency <= 1.0)) throw ValidationError("EnsembleConfig: efficiency must be in (0, 1]");
        walk.validate();
    }
};

struct ChiSquare {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
    friend bool operator==(const ChiSquare&, const ChiSquare&) = default;
};

struct EnsembleStats {
    std::vector<double> p;  ///< starting coordinates
    EnsembleConfig config;
    std::vector<std::uint64_t> counts;
    std::uint64_t registered = 0;
    std::vector<double> frequencies;
    /// step_histogram[0] counts zero-step runs; bucket b >= 1 holds [2^(b-1), 2^b).
    std::vector<std::uint64_t> step_histogram;
    std::uint64_t total_steps = 0;  ///< over registered runs
    /// Absent when some expected count is below 5.
    std::optional<ChiSquare> chi_square;

    [[nodiscard]] double mean_steps() const {
        return registered == 0 ? 0.0 : static_cast<double>(total_steps) / static_cast<double>(registered);
    }
};

namespace detail {

inline std::size_t step_bucket(std::uint64_t steps) {
    std::size_t b = 0;
    while (steps != 0) {
        steps >>= 1;
        ++b;
    }
    return b;
}

// Series for P(a, x), valid for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double sum = 1.0 / a, term = sum, ap = a;
    for (int n = 0; n < 10000; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x), valid for x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw ValidationError("gamma_q: need a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_fraction(a, x);
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
inline double chi_square_survival(double statistic, std::size_t dof) {
    return gamma_q(0.5 * static_cast<double>(dof), 0.5 * statistic);
}

/// Pearson test of observed counts against p; dof = d - 1.
inline ChiSquare chi_square_gof(std::span<const std::uint64_t> counts, const SimplexPoint& p) {
    if (counts.size() != p.dim()) throw ShapeError("chi_square_gof: counts and p differ in dimension");
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) throw DegenerateEnsembleError("chi_square_gof: no registered runs");
    double stat = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double expected = p[k] * static_cast<double>(total);
        if (expected < 5.0)
            throw InsufficientSampleError("chi_square_gof: expected count " + std::to_string(expected) +
                                          " < 5 at vertex " + std::to_string(k));
        const double diff = static_cast<double>(counts[k]) - expected;
        stat += diff * diff / expected;
    }
    const std::size_t dof = p.dim() - 1;
    return ChiSquare{stat, dof, chi_square_survival(stat, dof)};
}

inline ChiSquare chi_square_gof(const EnsembleStats& stats, const SimplexPoint& p) {
    return chi_square_gof(std::span<const std::uint64_t>(stats.counts), p);
}

/// Single run `index`: registration draw, then the collapse, all from the
/// run's own stream.
struct RunResult {
    bool registered = false;
    CollapseOutcome outcome;
};

inline RunResult run_one(const SimplexPoint& p, const EnsembleConfig& config, std::uint64_t index) {
    Xoshiro256 rng = Xoshiro256::for_stream(config.master_seed, index);
    const bool registered = rng.bernoulli(config.efficiency);
    return RunResult{registered, run_collapse(p, config.walk, rng)};
}

inline unsigned resolve_threads(unsigned requested, std::uint64_t runs) {
    unsigned t = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::uint64_t>(t, runs));
}

/// Runs are split into contiguous blocks, one per worker; tallies are summed
/// afterwards, so the result depends only on (p, config minus threads).
inline EnsembleStats run_ensemble(const SimplexPoint& p, const EnsembleConfig& config) {
    config.validate();
    const std::size_t d = p.dim();

    struct Tally {
        std::vector<std::uint64_t> counts;
        std::vector<std::uint64_t> histogram;
        std::uint64_t registered = 0;
        std::uint64_t steps = 0;
        std::exception_ptr error;
    };

    const unsigned workers = resolve_threads(config.threads, config.runs);
    std::vector<Tally> tallies(workers);
    auto work = [&](unsigned w) {
        Tally& t = tallies[w];
        t.counts.assign(d, 0);
        t.histogram.assign(66, 0);
        const std::uint64_t begin = config.runs * w / workers;
        const std::uint64_t end = config.runs * (w + 1) / workers;
        try {
            for (std::uint64_t r = begin; r < end; ++r) {
                const RunResult res = run_one(p, config, r);
                if (!res.registered) continue;
                ++t.registered;
                ++t.counts[res.outcome.vertex];
                t.steps += res.outcome.steps;
                ++t.histogram[detail::step_bucket(res.outcome.steps)];
            }
        } catch (...) {
            t.error = std::current_exception();
        }
    };

    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }

    EnsembleStats stats;
    stats.p.assign(p.coords().begin(), p.coords().end());
    stats.config = config;
    stats.counts.assign(d, 0);
    std::vector<std::uint64_t> histogram(66, 0);
    for (const Tally& t : tallies) {
        if (t.error) std::rethrow_exception(t.error);
        for (std::size_t k = 0; k < d; ++k) stats.counts[k] += t.counts[k];
        for (std::size_t b = 0; b < histogram.size(); ++b) histogram[b] += t.histogram[b];
        stats.registered += t.registered;
        stats.total_steps += t.steps;
    }
    if (stats.registered == 0) throw DegenerateEnsembleError("run_ensemble: no run was registered");

    const auto last = std::find_if(histogram.rbegin(), histogram.rend(), [](auto c) { return c != 0; });
    histogram.erase(last.base(), histogram.end());
    stats.step_histogram = std::move(histogram);

    for (auto c : stats.counts)
        stats.frequencies.push_back(static_cast<double>(c) / static_cast<double>(stats.registered));
    try {
        stats.chi_square = chi_square_gof(stats, p);
    } catch (const InsufficientSampleError&) {
        stats.chi_square.reset();
    }
    return stats;
}

}  // namespace qimage

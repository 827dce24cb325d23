#pragma once

// First-passage random walk on a resolution-M lattice of the probability
// simplex. Each step picks an unordered pair of live coordinates uniformly
// and moves one quantum between them in a random direction, so every
// coordinate is a martingale. A coordinate that reaches zero is frozen and
// the walk continues on the lower-dimensional face until one vertex is left.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "qimage/errors.hpp"
#include "qimage/rng.hpp"
#include "qimage/simplex.hpp"

namespace qimage {

enum class Rounding {
    LargestRemainder,  ///< floor, then leftover quanta to the largest remainders (ties: lowest index)
    Stochastic,        ///< unbiased: E[counts/M] = p exactly
};

struct WalkConfig {
    std::uint64_t resolution = 100;
    std::uint64_t max_steps = 100 * 100 * 100;
    Rounding rounding = Rounding::LargestRemainder;

    /// Resolution M with the default step budget 100 M^2.
    static WalkConfig with_resolution(std::uint64_t m, Rounding rounding = Rounding::LargestRemainder) {
        return WalkConfig{m, 100 * m * m, rounding};
    }

    void validate() const {
        if (resolution < 2) throw ValidationError("WalkConfig: resolution M must be >= 2");
        if (max_steps < 1) throw ValidationError("WalkConfig: max_steps must be >= 1");
    }
};

/// Integer occupation vector summing to M; `active` lists the non-zero
/// coordinates in increasing index order.
class LatticeWalkState {
public:
    explicit LatticeWalkState(std::vector<std::uint64_t> counts) : counts_(std::move(counts)) {
        if (counts_.size() < 2) throw ValidationError("LatticeWalkState: need at least 2 coordinates");
        for (std::size_t k = 0; k < counts_.size(); ++k) {
            total_ += counts_[k];
            if (counts_[k] > 0) active_.push_back(k);
        }
        if (active_.empty()) throw ValidationError("LatticeWalkState: all counts are zero");
    }

    [[nodiscard]] std::size_t dim() const { return counts_.size(); }
    [[nodiscard]] std::uint64_t resolution() const { return total_; }
    [[nodiscard]] const std::vector<std::uint64_t>& counts() const { return counts_; }
    [[nodiscard]] const std::vector<std::size_t>& active() const { return active_; }
    [[nodiscard]] bool absorbed() const { return active_.size() == 1; }

    /// Moves one quantum from `from` to `to` (both active). Returns true if
    /// `from` emptied and was removed from the active set.
    bool transfer(std::size_t from, std::size_t to) {
        --counts_[from];
        ++counts_[to];
        if (counts_[from] != 0) return false;
        active_.erase(std::find(active_.begin(), active_.end(), from));
        return true;
    }

    friend bool operator==(const LatticeWalkState& a, const LatticeWalkState& b) { return a.counts_ == b.counts_; }

private:
    std::vector<std::uint64_t> counts_;
    std::vector<std::size_t> active_;
    std::uint64_t total_ = 0;
};

/// Adds `leftover` quanta to distinct entries of `counts` by systematic
/// sampling with offset u in [0, 1): points u, u+1, ... laid over consecutive
/// intervals of length remainder[k] (scaled to total `leftover`). Each
/// remainder is < 1, so an entry is picked at most once, and with probability
/// exactly remainder[k] over uniform u.
inline void systematic_round(const std::vector<double>& remainder, std::uint64_t leftover, double u,
                             std::vector<std::uint64_t>& counts) {
    const std::size_t d = remainder.size();
    double sum = 0.0;
    std::size_t last = d;
    for (std::size_t k = 0; k < d; ++k) {
        sum += remainder[k];
        if (remainder[k] > 0.0) last = k;
    }
    const double scale = sum > 0.0 ? static_cast<double>(leftover) / sum : 0.0;
    double lo = 0.0;
    std::uint64_t placed = 0;
    for (std::size_t k = 0; k < d && placed < leftover; ++k) {
        if (remainder[k] <= 0.0) continue;
        const double hi = k == last ? static_cast<double>(leftover) : lo + remainder[k] * scale;
        if (u + static_cast<double>(placed) < hi) {
            ++counts[k];
            ++placed;
        }
        lo = hi;
    }
}

/// Lattice point with counts/M close to p; see Rounding.
inline LatticeWalkState discretize(const SimplexPoint& p, const WalkConfig& config, Xoshiro256& rng) {
    config.validate();
    const std::size_t d = p.dim();
    const double m = static_cast<double>(config.resolution);
    std::vector<std::uint64_t> counts(d);
    std::vector<double> remainder(d);
    std::uint64_t assigned = 0;
    for (std::size_t k = 0; k < d; ++k) {
        double raw = p[k] * m;
        if (std::abs(raw - std::round(raw)) < 1e-9) raw = std::round(raw);
        const double fl = std::floor(raw);
        counts[k] = static_cast<std::uint64_t>(fl);
        remainder[k] = raw - fl;
        assigned += counts[k];
    }
    const std::uint64_t leftover = config.resolution - std::min(assigned, config.resolution);

    if (config.rounding == Rounding::LargestRemainder) {
        std::vector<std::size_t> order(d);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
        for (std::uint64_t r = 0; r < leftover; ++r) ++counts[order[r]];
    } else {
        systematic_round(remainder, leftover, rng.uniform01(), counts);
    }
    return LatticeWalkState(std::move(counts));
}

struct StepEvent {
    std::size_t from = 0;
    std::size_t to = 0;
    bool eliminated = false;  ///< `from` reached zero on this step
};

/// Maps r in [0, k(k-1)) bijectively onto ordered pairs (from, to), from != to,
/// of positions in the active list.
inline std::pair<std::size_t, std::size_t> ordered_pair(std::uint64_t r, std::size_t k) {
    const auto from = static_cast<std::size_t>(r / (k - 1));
    auto to = static_cast<std::size_t>(r % (k - 1));
    if (to >= from) ++to;
    return {from, to};
}

/// In-place step. Requires at least two active coordinates.
inline StepEvent advance(LatticeWalkState& state, Xoshiro256& rng) {
    const auto& active = state.active();
    const std::size_t k = active.size();
    if (k < 2) throw std::logic_error("step: walk already absorbed (fewer than 2 active coordinates)");
    // One draw over the k(k-1) ordered pairs = uniform unordered pair + fair direction.
    const auto [a, b] = ordered_pair(rng.below(static_cast<std::uint64_t>(k) * (k - 1)), k);
    StepEvent ev{active[a], active[b], false};
    ev.eliminated = state.transfer(ev.from, ev.to);
    return ev;
}

[[nodiscard]] inline LatticeWalkState step(LatticeWalkState state, Xoshiro256& rng) {
    advance(state, rng);
    return state;
}

struct Reduction {
    std::uint64_t step = 0;
    std::size_t index = 0;
    friend bool operator==(const Reduction&, const Reduction&) = default;
};

struct CollapseOutcome {
    std::size_t vertex = 0;
    std::uint64_t steps = 0;
    /// d-1 eliminations in order; coordinates that start at zero are listed at step 0.
    std::vector<Reduction> reductions;
    friend bool operator==(const CollapseOutcome&, const CollapseOutcome&) = default;
};

/// Walks an already discretized state to absorption.
inline CollapseOutcome run_from(LatticeWalkState state, std::uint64_t max_steps, Xoshiro256& rng) {
    CollapseOutcome out;
    out.reductions.reserve(state.dim() - 1);
    for (std::size_t k = 0; k < state.dim(); ++k)
        if (state.counts()[k] == 0) out.reductions.push_back({0, k});
    while (!state.absorbed()) {
        if (out.steps >= max_steps)
            throw RunawayError("run_collapse: no absorption within " + std::to_string(max_steps) + " steps");
        const StepEvent ev = advance(state, rng);
        ++out.steps;
        if (ev.eliminated) out.reductions.push_back({out.steps, ev.from});
    }
    out.vertex = state.active().front();
    return out;
}

inline CollapseOutcome run_collapse(const SimplexPoint& p, const WalkConfig& config, Xoshiro256& rng) {
    return run_from(discretize(p, config, rng), config.max_steps, rng);
}

/// Number of lattice points C(M+d-1, d-1), saturating at +inf.
inline double lattice_size(std::uint64_t m, std::size_t d) {
    double c = 1.0;
    for (std::size_t k = 1; k < d; ++k) c = c * static_cast<double>(m + k) / static_cast<double>(k);
    return c;
}

inline constexpr double kOracleCapacity = 2e6;

namespace detail {

struct CountsHash {
    std::size_t operator()(const std::vector<std::uint64_t>& v) const {
        std::uint64_t h = 0x243F6A8885A308D3ULL;
        for (auto x : v) h = mix64(h ^ x);
        return static_cast<std::size_t>(h);
    }
};

inline void enumerate_compositions(std::uint64_t remaining, std::size_t pos, std::vector<std::uint64_t>& cur,
                                   std::vector<std::vector<std::uint64_t>>& out) {
    if (pos + 1 == cur.size()) {
        cur[pos] = remaining;
        out.push_back(cur);
        return;
    }
    for (std::uint64_t c = 0; c <= remaining; ++c) {
        cur[pos] = c;
        enumerate_compositions(remaining - c, pos + 1, cur, out);
    }
}

}  // namespace detail

/// Exact vertex-absorption probabilities from `state`, by solving the
/// first-step equations h(x) = sum_y P(x,y) h(y) over every lattice point
/// reachable from it (all compositions of M over its active coordinates).
/// Sparse LU solve; the linear-system residual is checked against 1e-10.
inline std::vector<double> absorption_oracle(const LatticeWalkState& state) {
    const std::size_t d = state.dim();
    const std::uint64_t m = state.resolution();
    if (lattice_size(m, d) > kOracleCapacity)
        throw CapacityError("absorption_oracle: C(M+d-1, d-1) exceeds " + std::to_string(kOracleCapacity) +
                            " lattice states");

    std::vector<double> result(d, 0.0);
    if (state.absorbed()) {
        result[state.active().front()] = 1.0;
        return result;
    }

    const std::vector<std::size_t>& support = state.active();
    const std::size_t k = support.size();

    // Reduced coordinates over the support.
    std::vector<std::vector<std::uint64_t>> points;
    std::vector<std::uint64_t> cur(k);
    detail::enumerate_compositions(m, 0, cur, points);

    // Transient points (>= 2 non-zero) become unknowns.
    std::unordered_map<std::vector<std::uint64_t>, std::size_t, detail::CountsHash> index;
    std::vector<std::size_t> transient;
    for (std::size_t n = 0; n < points.size(); ++n) {
        const auto nonzero = std::count_if(points[n].begin(), points[n].end(), [](auto c) { return c > 0; });
        if (nonzero >= 2) {
            index.emplace(points[n], transient.size());
            transient.push_back(n);
        }
    }
    const auto unknowns = static_cast<Eigen::Index>(transient.size());

    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(unknowns, static_cast<Eigen::Index>(k));
    std::vector<std::uint64_t> next(k);
    for (Eigen::Index row = 0; row < unknowns; ++row) {
        const auto& x = points[transient[static_cast<std::size_t>(row)]];
        std::vector<std::size_t> live;
        for (std::size_t c = 0; c < k; ++c)
            if (x[c] > 0) live.push_back(c);
        const double prob = 1.0 / static_cast<double>(live.size() * (live.size() - 1));
        triplets.emplace_back(row, row, 1.0);
        for (std::size_t from : live) {
            for (std::size_t to : live) {
                if (from == to) continue;
                next = x;
                --next[from];
                ++next[to];
                auto it = index.find(next);
                if (it != index.end()) {
                    triplets.emplace_back(row, static_cast<Eigen::Index>(it->second), -prob);
                } else {
                    // Absorbed: only `to` can be the surviving coordinate.
                    rhs(row, static_cast<Eigen::Index>(to)) += prob;
                }
            }
        }
    }

    Eigen::SparseMatrix<double> a(unknowns, unknowns);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw ConsistencyError("absorption_oracle: LU factorization failed");
    const Eigen::MatrixXd h = lu.solve(rhs);
    const double residual = (a * h - rhs).cwiseAbs().maxCoeff();
    if (!(residual < 1e-10))
        throw ConsistencyError("absorption_oracle: linear-system residual " + std::to_string(residual));

    std::vector<std::uint64_t> start(k);
    for (std::size_t c = 0; c < k; ++c) start[c] = state.counts()[support[c]];
    const auto row = static_cast<Eigen::Index>(index.at(start));
    for (std::size_t c = 0; c < k; ++c) result[support[c]] = h(row, static_cast<Eigen::Index>(c));
    return result;
}

}  // namespace qimage

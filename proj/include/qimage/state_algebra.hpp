#pragma once

// Finite-dimensional state vectors over labeled bases, slot-labeled tensor
// products, permutation parity and pairwise (anti)symmetrization.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "qimage/errors.hpp"

namespace qimage {

using cplx = std::complex<double>;

/// Absolute per-component tolerance for exact algebraic identities.
inline constexpr double kIdentityTolerance = 1e-12;
/// Terms with smaller coefficient magnitude are dropped on canonicalization.
inline constexpr double kTermDropTolerance = 1e-15;

enum class Statistics { Bose, Fermi };

/// Tensor-factor roles. P1/P2 are the two particle labels of a bare pair;
/// the rest are the system/detector roles, with hole variants.
enum class Slot { P1, P2, S, D, Dbar, SHole, DHole, DbarHole };

inline std::string_view slot_name(Slot s) {
    switch (s) {
        case Slot::P1: return "1";
        case Slot::P2: return "2";
        case Slot::S: return "S";
        case Slot::D: return "D";
        case Slot::Dbar: return "Dbar";
        case Slot::SHole: return "S_h";
        case Slot::DHole: return "D_h";
        case Slot::DbarHole: return "Dbar_h";
    }
    return "?";
}

/// D <-> Dbar and D_h <-> Dbar_h. System and particle slots map to themselves.
inline Slot conjugate_slot(Slot s) {
    switch (s) {
        case Slot::D: return Slot::Dbar;
        case Slot::Dbar: return Slot::D;
        case Slot::DHole: return Slot::DbarHole;
        case Slot::DbarHole: return Slot::DHole;
        default: return s;
    }
}

struct BasisLabel {
    std::string name;
    bool conjugated = false;

    [[nodiscard]] BasisLabel conjugate() const { return {name, !conjugated}; }
    [[nodiscard]] std::string str() const { return conjugated ? name + "*" : name; }

    friend auto operator<=>(const BasisLabel&, const BasisLabel&) = default;
    friend bool operator==(const BasisLabel&, const BasisLabel&) = default;
};

/// Labels prefix0 .. prefix{dim-1}.
inline std::vector<BasisLabel> indexed_labels(std::size_t dim, std::string_view prefix = "e") {
    std::vector<BasisLabel> out;
    out.reserve(dim);
    for (std::size_t k = 0; k < dim; ++k) out.push_back({std::string(prefix) + std::to_string(k), false});
    return out;
}

/// Amplitude vector over an ordered orthonormal basis, tagged with a slot.
/// Normalization is not forced on construction; call normalized().
class PureState {
public:
    PureState(std::vector<BasisLabel> basis, std::vector<cplx> amplitudes, Slot slot)
        : basis_(std::move(basis)), amps_(std::move(amplitudes)), slot_(slot) {
        if (amps_.empty()) throw ValidationError("PureState: dimension must be >= 1");
        if (basis_.size() != amps_.size())
            throw ShapeError("PureState: basis has " + std::to_string(basis_.size()) + " labels but " +
                             std::to_string(amps_.size()) + " amplitudes");
        auto sorted = basis_;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ValidationError("PureState: duplicate basis label");
    }

    /// State over labels e0..e{d-1}.
    static PureState from_amplitudes(std::vector<cplx> amplitudes, Slot slot = Slot::S,
                                     std::string_view prefix = "e") {
        auto labels = indexed_labels(amplitudes.size(), prefix);
        return PureState(std::move(labels), std::move(amplitudes), slot);
    }

    static PureState basis_state(std::vector<BasisLabel> basis, std::size_t k, Slot slot) {
        if (k >= basis.size()) throw ValidationError("basis_state: index out of range");
        std::vector<cplx> amps(basis.size(), cplx{0.0, 0.0});
        amps[k] = 1.0;
        return PureState(std::move(basis), std::move(amps), slot);
    }

    [[nodiscard]] std::size_t dim() const { return amps_.size(); }
    [[nodiscard]] std::span<const cplx> amplitudes() const { return amps_; }
    [[nodiscard]] std::span<const BasisLabel> basis() const { return basis_; }
    [[nodiscard]] Slot slot() const { return slot_; }
    [[nodiscard]] cplx amplitude(std::size_t k) const { return amps_.at(k); }

    [[nodiscard]] double norm() const {
        double s = 0.0;
        for (const auto& a : amps_) s += std::norm(a);
        return std::sqrt(s);
    }

    [[nodiscard]] PureState normalized() const {
        const double n = norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("normalize: zero or non-finite norm");
        return scaled(cplx{1.0 / n, 0.0});
    }

    [[nodiscard]] PureState scaled(cplx c) const {
        auto amps = amps_;
        for (auto& a : amps) a *= c;
        return PureState(basis_, std::move(amps), slot_);
    }

    [[nodiscard]] PureState with_slot(Slot s) const { return PureState(basis_, amps_, s); }

    [[nodiscard]] bool same_basis(const PureState& o) const { return basis_ == o.basis_; }

    friend PureState operator+(const PureState& a, const PureState& b) {
        a.require_compatible(b, "operator+");
        auto amps = a.amps_;
        for (std::size_t k = 0; k < amps.size(); ++k) amps[k] += b.amps_[k];
        return PureState(a.basis_, std::move(amps), a.slot_);
    }

    friend PureState operator-(const PureState& a, const PureState& b) { return a + b.scaled(-1.0); }

    void require_compatible(const PureState& o, const char* where) const {
        if (!same_basis(o)) throw ShapeError(std::string(where) + ": states live on different bases");
    }

private:
    std::vector<BasisLabel> basis_;
    std::vector<cplx> amps_;
    Slot slot_;
};

/// <a|b>, conjugate-linear in a. Both states must share the same ordered basis.
inline cplx inner_product(const PureState& a, const PureState& b) {
    a.require_compatible(b, "inner_product");
    cplx s{0.0, 0.0};
    for (std::size_t k = 0; k < a.dim(); ++k) s += std::conj(a.amplitudes()[k]) * b.amplitudes()[k];
    return s;
}

/// Largest per-component absolute difference between two states on one basis.
inline double max_abs_difference(const PureState& a, const PureState& b) {
    a.require_compatible(b, "max_abs_difference");
    double m = 0.0;
    for (std::size_t k = 0; k < a.dim(); ++k) m = std::max(m, std::abs(a.amplitudes()[k] - b.amplitudes()[k]));
    return m;
}

/// Conjugates amplitudes, toggles every label's conjugation flag and maps the
/// slot to its conjugate. An involution; antilinear in the input.
inline PureState conjugate_state(const PureState& psi) {
    std::vector<BasisLabel> labels;
    labels.reserve(psi.dim());
    for (const auto& l : psi.basis()) labels.push_back(l.conjugate());
    std::vector<cplx> amps;
    amps.reserve(psi.dim());
    for (const auto& a : psi.amplitudes()) amps.push_back(std::conj(a));
    return PureState(std::move(labels), std::move(amps), conjugate_slot(psi.slot()));
}

/// One summand of a CompositeState: a coefficient times a product of basis
/// kets, one label per slot.
struct ProductTerm {
    cplx coefficient;
    std::vector<BasisLabel> factors;
};

/// Finite sum of labeled product kets over a fixed slot signature. Distinct
/// slots are distinguishable tensor factors, so two product kets overlap iff
/// every slot carries the same label. Like terms are merged and negligible
/// terms dropped; iteration is in lexicographic label order.
class CompositeState {
public:
    using Key = std::vector<BasisLabel>;

    explicit CompositeState(std::vector<Slot> slots) : slots_(std::move(slots)) {
        if (slots_.empty()) throw ValidationError("CompositeState: empty slot signature");
    }

    /// Expands the tensor product of the given states into basis kets.
    static CompositeState product(std::span<const PureState> factors) {
        if (factors.empty()) throw ValidationError("product: no factors");
        std::vector<Slot> slots;
        for (const auto& f : factors) slots.push_back(f.slot());
        CompositeState out(std::move(slots));
        Key key(factors.size());
        out.expand(factors, 0, cplx{1.0, 0.0}, key);
        return out;
    }

    static CompositeState product(std::initializer_list<PureState> factors) {
        std::vector<PureState> v(factors);
        return product(std::span<const PureState>(v));
    }

    void add(cplx coefficient, Key factors) {
        if (factors.size() != slots_.size())
            throw ShapeError("CompositeState::add: term has " + std::to_string(factors.size()) +
                             " factors, signature has " + std::to_string(slots_.size()));
        auto [it, inserted] = terms_.try_emplace(std::move(factors), coefficient);
        if (!inserted) it->second += coefficient;
        if (std::abs(it->second) < kTermDropTolerance) terms_.erase(it);
    }

    [[nodiscard]] std::span<const Slot> slots() const { return slots_; }
    [[nodiscard]] std::size_t term_count() const { return terms_.size(); }
    [[nodiscard]] bool empty() const { return terms_.empty(); }

    [[nodiscard]] std::vector<ProductTerm> terms() const {
        std::vector<ProductTerm> out;
        out.reserve(terms_.size());
        for (const auto& [k, c] : terms_) out.push_back({c, k});
        return out;
    }

    [[nodiscard]] cplx coefficient(const Key& factors) const {
        auto it = terms_.find(factors);
        return it == terms_.end() ? cplx{0.0, 0.0} : it->second;
    }

    [[nodiscard]] double norm() const {
        double s = 0.0;
        for (const auto& [k, c] : terms_) s += std::norm(c);
        return std::sqrt(s);
    }

    [[nodiscard]] CompositeState scaled(cplx c) const {
        CompositeState out(slots_);
        for (const auto& [k, v] : terms_) out.add(v * c, k);
        return out;
    }

    [[nodiscard]] CompositeState normalized() const {
        const double n = norm();
        if (!(n > 0.0)) throw ValidationError("normalize: zero composite");
        return scaled(cplx{1.0 / n, 0.0});
    }

    friend CompositeState operator+(const CompositeState& a, const CompositeState& b) {
        a.require_signature(b, "operator+");
        CompositeState out = a;
        for (const auto& [k, v] : b.terms_) out.add(v, k);
        return out;
    }

    friend CompositeState operator-(const CompositeState& a, const CompositeState& b) {
        return a + b.scaled(-1.0);
    }

    void require_signature(const CompositeState& o, const char* where) const {
        if (slots_ != o.slots_) throw ShapeError(std::string(where) + ": slot signatures differ");
    }

    /// One line per term: `coef_re coef_im : slot=label, slot=label`.
    [[nodiscard]] std::string dump() const {
        std::string out;
        char buf[64];
        for (const auto& [k, c] : terms_) {
            std::snprintf(buf, sizeof buf, "%.17g %.17g :", c.real() + 0.0, c.imag() + 0.0);
            out += buf;
            for (std::size_t s = 0; s < k.size(); ++s) {
                out += s == 0 ? " " : ", ";
                out += slot_name(slots_[s]);
                out += '=';
                out += k[s].str();
            }
            out += '\n';
        }
        return out;
    }

    friend cplx inner_product(const CompositeState& a, const CompositeState& b) {
        a.require_signature(b, "inner_product");
        cplx s{0.0, 0.0};
        for (const auto& [k, ca] : a.terms_) {
            auto it = b.terms_.find(k);
            if (it != b.terms_.end()) s += std::conj(ca) * it->second;
        }
        return s;
    }

    /// Largest per-term absolute coefficient difference (over the union of terms).
    friend double max_abs_difference(const CompositeState& a, const CompositeState& b) {
        a.require_signature(b, "max_abs_difference");
        double m = 0.0;
        for (const auto& [k, ca] : a.terms_) m = std::max(m, std::abs(ca - b.coefficient(k)));
        for (const auto& [k, cb] : b.terms_)
            if (!a.terms_.contains(k)) m = std::max(m, std::abs(cb));
        return m;
    }

private:
    void expand(std::span<const PureState> factors, std::size_t depth, cplx acc, Key& key) {
        if (depth == factors.size()) {
            add(acc, key);
            return;
        }
        const auto& f = factors[depth];
        for (std::size_t k = 0; k < f.dim(); ++k) {
            const cplx a = f.amplitudes()[k];
            if (a == cplx{0.0, 0.0}) continue;
            key[depth] = f.basis()[k];
            expand(factors, depth + 1, acc * a, key);
        }
    }

    std::vector<Slot> slots_;
    std::map<Key, cplx> terms_;
};

/// Swaps the labels carried by two slot positions in every term.
inline CompositeState exchange_slot_labels(const CompositeState& c, std::size_t first, std::size_t second) {
    if (first >= c.slots().size() || second >= c.slots().size())
        throw ShapeError("exchange_slot_labels: slot position out of range");
    CompositeState out(std::vector<Slot>(c.slots().begin(), c.slots().end()));
    for (auto t : c.terms()) {
        std::swap(t.factors[first], t.factors[second]);
        out.add(t.coefficient, std::move(t.factors));
    }
    return out;
}

/// Parity of a permutation given in one-line notation (perm[k] is the image of k).
/// Computed from the cycle structure: a cycle of length L contributes L-1 transpositions.
inline int permutation_sign(std::span<const std::size_t> perm) {
    const std::size_t n = perm.size();
    std::vector<bool> seen(n, false);
    for (std::size_t v : perm) {
        if (v >= n || seen[v]) throw ValidationError("permutation_sign: not a permutation of 0..n-1");
        seen[v] = true;
    }
    std::fill(seen.begin(), seen.end(), false);
    std::size_t transpositions = 0;
    for (std::size_t start = 0; start < n; ++start) {
        if (seen[start]) continue;
        std::size_t len = 0;
        for (std::size_t k = start; !seen[k]; k = perm[k]) {
            seen[k] = true;
            ++len;
        }
        transpositions += len - 1;
    }
    return transpositions % 2 == 0 ? 1 : -1;
}

/// (1/sqrt 2)[a(1) b(2) +/- b(1) a(2)] on slots (1, 2). Not renormalized: equal
/// bosonic inputs give sqrt(2) on the doubled ket, equal fermionic inputs give
/// the empty composite.
inline CompositeState symmetrize_pair(const PureState& a, const PureState& b, Statistics stats) {
    if (a.dim() != b.dim()) throw ShapeError("symmetrize_pair: dimension mismatch");
    a.require_compatible(b, "symmetrize_pair");
    const PureState a1 = a.with_slot(Slot::P1), a2 = a.with_slot(Slot::P2);
    const PureState b1 = b.with_slot(Slot::P1), b2 = b.with_slot(Slot::P2);
    const double sign = stats == Statistics::Bose ? 1.0 : -1.0;
    const double r = 1.0 / std::sqrt(2.0);
    return CompositeState::product({a1, b2}).scaled(r) + CompositeState::product({b1, a2}).scaled(sign * r);
}

/// Uniform 1-D grid [lo, hi] with `points` samples.
struct Grid {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t points = 0;

    [[nodiscard]] double spacing() const { return (hi - lo) / static_cast<double>(points - 1); }
    [[nodiscard]] double at(std::size_t k) const { return lo + spacing() * static_cast<double>(k); }
};

/// Real Gaussian amplitude whose probability density has standard deviation `width`.
struct GaussianPacket {
    double center = 0.0;
    double width = 1.0;

    /// Samples exp(-(x-c)^2 / (4 w^2)) and normalizes under the trapezoid rule.
    [[nodiscard]] std::vector<double> sample(const Grid& g) const {
        if (!(width > 0.0)) throw ValidationError("GaussianPacket: width must be > 0");
        std::vector<double> v(g.points);
        for (std::size_t k = 0; k < g.points; ++k) {
            const double u = (g.at(k) - center) / width;
            v[k] = std::exp(-0.25 * u * u);
        }
        const double n = std::sqrt(trapezoid(v, v, g.spacing()));
        for (auto& x : v) x /= n;
        return v;
    }

    static double trapezoid(std::span<const double> a, std::span<const double> b, double dx) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double w = (k == 0 || k + 1 == a.size()) ? 0.5 : 1.0;
            s += w * a[k] * b[k];
        }
        return s * dx;
    }
};

/// Packet span plus eight widths of padding on each side, 4096 points.
inline Grid default_exchange_grid(double separation, double width) {
    const double half = std::abs(separation) / 2.0 + 8.0 * width;
    return Grid{-half, half, 4096};
}

/// Two packets a (centered -s/2) and b (centered +s/2) in the pair state
/// (1/sqrt 2)[a(x1) b(x2) +/- a(x2) b(x1)]. Returns the magnitude of the
/// exchange term's projection on the direct term, |<a(x1)b(x2)|a(x2)b(x1)>|
/// = <a|b>^2, which is the exchange contribution to the pair norm. Equals 1 at
/// zero separation and exp(-s^2/(4 w^2)) in the continuum.
inline double exchange_term_norm(double separation, double width, std::optional<Grid> grid = std::nullopt) {
    if (!(width > 0.0)) throw ValidationError("exchange_term_norm: width must be > 0");
    if (!std::isfinite(separation)) throw ValidationError("exchange_term_norm: separation must be finite");
    const Grid g = grid.value_or(default_exchange_grid(separation, width));
    if (g.points < 3 || !(g.hi > g.lo)) throw ValidationError("exchange_term_norm: degenerate grid");
    const double s = std::abs(separation);
    if (-s / 2.0 - g.lo < 6.0 * width || g.hi - s / 2.0 < 6.0 * width)
        throw ValidationError("exchange_term_norm: grid must extend at least 6 widths beyond each packet");
    const auto left = GaussianPacket{-s / 2.0, width}.sample(g);
    const auto right = GaussianPacket{s / 2.0, width}.sample(g);
    const double overlap = GaussianPacket::trapezoid(left, right, g.spacing());
    return overlap * overlap;
}

}  // namespace qimage

#pragma once

// Detector sea of state/anti-state pairs, system-detector (anti)symmetrized
// composites, hole reduction, conjugate images and diagonal bound states.
//
// Composites built here use the slot signature (S, D, Dbar). The incoming
// system state i and detector state i carry the same label name so that
// "same microstate" is a label comparison.

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "qimage/errors.hpp"
#include "qimage/simplex.hpp"
#include "qimage/state_algebra.hpp"

namespace qimage {

/// N orthonormal detector states (slot D), each paired with its conjugate
/// anti-state (slot Dbar).
class DetectorSea {
public:
    DetectorSea(std::size_t n, std::string_view prefix) : labels_(indexed_labels(n, prefix)) {
        if (n < 2) throw ValidationError("DetectorSea: N must be >= 2, got " + std::to_string(n));
        basis_.reserve(n);
        conjugates_.reserve(n);
        for (std::size_t j = 0; j < n; ++j) {
            basis_.push_back(PureState::basis_state(labels_, j, Slot::D));
            conjugates_.push_back(conjugate_state(basis_.back()));
        }
    }

    [[nodiscard]] std::size_t size() const { return labels_.size(); }
    [[nodiscard]] std::span<const PureState> basis() const { return basis_; }
    [[nodiscard]] std::span<const PureState> conjugates() const { return conjugates_; }
    [[nodiscard]] const BasisLabel& label(std::size_t j) const { return labels_.at(j); }

    void check_index(std::size_t i, const char* where) const {
        if (i >= size())
            throw ValidationError(std::string(where) + ": index " + std::to_string(i) + " out of range for N = " +
                                  std::to_string(size()));
    }

    /// Uniform neutral sum (1/sqrt N) sum_j |j>_D |j*>_Dbar.
    [[nodiscard]] CompositeState singlet() const {
        CompositeState out({Slot::D, Slot::Dbar});
        const double c = 1.0 / std::sqrt(static_cast<double>(size()));
        for (const auto& l : labels_) out.add(c, {l, l.conjugate()});
        return out;
    }

    /// Basis ket |s>_S |d>_D |b*>_Dbar.
    [[nodiscard]] CompositeState::Key ket(std::size_t s, std::size_t d, std::size_t b) const {
        return {labels_.at(s), labels_.at(d), labels_.at(b).conjugate()};
    }

private:
    std::vector<BasisLabel> labels_;
    std::vector<PureState> basis_;
    std::vector<PureState> conjugates_;
};

/// Detector states labeled by the measurement eigenbasis e0..e{N-1}.
inline DetectorSea build_sea(std::size_t n, std::string_view prefix = "e") { return DetectorSea(n, prefix); }

inline const std::vector<Slot>& system_detector_slots() {
    static const std::vector<Slot> slots{Slot::S, Slot::D, Slot::Dbar};
    return slots;
}

/// Product state with no symmetrization: (1/sqrt N) sum_j |i>_S |j>_D |j*>_Dbar.
inline CompositeState combine_unsymmetrized(std::size_t i, const DetectorSea& sea) {
    sea.check_index(i, "combine_unsymmetrized");
    CompositeState out(system_detector_slots());
    const double c = 1.0 / std::sqrt(static_cast<double>(sea.size()));
    for (std::size_t j = 0; j < sea.size(); ++j) out.add(c, sea.ket(i, j, j));
    return out;
}

/// Role-swapped counterpart: (1/sqrt N) sum_j |j>_S |i>_D |j*>_Dbar.
inline CompositeState combine_unsymmetrized_swapped(std::size_t i, const DetectorSea& sea) {
    sea.check_index(i, "combine_unsymmetrized_swapped");
    CompositeState out(system_detector_slots());
    const double c = 1.0 / std::sqrt(static_cast<double>(sea.size()));
    for (std::size_t j = 0; j < sea.size(); ++j) out.add(c, sea.ket(j, i, j));
    return out;
}

/// Bosonic system-detector state for incoming basis state i:
///   1/sqrt(2N) sum_{j!=i} (|i,j> + |j,i>) |j*>  +  1/sqrt(N) |i,i>|i*>.
inline CompositeState symmetrize_boson(std::size_t i, const DetectorSea& sea) {
    sea.check_index(i, "symmetrize_boson");
    const double n = static_cast<double>(sea.size());
    const double pair = 1.0 / std::sqrt(2.0 * n);
    CompositeState out(system_detector_slots());
    for (std::size_t j = 0; j < sea.size(); ++j) {
        if (j == i) continue;
        out.add(pair, sea.ket(i, j, j));
        out.add(pair, sea.ket(j, i, j));
    }
    out.add(1.0 / std::sqrt(n), sea.ket(i, i, i));
    return out;
}

/// Split of the bosonic state into the symmetrized product part
/// (Psi_SD0 + Psi_DS0)/sqrt 2 and the leftover diagonal exchange term.
struct ExchangeDecomposition {
    CompositeState symmetric_part;
    ProductTerm exchange_term;
    cplx exchange_coefficient;
    /// max |reassembled - symmetrize_boson| over components.
    double residual = 0.0;

    [[nodiscard]] CompositeState reassembled() const {
        CompositeState out = symmetric_part;
        out.add(exchange_term.coefficient, exchange_term.factors);
        return out;
    }
};

inline ExchangeDecomposition decompose_exchange(std::size_t i, const DetectorSea& sea) {
    sea.check_index(i, "decompose_exchange");
    const CompositeState sd0 = combine_unsymmetrized(i, sea);
    const CompositeState ds0 = combine_unsymmetrized_swapped(i, sea);
    CompositeState symmetric = (sd0 + ds0).scaled(1.0 / std::sqrt(2.0));

    const auto diag = sea.ket(i, i, i);
    const CompositeState target = symmetrize_boson(i, sea);
    // Whatever the symmetric part misses on the diagonal ket is the exchange term.
    const cplx coefficient = target.coefficient(diag) - symmetric.coefficient(diag);

    ExchangeDecomposition out{std::move(symmetric), ProductTerm{coefficient, diag}, coefficient, 0.0};
    out.residual = max_abs_difference(out.reassembled(), target);
    return out;
}

/// Closed form of the diagonal exchange coefficient, (1 - sqrt 2)/sqrt N.
inline double exchange_coefficient_closed_form(std::size_t n) {
    return (1.0 - std::sqrt(2.0)) / std::sqrt(static_cast<double>(n));
}

/// Fermionic system-detector state:
///   1/sqrt(2(N-1)) sum_{j!=i} (|i,j> - |j,i>) |j*>.
/// Never contains a ket whose S and D labels coincide.
inline CompositeState antisymmetrize_fermion(std::size_t i, const DetectorSea& sea) {
    sea.check_index(i, "antisymmetrize_fermion");
    const double c = 1.0 / std::sqrt(2.0 * static_cast<double>(sea.size() - 1));
    CompositeState out(system_detector_slots());
    for (std::size_t j = 0; j < sea.size(); ++j) {
        if (j == i) continue;
        out.add(c, sea.ket(i, j, j));
        out.add(-c, sea.ket(j, i, j));
    }
    return out;
}

/// Hole pair |h_i>_D |h_i*>_Dbar = sum_{j!=i} |j>_D |j*>_Dbar, attached to
/// system state |s>_S.
inline CompositeState system_times_hole_pair(std::size_t s, std::size_t i, const DetectorSea& sea) {
    CompositeState out(system_detector_slots());
    for (std::size_t j = 0; j < sea.size(); ++j)
        if (j != i) out.add(1.0, sea.ket(s, j, j));
    return out;
}

/// System hole paired with the detector anti-hole, sum_{j!=i} |j>_S |j*>_Dbar,
/// with detector state |d>_D.
inline CompositeState system_hole_times_detector(std::size_t d, std::size_t i, const DetectorSea& sea) {
    CompositeState out(system_detector_slots());
    for (std::size_t j = 0; j < sea.size(); ++j)
        if (j != i) out.add(1.0, sea.ket(j, d, j));
    return out;
}

struct HoleReduction {
    /// (|i>_S |h>_D - |i>_D |h>_S) |h*>_Dbar, expanded through the hole-pair sums.
    CompositeState hole_form;
    /// hole_form = proportionality * antisymmetrize_fermion(i) (least-squares fit).
    double proportionality = 0.0;
    /// || hole_form - proportionality * antisymmetrized ||.
    double residual = 0.0;
};

inline HoleReduction hole_reduce(std::size_t i, const DetectorSea& sea) {
    sea.check_index(i, "hole_reduce");
    CompositeState hole = system_times_hole_pair(i, i, sea) - system_hole_times_detector(i, i, sea);
    const CompositeState fermion = antisymmetrize_fermion(i, sea);
    const double c = inner_product(fermion, hole).real() / inner_product(fermion, fermion).real();
    const double residual = (hole - fermion.scaled(c)).norm();
    return HoleReduction{std::move(hole), c, residual};
}

struct EffectiveProduct {
    /// |i>_S |h_i>_D |h_i*>_Dbar, normalized.
    CompositeState state;
    /// ||dropped second term|| / ||full hole form||.
    double dropped_fraction = 0.0;
};

/// Hole form with the |i>_D |h>_S term dropped, leaving a simple product.
inline EffectiveProduct fermion_effective_product(std::size_t i, const DetectorSea& sea) {
    sea.check_index(i, "fermion_effective_product");
    const CompositeState kept = system_times_hole_pair(i, i, sea);
    const CompositeState dropped = system_hole_times_detector(i, i, sea);
    const double full = (kept - dropped).norm();
    return EffectiveProduct{kept.normalized(), dropped.norm() / full};
}

/// Conjugate image of a system state: amplitudes conjugated, labels barred,
/// placed in the Dbar slot.
struct ImageState {
    PureState state;
};

/// Antilinear; does not renormalize, so linear combinations can be compared
/// term by term.
inline ImageState extract_image(const PureState& system) {
    return ImageState{conjugate_state(system).with_slot(Slot::Dbar)};
}

enum class BoundPairing {
    SystemDetector,    ///< |a|^2 |e>_S |e*>_D
    DetectorDetector,  ///< |a|^2 |e>_D |e*>_D
};

struct BoundState {
    /// Diagonal conjugate-paired kets only.
    CompositeState terms;
    /// weights[k] = |a_k|^2, in the source basis order.
    std::vector<double> weights;
    /// Norm fraction of the discarded off-diagonal part of the full product.
    double cross_fraction = 0.0;
};

/// Expands source (x) image and keeps the kets pairing an eigenlabel with its
/// own conjugate.
inline BoundState form_bound_state(const PureState& system, const ImageState& image,
                                   BoundPairing pairing = BoundPairing::SystemDetector) {
    const PureState& img = image.state;
    if (img.dim() != system.dim()) throw ShapeError("form_bound_state: image/state dimension mismatch");
    for (std::size_t k = 0; k < system.dim(); ++k)
        if (img.basis()[k] != system.basis()[k].conjugate())
            throw ShapeError("form_bound_state: image basis is not the conjugate of the state basis");

    const PureState left = system.with_slot(pairing == BoundPairing::SystemDetector ? Slot::S : Slot::D);
    const CompositeState full = CompositeState::product({left, img});

    CompositeState diagonal(std::vector<Slot>(full.slots().begin(), full.slots().end()));
    std::vector<double> weights(system.dim(), 0.0);
    for (std::size_t k = 0; k < system.dim(); ++k) {
        CompositeState::Key key{system.basis()[k], img.basis()[k]};
        const cplx c = full.coefficient(key);
        weights[k] = c.real();
        diagonal.add(c, std::move(key));
    }
    const double total = full.norm();
    const double cross = (full - diagonal).norm();
    return BoundState{std::move(diagonal), std::move(weights), total > 0.0 ? cross / total : 0.0};
}

/// Bound-state weights as walk coordinates. Weights must sum to 1 within 1e-9.
inline SimplexPoint born_weights(const BoundState& bound) {
    for (double w : bound.weights)
        if (!(w >= -kIdentityTolerance)) throw ConsistencyError("born_weights: negative weight");
    std::vector<double> w = bound.weights;
    for (auto& x : w) x = std::max(0.0, x);
    return SimplexPoint::rescaled(std::move(w), 1e-9);
}

/// |<psi|phi> - <psi|phi>^2|: zero iff a linear unitary cloner could copy both
/// states (overlap 0 or 1).
inline double no_cloning_witness(const PureState& psi, const PureState& phi) {
    if (psi.dim() != phi.dim()) throw ShapeError("no_cloning_witness: dimension mismatch");
    const cplx o = inner_product(psi, phi);
    return std::abs(o - o * o);
}

}  // namespace qimage

#pragma once

#include <random>

#include "qimage/state_algebra.hpp"

namespace qimage::testing {

inline cplx random_complex(std::mt19937_64& gen) {
    std::normal_distribution<double> n(0.0, 1.0);
    return {n(gen), n(gen)};
}

inline PureState random_state(std::mt19937_64& gen, std::size_t dim, bool normalize, Slot slot = Slot::S) {
    std::vector<cplx> amps(dim);
    for (auto& a : amps) a = random_complex(gen);
    auto psi = PureState::from_amplitudes(std::move(amps), slot);
    return normalize ? psi.normalized() : psi;
}

}  // namespace qimage::testing

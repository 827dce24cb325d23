#include "qimage/detector_imaging.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qimage/io.hpp"
#include "test_util.hpp"

using namespace qimage;
using qimage::testing::random_complex;
using qimage::testing::random_state;

namespace {

const std::vector<std::size_t> kSeaSizes{2, 3, 8, 64};

std::vector<double> sorted_real_coefficients(const CompositeState& c) {
    std::vector<double> out;
    for (const auto& t : c.terms()) out.push_back(t.coefficient.real());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST(BuildSea, OrthonormalPairs) {
    const auto sea = build_sea(2);
    ASSERT_EQ(sea.size(), 2u);
    ASSERT_EQ(sea.conjugates().size(), 2u);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
            EXPECT_EQ(inner_product(sea.basis()[a], sea.basis()[b]), cplx(a == b ? 1.0 : 0.0, 0.0));
    for (std::size_t j = 0; j < sea.size(); ++j) {
        EXPECT_EQ(sea.conjugates()[j].slot(), Slot::Dbar);
        const auto back = conjugate_state(sea.conjugates()[j]);
        EXPECT_TRUE(back.same_basis(sea.basis()[j]));
        EXPECT_EQ(max_abs_difference(back, sea.basis()[j]), 0.0);
    }
}

TEST(BuildSea, SingletHasUnitNorm) {
    const auto sea = build_sea(16);
    const auto singlet = sea.singlet();
    EXPECT_EQ(singlet.term_count(), 16u);
    EXPECT_NEAR(inner_product(singlet, singlet).real(), 1.0, 1e-12);
}

TEST(BuildSea, RejectsTooSmall) {
    EXPECT_THROW(build_sea(1), ValidationError);
    EXPECT_THROW(build_sea(0), ValidationError);
}

TEST(CombineUnsymmetrized, Examples) {
    const auto s = combine_unsymmetrized(0, build_sea(2));
    ASSERT_EQ(s.term_count(), 2u);
    for (const auto& t : s.terms()) EXPECT_NEAR(t.coefficient.real(), 1.0 / std::sqrt(2.0), 1e-15);
    for (std::size_t n : {2u, 8u, 64u}) {
        const auto c = combine_unsymmetrized(n / 2, build_sea(n));
        EXPECT_EQ(c.term_count(), n);
        EXPECT_NEAR(c.norm(), 1.0, 1e-12);
    }
    EXPECT_THROW(combine_unsymmetrized(2, build_sea(2)), ValidationError);
}

TEST(SymmetrizeBoson, TwoStateCoefficients) {
    const auto s = symmetrize_boson(0, build_sea(2));
    ASSERT_EQ(s.term_count(), 3u);
    const auto coefs = sorted_real_coefficients(s);
    EXPECT_NEAR(coefs[0], 0.5, 1e-15);  // 1/sqrt(2N)
    EXPECT_NEAR(coefs[1], 0.5, 1e-15);
    EXPECT_NEAR(coefs[2], 1.0 / std::sqrt(2.0), 1e-15);  // 1/sqrt(N)
    const auto sea = build_sea(2);
    EXPECT_NEAR(s.coefficient(sea.ket(0, 0, 0)).real(), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(SymmetrizeBoson, NormAndTermCount) {
    for (std::size_t n : kSeaSizes) {
        const auto sea = build_sea(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto s = symmetrize_boson(i, sea);
            EXPECT_EQ(s.term_count(), 2 * (n - 1) + 1);
            EXPECT_NEAR(inner_product(s, s).real(), 1.0, 1e-12);
        }
    }
    EXPECT_THROW(symmetrize_boson(5, build_sea(3)), ValidationError);
}

TEST(DecomposeExchange, CoefficientValues) {
    EXPECT_NEAR(decompose_exchange(0, build_sea(2)).exchange_coefficient.real(), (1 - std::sqrt(2.0)) / std::sqrt(2.0),
                1e-15);
    EXPECT_NEAR(decompose_exchange(0, build_sea(2)).exchange_coefficient.real(), -0.29289, 1e-5);
    EXPECT_NEAR(decompose_exchange(3, build_sea(8)).exchange_coefficient.real(), -0.14645, 1e-5);
}

TEST(DecomposeExchange, ReassemblesBosonicStateForAllIndices) {
    for (std::size_t n : kSeaSizes) {
        const auto sea = build_sea(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto dec = decompose_exchange(i, sea);
            EXPECT_LT(dec.residual, 1e-12);
            EXPECT_LT(max_abs_difference(dec.reassembled(), symmetrize_boson(i, sea)), 1e-12);
            EXPECT_NEAR(dec.exchange_coefficient.real(), exchange_coefficient_closed_form(n), 1e-12);
            EXPECT_EQ(dec.exchange_coefficient.imag(), 0.0);
            EXPECT_EQ(dec.exchange_term.factors, sea.ket(i, i, i));
        }
    }
}

TEST(DecomposeExchange, SwappedProductIsRoleExchangeOfDirectProduct) {
    const auto sea = build_sea(5);
    const auto sd0 = combine_unsymmetrized(2, sea);
    const auto ds0 = combine_unsymmetrized_swapped(2, sea);
    EXPECT_LT(max_abs_difference(exchange_slot_labels(sd0, 0, 1), ds0), 1e-15);
}

TEST(AntisymmetrizeFermion, TwoStateCoefficients) {
    const auto f = antisymmetrize_fermion(0, build_sea(2));
    const auto coefs = sorted_real_coefficients(f);
    ASSERT_EQ(coefs.size(), 2u);
    EXPECT_NEAR(coefs[0], -1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(coefs[1], 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(AntisymmetrizeFermion, NormExclusionAndAntisymmetry) {
    for (std::size_t n : kSeaSizes) {
        const auto sea = build_sea(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto f = antisymmetrize_fermion(i, sea);
            EXPECT_NEAR(inner_product(f, f).real(), 1.0, 1e-12);
            for (const auto& t : f.terms()) EXPECT_NE(t.factors[0], t.factors[1]);
            for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(f.coefficient(sea.ket(j, j, j)), cplx(0.0, 0.0));
            EXPECT_LT(max_abs_difference(exchange_slot_labels(f, 0, 1), f.scaled(-1.0)), 1e-15);
        }
    }
}

TEST(HoleReduce, ProportionalityValues) {
    EXPECT_NEAR(hole_reduce(0, build_sea(2)).proportionality, std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(hole_reduce(0, build_sea(2)).proportionality, 1.41421, 1e-5);
    EXPECT_NEAR(hole_reduce(4, build_sea(10)).proportionality, 4.24264, 1e-5);
}

TEST(HoleReduce, MatchesAntisymmetrizedStateForAllIndices) {
    for (std::size_t n : kSeaSizes) {
        const auto sea = build_sea(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto h = hole_reduce(i, sea);
            EXPECT_NEAR(h.proportionality, std::sqrt(2.0 * static_cast<double>(n - 1)), 1e-12);
            EXPECT_LT(h.residual, 1e-12);
            EXPECT_EQ(h.hole_form.term_count(), 2 * (n - 1));
        }
    }
}

TEST(HoleReduce, HolePairDefinitionExpandsToSea) {
    // |h_i>|h_i*> equals the singlet with the i-th pair removed, up to sqrt(N).
    const std::size_t n = 6, i = 2;
    const auto sea = build_sea(n);
    const auto attached = system_times_hole_pair(i, i, sea);
    for (std::size_t j = 0; j < n; ++j)
        EXPECT_EQ(attached.coefficient(sea.ket(i, j, j)), cplx(j == i ? 0.0 : 1.0, 0.0));
}

TEST(FermionEffectiveProduct, Expansion) {
    const auto two = fermion_effective_product(0, build_sea(2));
    EXPECT_EQ(two.state.term_count(), 1u);

    const auto eight = fermion_effective_product(3, build_sea(8));
    ASSERT_EQ(eight.state.term_count(), 7u);
    for (const auto& t : eight.state.terms()) {
        EXPECT_NEAR(t.coefficient.real(), 1.0 / std::sqrt(7.0), 1e-15);
        EXPECT_EQ(t.factors[0].name, "e3");
    }
    // ||second term|| / ||hole form|| = sqrt(N-1) / sqrt(2(N-1))
    EXPECT_NEAR(eight.dropped_fraction, 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(ExtractImage, Examples) {
    const auto basis = extract_image(PureState::from_amplitudes({1.0, 0.0}));
    EXPECT_EQ(basis.state.slot(), Slot::Dbar);
    EXPECT_EQ(basis.state.amplitude(0), cplx(1.0, 0.0));
    EXPECT_EQ(basis.state.basis()[0].str(), "e0*");
    EXPECT_EQ(basis.state.basis()[1].str(), "e1*");

    const auto img = extract_image(PureState::from_amplitudes({cplx{0.5, 0.5}, cplx{0.5, -0.5}}));
    EXPECT_EQ(img.state.amplitude(0), cplx(0.5, -0.5));
    EXPECT_EQ(img.state.amplitude(1), cplx(0.5, 0.5));

    std::mt19937_64 gen(17);
    const auto psi = random_state(gen, 3, true);
    const cplx phase = std::polar(1.0, std::numbers::pi / 3);
    EXPECT_LE(max_abs_difference(extract_image(psi.scaled(phase)).state, extract_image(psi).state.scaled(std::conj(phase))),
              1e-15);
}

TEST(ExtractImage, AntilinearNotLinear) {
    std::mt19937_64 gen(23);
    for (int t = 0; t < 200; ++t) {
        const std::size_t dim = 2 + t % 7;
        const auto p1 = random_state(gen, dim, false), p2 = random_state(gen, dim, false);
        const cplx c1 = random_complex(gen), c2 = random_complex(gen);
        const auto lhs = extract_image(p1.scaled(c1) + p2.scaled(c2)).state;
        const auto i1 = extract_image(p1).state, i2 = extract_image(p2).state;
        EXPECT_LE(max_abs_difference(lhs, i1.scaled(std::conj(c1)) + i2.scaled(std::conj(c2))), 1e-12);
        EXPECT_GT((lhs - (i1.scaled(c1) + i2.scaled(c2))).norm(), 1e-3);
    }
}

TEST(FormBoundState, Examples) {
    const double r = 1.0 / std::sqrt(2.0);
    auto weights_of = [](std::vector<cplx> amps) {
        const auto psi = PureState::from_amplitudes(std::move(amps));
        return form_bound_state(psi, extract_image(psi));
    };
    const auto even = weights_of({r, r});
    EXPECT_NEAR(even.weights[0], 0.5, 1e-15);
    EXPECT_NEAR(even.weights[1], 0.5, 1e-15);

    const auto b = weights_of({0.6, 0.8});
    EXPECT_NEAR(b.weights[0], 0.36, 1e-15);
    EXPECT_NEAR(b.weights[1], 0.64, 1e-15);
    EXPECT_EQ(b.terms.term_count(), 2u);
    for (const auto& t : b.terms.terms()) EXPECT_EQ(t.factors[1], t.factors[0].conjugate());

    const auto eig = weights_of({1.0, 0.0});
    EXPECT_EQ(eig.weights, (std::vector<double>{1.0, 0.0}));
    EXPECT_EQ(eig.terms.term_count(), 1u);
    EXPECT_EQ(eig.cross_fraction, 0.0);
}

TEST(FormBoundState, WeightsAreSquaredModuliForRandomStates) {
    std::mt19937_64 gen(31);
    for (int t = 0; t < 100; ++t) {
        const auto psi = random_state(gen, 1 + t % 16, true);
        const auto b = form_bound_state(psi, extract_image(psi));
        double sum = 0.0;
        for (std::size_t k = 0; k < psi.dim(); ++k) {
            EXPECT_NEAR(b.weights[k], std::norm(psi.amplitude(k)), 1e-12);
            sum += b.weights[k];
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);

        // the detector-detector pairing gives the same weights
        const auto dd = form_bound_state(psi, extract_image(psi), BoundPairing::DetectorDetector);
        EXPECT_EQ(dd.weights, b.weights);
        EXPECT_EQ(dd.terms.slots()[0], Slot::D);
    }
}

TEST(FormBoundState, RejectsMismatchedImage) {
    const auto psi = PureState::from_amplitudes({0.6, 0.8});
    const auto other = PureState::from_amplitudes({1.0, 0.0, 0.0});
    EXPECT_THROW(form_bound_state(psi, extract_image(other)), ShapeError);
    EXPECT_THROW(form_bound_state(psi, ImageState{psi.with_slot(Slot::Dbar)}), ShapeError);
}

TEST(BornWeights, Passthrough) {
    const auto psi = PureState::from_amplitudes({0.6, 0.8});
    const auto p = born_weights(form_bound_state(psi, extract_image(psi)));
    EXPECT_NEAR(p[0], 0.36, 1e-15);
    EXPECT_NEAR(p[1], 0.64, 1e-15);

    const auto vertex = born_weights(form_bound_state(PureState::from_amplitudes({1.0, 0.0}),
                                                      extract_image(PureState::from_amplitudes({1.0, 0.0}))));
    EXPECT_EQ(vertex[0], 1.0);
    EXPECT_EQ(vertex[1], 0.0);

    const auto three = PureState::from_amplitudes({0.6, 0.64, 0.48}).normalized();
    const auto q = born_weights(form_bound_state(three, extract_image(three)));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(q[k], std::norm(three.amplitude(k)), 1e-12);
}

TEST(BornWeights, RejectsUnnormalizedSource) {
    const auto psi = PureState::from_amplitudes({0.6, 0.9});
    EXPECT_THROW(born_weights(form_bound_state(psi, extract_image(psi))), ConsistencyError);
}

TEST(NoCloningWitness, Examples) {
    const auto psi = PureState::from_amplitudes({1.0, 0.0});
    EXPECT_EQ(no_cloning_witness(psi, psi), 0.0);
    EXPECT_EQ(no_cloning_witness(psi, PureState::from_amplitudes({0.0, 1.0})), 0.0);
    EXPECT_NEAR(no_cloning_witness(psi, PureState::from_amplitudes({0.5, std::sqrt(3.0) / 2.0})), 0.25, 1e-12);
    EXPECT_THROW(no_cloning_witness(psi, PureState::from_amplitudes({1.0, 0.0, 0.0})), ShapeError);
}

TEST(NoCloningWitness, PositiveForPartialOverlap) {
    std::mt19937_64 gen(41);
    int checked = 0;
    while (checked < 100) {
        const auto a = random_state(gen, 3, true), b = random_state(gen, 3, true);
        const double o = std::abs(inner_product(a, b));
        if (o <= 0.0 || o >= 1.0) continue;
        EXPECT_GT(no_cloning_witness(a, b), 0.0);
        ++checked;
    }
}

TEST(DetectorJson, ExchangeAndBoundLayout) {
    const auto dec = decompose_exchange(0, build_sea(2));
    const auto j = to_json(dec);
    EXPECT_EQ(j.at("exchange_coefficient").size(), 2u);
    EXPECT_DOUBLE_EQ(j.at("exchange_coefficient")[0].get<double>(), dec.exchange_coefficient.real());
    EXPECT_TRUE(j.contains("residual"));

    const auto psi = PureState::from_amplitudes({0.6, 0.8});
    const auto b = to_json(form_bound_state(psi, extract_image(psi)));
    const auto w = b.at("weights").get<std::vector<double>>();
    ASSERT_EQ(w.size(), 2u);
    EXPECT_NEAR(w[0], 0.36, 1e-15);
    EXPECT_NEAR(w[1], 0.64, 1e-15);
}

#pragma once

// Command-line front end. Exit codes: 0 success, 2 invalid input, 1 runtime failure.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qimage/collapse_walk.hpp"
#include "qimage/detector_imaging.hpp"
#include "qimage/ensemble.hpp"
#include "qimage/errors.hpp"
#include "qimage/io.hpp"
#include "qimage/state_algebra.hpp"

namespace qimage::cli {

/// Rectangular complex literal `re+imi` / `re-imi`, e.g. `0.6+0.0i`.
inline cplx parse_complex(const std::string& text) {
    static const std::regex re(
        R"(^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([+-](?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)i\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, re)) throw ValidationError("malformed complex literal '" + text + "' (expected re+imi)");
    return {std::stod(m[1].str()), std::stod(m[2].str())};
}

inline std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

/// Parses comma-separated amplitudes. Without `normalize` the vector must
/// already have unit norm within 1e-9; either way the result is normalized.
inline std::vector<cplx> parse_amplitudes(const std::string& text, bool normalize) {
    std::vector<cplx> amps;
    for (const auto& tok : split_commas(text)) amps.push_back(parse_complex(tok));
    double n2 = 0.0;
    for (auto a : amps) n2 += std::norm(a);
    const double n = std::sqrt(n2);
    if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("amplitudes have zero or non-finite norm");
    if (!normalize && std::abs(n - 1.0) > 1e-9)
        throw ValidationError("amplitudes have norm " + std::to_string(n) + "; pass --normalize to rescale");
    for (auto& a : amps) a /= n;
    return amps;
}

inline std::vector<std::uint64_t> parse_counts(const std::string& text) {
    std::vector<std::uint64_t> out;
    static const std::regex re(R"(^\s*\d+\s*$)");
    for (const auto& tok : split_commas(text)) {
        if (!std::regex_match(tok, re)) throw ValidationError("malformed count '" + tok + "'");
        out.push_back(std::stoull(tok));
    }
    return out;
}

inline std::vector<double> squared_moduli(const std::vector<cplx>& amps) {
    std::vector<double> w;
    for (auto a : amps) w.push_back(std::norm(a));
    return w;
}

/// Born weights of an amplitude vector via the image/bound-state route.
inline SimplexPoint born_point(const std::vector<cplx>& amps) {
    const PureState psi = PureState::from_amplitudes(amps, Slot::S);
    return born_weights(form_bound_state(psi, extract_image(psi)));
}

inline unsigned threads_from_env() {
    const char* v = std::getenv("COLLAPSE_WALK_THREADS");
    if (v == nullptr || *v == '\0') return 0;
    try {
        const unsigned long t = std::stoul(v);
        return static_cast<unsigned>(t);
    } catch (const std::exception&) {
        throw ValidationError(std::string("COLLAPSE_WALK_THREADS is not a number: '") + v + "'");
    }
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline void emit(const ordered_json& j, const std::string& out_path, std::ostream& out) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty()) {
        out << text;
        return;
    }
    if (ends_with(out_path, ".csv")) throw ValidationError("CSV output is only available for 'ensemble'");
    write_text_file(out_path, text);
}

inline Rounding parse_rounding(const std::string& s) {
    if (s == "deterministic" || s == "largest_remainder") return Rounding::LargestRemainder;
    if (s == "stochastic") return Rounding::Stochastic;
    throw ValidationError("unknown rounding '" + s + "'");
}

inline ordered_json dump_lines(const CompositeState& c) {
    ordered_json lines = ordered_json::array();
    std::string text = c.dump();
    std::size_t start = 0;
    for (std::size_t nl; (nl = text.find('\n', start)) != std::string::npos; start = nl + 1)
        lines.push_back(text.substr(start, nl - start));
    return lines;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Symmetrized detector images and first-passage collapse walks"};
    app.require_subcommand(1);
    std::string out_path;

    // symmetrize
    std::size_t sym_n = 0, sym_i = 0;
    std::string sym_stats = "bose";
    auto* sym = app.add_subcommand("symmetrize", "System-detector (anti)symmetrized state and its identity residuals");
    sym->add_option("--n", sym_n, "Detector size N")->required();
    sym->add_option("--i", sym_i, "Incoming basis index")->required();
    sym->add_option("--stats", sym_stats, "bose|fermi")->check(CLI::IsMember({"bose", "fermi"}));
    sym->add_option("-o,--output", out_path, "Write JSON to this path");

    // image
    std::string img_amps;
    bool img_normalize = false;
    auto* img = app.add_subcommand("image", "Conjugate image and bound-state weights");
    img->add_option("--amps", img_amps, "Amplitudes re+imi,...")->required();
    img->add_flag("--normalize", img_normalize, "Rescale amplitudes to unit norm");
    img->add_option("-o,--output", out_path, "Write JSON to this path");

    // witness
    std::string wit_a, wit_b;
    bool wit_normalize = false;
    auto* wit = app.add_subcommand("witness", "Inner-product preservation residual of a would-be linear cloner");
    wit->add_option("--amps-a", wit_a, "First state")->required();
    wit->add_option("--amps-b", wit_b, "Second state")->required();
    wit->add_flag("--normalize", wit_normalize, "Rescale amplitudes to unit norm");
    wit->add_option("-o,--output", out_path, "Write JSON to this path");

    // collapse / ensemble share walk options
    std::string walk_amps, rounding = "deterministic";
    bool walk_normalize = false;
    std::uint64_t m = 100, seed = 0, runs = 0;
    std::optional<std::uint64_t> max_steps;
    double efficiency = 1.0;
    auto add_walk_options = [&](CLI::App* sub) {
        sub->add_option("--amps", walk_amps, "Amplitudes re+imi,...")->required();
        sub->add_flag("--normalize", walk_normalize, "Rescale amplitudes to unit norm");
        sub->add_option("--m", m, "Lattice resolution M");
        sub->add_option("--seed", seed, "Master seed")->required();
        sub->add_option("--max-steps", max_steps, "Step budget per walk (default 100 M^2)");
        sub->add_option("--rounding", rounding, "deterministic|stochastic");
        sub->add_option("-o,--output", out_path, "Output path (.json, or .csv for ensemble)");
    };
    auto* col = app.add_subcommand("collapse", "One first-passage collapse walk");
    add_walk_options(col);
    auto* ens = app.add_subcommand("ensemble", "Ensemble of collapse walks with goodness of fit");
    add_walk_options(ens);
    ens->add_option("--runs", runs, "Number of runs")->required();
    ens->add_option("--efficiency", efficiency, "Detection efficiency in (0, 1]");

    // oracle
    std::string oracle_counts;
    auto* orc = app.add_subcommand("oracle", "Exact absorption probabilities for a lattice state");
    orc->add_option("--counts", oracle_counts, "Comma-separated lattice counts")->required();
    orc->add_option("-o,--output", out_path, "Write JSON to this path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    auto walk_config = [&] {
        WalkConfig w = WalkConfig::with_resolution(m, parse_rounding(rounding));
        if (max_steps) w.max_steps = *max_steps;
        w.validate();
        return w;
    };

    try {
        if (*sym) {
            const DetectorSea sea = build_sea(sym_n);
            sea.check_index(sym_i, "symmetrize");
            ordered_json j{{"command", "symmetrize"}, {"statistics", sym_stats}, {"N", sym_n}, {"i", sym_i}};
            if (sym_stats == "bose") {
                const CompositeState state = symmetrize_boson(sym_i, sea);
                const ExchangeDecomposition dec = decompose_exchange(sym_i, sea);
                j["norm"] = state.norm();
                j["terms"] = dump_lines(state);
                j["exchange_coefficient"] = complex_json(dec.exchange_coefficient);
                j["residual"] = dec.residual;
            } else {
                const CompositeState state = antisymmetrize_fermion(sym_i, sea);
                const HoleReduction hole = hole_reduce(sym_i, sea);
                const EffectiveProduct eff = fermion_effective_product(sym_i, sea);
                j["norm"] = state.norm();
                j["terms"] = dump_lines(state);
                j["proportionality"] = hole.proportionality;
                j["residual"] = hole.residual;
                j["dropped_fraction"] = eff.dropped_fraction;
            }
            emit(j, out_path, out);
        } else if (*img) {
            const auto amps = parse_amplitudes(img_amps, img_normalize);
            const PureState psi = PureState::from_amplitudes(amps, Slot::S);
            const ImageState image = extract_image(psi);
            const BoundState bound = form_bound_state(psi, image);
            ordered_json image_json = ordered_json::array();
            ordered_json labels = ordered_json::array();
            for (std::size_t k = 0; k < image.state.dim(); ++k) {
                image_json.push_back(complex_json(image.state.amplitudes()[k]));
                labels.push_back(image.state.basis()[k].str());
            }
            ordered_json j{{"command", "image"},
                           {"labels", labels},
                           {"image", image_json},
                           {"weights", bound.weights},
                           {"cross_fraction", bound.cross_fraction}};
            emit(j, out_path, out);
        } else if (*wit) {
            const PureState a = PureState::from_amplitudes(parse_amplitudes(wit_a, wit_normalize));
            const PureState b = PureState::from_amplitudes(parse_amplitudes(wit_b, wit_normalize));
            if (a.dim() != b.dim()) throw ShapeError("witness: states differ in dimension");
            ordered_json j{{"command", "witness"},
                           {"overlap", complex_json(inner_product(a, b))},
                           {"witness", no_cloning_witness(a, b)}};
            emit(j, out_path, out);
        } else if (*col) {
            const SimplexPoint p = born_point(parse_amplitudes(walk_amps, walk_normalize));
            Xoshiro256 rng = Xoshiro256::for_stream(seed, 0);
            emit(to_json(run_collapse(p, walk_config(), rng)), out_path, out);
        } else if (*ens) {
            const SimplexPoint p = born_point(parse_amplitudes(walk_amps, walk_normalize));
            EnsembleConfig c;
            c.runs = runs;
            c.master_seed = seed;
            c.walk = walk_config();
            c.efficiency = efficiency;
            c.threads = threads_from_env();
            const EnsembleStats stats = run_ensemble(p, c);
            if (out_path.empty()) {
                out << to_json(stats).dump(2) << "\n";
            } else {
                export_stats(stats, ends_with(out_path, ".csv") ? ExportFormat::Csv : ExportFormat::Json, out_path);
            }
        } else if (*orc) {
            const LatticeWalkState state(parse_counts(oracle_counts));
            emit(oracle_json(state, absorption_oracle(state)), out_path, out);
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace qimage::cli

#pragma once

// JSON and CSV encodings of results. Output is deterministic: keys in fixed
// order, doubles in shortest round-trip form.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qimage/collapse_walk.hpp"
#include "qimage/detector_imaging.hpp"
#include "qimage/ensemble.hpp"
#include "qimage/errors.hpp"

namespace qimage {

using ordered_json = nlohmann::ordered_json;

inline ordered_json complex_json(cplx c) { return ordered_json::array({c.real() + 0.0, c.imag() + 0.0}); }

inline ordered_json to_json(const CollapseOutcome& o) {
    ordered_json reductions = ordered_json::array();
    for (const auto& r : o.reductions) reductions.push_back(ordered_json::array({r.step, r.index}));
    return ordered_json{{"vertex", o.vertex}, {"steps", o.steps}, {"reductions", std::move(reductions)}};
}

inline CollapseOutcome collapse_outcome_from_json(const ordered_json& j) {
    CollapseOutcome o;
    o.vertex = j.at("vertex").get<std::size_t>();
    o.steps = j.at("steps").get<std::uint64_t>();
    for (const auto& r : j.at("reductions")) o.reductions.push_back({r.at(0).get<std::uint64_t>(), r.at(1).get<std::size_t>()});
    return o;
}

inline ordered_json oracle_json(const LatticeWalkState& state, const std::vector<double>& absorption) {
    return ordered_json{{"counts", state.counts()}, {"M", state.resolution()}, {"absorption", absorption}};
}

inline ordered_json to_json(const ExchangeDecomposition& e) {
    return ordered_json{{"exchange_coefficient", complex_json(e.exchange_coefficient)}, {"residual", e.residual}};
}

inline ordered_json to_json(const BoundState& b) {
    return ordered_json{{"weights", b.weights}, {"cross_fraction", b.cross_fraction}};
}

inline std::string rounding_name(Rounding r) {
    return r == Rounding::LargestRemainder ? "largest_remainder" : "stochastic";
}

inline Rounding rounding_from_name(const std::string& s) {
    if (s == "largest_remainder") return Rounding::LargestRemainder;
    if (s == "stochastic") return Rounding::Stochastic;
    throw ValidationError("unknown rounding mode '" + s + "'");
}

/// Everything needed to replay an ensemble. Thread count is deliberately absent.
inline ordered_json manifest_json(const std::vector<double>& p, const EnsembleConfig& c) {
    return ordered_json{{"p", p},
                        {"runs", c.runs},
                        {"master_seed", c.master_seed},
                        {"M", c.walk.resolution},
                        {"max_steps", c.walk.max_steps},
                        {"rounding", rounding_name(c.walk.rounding)},
                        {"efficiency", c.efficiency},
                        {"version", kVersion}};
}

inline EnsembleConfig config_from_manifest(const ordered_json& m) {
    EnsembleConfig c;
    c.runs = m.at("runs").get<std::uint64_t>();
    c.master_seed = m.at("master_seed").get<std::uint64_t>();
    c.walk.resolution = m.at("M").get<std::uint64_t>();
    c.walk.max_steps = m.value("max_steps", 100 * c.walk.resolution * c.walk.resolution);
    c.walk.rounding = rounding_from_name(m.value("rounding", std::string("largest_remainder")));
    c.efficiency = m.at("efficiency").get<double>();
    return c;
}

inline ordered_json to_json(const EnsembleStats& s) {
    ordered_json chi = nullptr;
    if (s.chi_square)
        chi = ordered_json{{"statistic", s.chi_square->statistic},
                           {"dof", s.chi_square->dof},
                           {"p_value", s.chi_square->p_value}};
    return ordered_json{{"manifest", manifest_json(s.p, s.config)},
                        {"counts", s.counts},
                        {"registered", s.registered},
                        {"frequencies", s.frequencies},
                        {"expected", s.p},
                        {"mean_steps", s.mean_steps()},
                        {"total_steps", s.total_steps},
                        {"step_histogram", s.step_histogram},
                        {"chi_square", std::move(chi)}};
}

inline EnsembleStats ensemble_stats_from_json(const ordered_json& j) {
    EnsembleStats s;
    const auto& m = j.at("manifest");
    s.p = m.at("p").get<std::vector<double>>();
    s.config = config_from_manifest(m);
    s.counts = j.at("counts").get<std::vector<std::uint64_t>>();
    s.registered = j.at("registered").get<std::uint64_t>();
    s.frequencies = j.at("frequencies").get<std::vector<double>>();
    s.total_steps = j.at("total_steps").get<std::uint64_t>();
    s.step_histogram = j.at("step_histogram").get<std::vector<std::uint64_t>>();
    if (const auto& chi = j.at("chi_square"); !chi.is_null())
        s.chi_square = ChiSquare{chi.at("statistic").get<double>(), chi.at("dof").get<std::size_t>(),
                                 chi.at("p_value").get<double>()};
    return s;
}

inline bool operator==(const EnsembleConfig& a, const EnsembleConfig& b) {
    // threads is an execution detail, not part of the result identity
    return a.runs == b.runs && a.master_seed == b.master_seed && a.walk.resolution == b.walk.resolution &&
           a.walk.max_steps == b.walk.max_steps && a.walk.rounding == b.walk.rounding && a.efficiency == b.efficiency;
}

inline bool operator==(const EnsembleStats& a, const EnsembleStats& b) {
    return a.p == b.p && a.config == b.config && a.counts == b.counts && a.registered == b.registered &&
           a.frequencies == b.frequencies && a.step_histogram == b.step_histogram &&
           a.total_steps == b.total_steps && a.chi_square == b.chi_square;
}

/// vertex,count,frequency,expected with one row per vertex.
inline std::string to_csv(const EnsembleStats& s) {
    std::ostringstream out;
    out << "vertex,count,frequency,expected\n";
    for (std::size_t k = 0; k < s.counts.size(); ++k)
        out << k << ',' << s.counts[k] << ',' << ordered_json(s.frequencies[k]).dump() << ','
            << ordered_json(s.p[k]).dump() << '\n';
    return out.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    f << text;
    f.close();
    if (!f) throw IoError("failed writing '" + path.string() + "'");
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

enum class ExportFormat { Json, Csv };

/// Manifest path written next to a CSV export.
inline std::filesystem::path csv_manifest_path(const std::filesystem::path& csv) {
    auto p = csv;
    p += ".manifest.json";
    return p;
}

/// JSON embeds the manifest; CSV gets a sidecar `<path>.manifest.json`.
inline void export_stats(const EnsembleStats& s, ExportFormat format, const std::filesystem::path& path) {
    if (format == ExportFormat::Json) {
        write_text_file(path, to_json(s).dump(2) + "\n");
    } else {
        write_text_file(path, to_csv(s));
        write_text_file(csv_manifest_path(path), manifest_json(s.p, s.config).dump(2) + "\n");
    }
}

}  // namespace qimage

#pragma once

#include "nmzi/tsvf.hpp"

#include <cctype>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace nmzi {

// ---------------------------------------------------------------------------
// Scenario files.
//
// Line-based sections with `key = value` pairs and `#` comments.  Values may
// carry SI unit suffixes (nm um mm cm m | Hz kHz | ms s | urad mrad rad);
// bare numbers are SI base units.  Example:
//
//     variant = nested-tuned
//     band = 270:340
//
//     [mirror A]
//     frequency = 288 Hz
//     piezo_amplitude = 10 nm
//
// Unknown keys, duplicate sections and out-of-range values are rejected with
// line-numbered diagnostics.
// ---------------------------------------------------------------------------

struct ScenarioConfig {
    ScenarioVariant variant = ScenarioVariant::NestedTuned;
    ScenarioParams params;
    SamplingSpec sampling;
    DisturbanceSpec disturbances;
    Band band{270.0, 340.0};
    std::vector<double> exclusions;
    bool normalize = false;
    double detection_threshold_db = 20.0;
    int tolerance_bins = 2;
    bool svg = false;

    InterferometerGraph build() const { return build_scenario(variant, params); }

    std::map<MirrorLabel, double> mirror_frequencies() const
    {
        std::map<MirrorLabel, double> out;
        const auto graph_labels = build().mirror_labels();
        for (MirrorLabel m : graph_labels) out[m] = params.mirror(m).frequency_hz;
        return out;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

enum class Unit { Length, Frequency, Time, Angle, Dimensionless };

inline double unit_scale(Unit dim, std::string_view suffix, int line)
{
    if (suffix.empty()) return 1.0;
    struct Entry {
        Unit dim;
        std::string_view name;
        double scale;
    };
    static constexpr Entry table[] = {
        {Unit::Length, "nm", 1e-9},   {Unit::Length, "um", 1e-6},  {Unit::Length, "mm", 1e-3},
        {Unit::Length, "cm", 1e-2},   {Unit::Length, "m", 1.0},    {Unit::Frequency, "Hz", 1.0},
        {Unit::Frequency, "kHz", 1e3}, {Unit::Time, "ms", 1e-3},    {Unit::Time, "s", 1.0},
        {Unit::Angle, "urad", 1e-6},  {Unit::Angle, "mrad", 1e-3}, {Unit::Angle, "rad", 1.0},
    };
    for (const auto &e : table)
        if (e.dim == dim && e.name == suffix) return e.scale;
    throw parse_error("unknown or mismatched unit '" + std::string(suffix) + "'", line);
}

inline double parse_quantity(std::string_view text, Unit dim, int line)
{
    const std::string s{trim(text)};
    char *end = nullptr;
    const double value = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw parse_error("expected a number, got '" + s + "'", line);
    if (!std::isfinite(value)) throw parse_error("value must be finite, got '" + s + "'", line);
    const auto suffix = trim(std::string_view(end));
    return value * unit_scale(dim, suffix, line);
}

inline bool parse_bool(std::string_view text, int line)
{
    const auto t = trim(text);
    if (t == "true" || t == "on" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "off" || t == "no" || t == "0") return false;
    throw parse_error("expected a boolean, got '" + std::string(t) + "'", line);
}

inline Band parse_band(std::string_view text, int line)
{
    const auto t = trim(text);
    const auto colon = t.find(':');
    if (colon == std::string_view::npos)
        throw parse_error("band must look like '<low>:<high>'", line);
    Band band;
    band.low_hz = parse_quantity(t.substr(0, colon), Unit::Frequency, line);
    band.high_hz = parse_quantity(t.substr(colon + 1), Unit::Frequency, line);
    if (!(band.low_hz >= 0.0) || !(band.low_hz < band.high_hz))
        throw parse_error("band requires 0 <= low < high", line);
    return band;
}

inline std::vector<double> parse_frequency_list(std::string_view text, int line)
{
    std::vector<double> out;
    std::string_view rest = text;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto piece = comma == std::string_view::npos ? rest : rest.substr(0, comma);
        if (!trim(piece).empty()) out.push_back(parse_quantity(piece, Unit::Frequency, line));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return out;
}

} // namespace detail

inline ScenarioConfig parse_scenario(std::string_view text)
{
    using detail::Unit;
    ScenarioConfig config;
    config.disturbances.lines.clear();

    std::set<std::string> seen_sections;
    std::string section; // empty: top level
    MirrorLabel section_mirror = MirrorLabel::A;
    Disturbance *section_disturbance = nullptr;

    std::istringstream stream{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        std::string_view line{raw};
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw parse_error("unterminated section header", line_no);
            const std::string name{detail::trim(line.substr(1, line.size() - 2))};
            if (!seen_sections.insert(name).second)
                throw parse_error("duplicate section [" + name + "]", line_no);
            section = name;
            section_disturbance = nullptr;
            if (name.rfind("mirror ", 0) == 0) {
                const auto tail = detail::trim(std::string_view(name).substr(7));
                if (tail.size() != 1 || !mirror_label_from_char(tail.front()))
                    throw parse_error("mirror section must name one of A B C E F", line_no);
                section_mirror = *mirror_label_from_char(tail.front());
                section = "mirror";
            } else if (name.rfind("disturbance", 0) == 0) {
                config.disturbances.lines.emplace_back();
                section_disturbance = &config.disturbances.lines.back();
                section = "disturbance";
            } else if (name != "lengths" && name != "offsets" && name != "sampling" &&
                       name != "noise" && name != "tuning") {
                throw parse_error("unknown section [" + name + "]", line_no);
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw parse_error("expected 'key = value'", line_no);
        const std::string key{detail::trim(line.substr(0, eq))};
        const std::string_view value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw parse_error("expected 'key = value'", line_no);

        auto qty = [&](Unit dim) { return detail::parse_quantity(value, dim, line_no); };
        auto positive = [&](double v, const char *what) {
            if (!(v > 0.0)) throw parse_error(std::string(what) + " must be positive", line_no);
            return v;
        };
        auto non_negative = [&](double v, const char *what) {
            if (v < 0.0) throw parse_error(std::string(what) + " must be >= 0", line_no);
            return v;
        };

        if (section.empty()) {
            if (key == "variant") {
                if (value == "two-path") config.variant = ScenarioVariant::TwoPathAligned;
                else if (value == "nested-tuned") config.variant = ScenarioVariant::NestedTuned;
                else if (value == "nested-blocked") config.variant = ScenarioVariant::LowerBlocked;
                else throw parse_error("unknown variant '" + std::string(value) + "'", line_no);
            } else if (key == "deflection_factor") {
                const double v = qty(Unit::Dimensionless);
                if (v != 1.0 && v != 2.0)
                    throw parse_error("deflection_factor must be 1 or 2", line_no);
                config.params.deflection_factor = v;
            } else if (key == "beam_waist") {
                config.params.beam_waist_m = positive(qty(Unit::Length), "beam_waist");
            } else if (key == "band") {
                config.band = detail::parse_band(value, line_no);
            } else if (key == "exclude") {
                config.exclusions = detail::parse_frequency_list(value, line_no);
            } else if (key == "normalize") {
                config.normalize = detail::parse_bool(value, line_no);
            } else if (key == "detection_threshold_db") {
                config.detection_threshold_db = qty(Unit::Dimensionless);
            } else if (key == "tolerance_bins") {
                config.tolerance_bins = static_cast<int>(non_negative(qty(Unit::Dimensionless), "tolerance_bins"));
            } else if (key == "svg") {
                config.svg = detail::parse_bool(value, line_no);
            } else {
                throw parse_error("unknown key '" + key + "'", line_no);
            }
        } else if (section == "mirror") {
            auto &m = config.params.mirror(section_mirror);
            if (key == "frequency") m.frequency_hz = positive(qty(Unit::Frequency), "frequency");
            else if (key == "piezo_amplitude")
                m.piezo_amplitude_m = non_negative(qty(Unit::Length), "piezo_amplitude");
            else if (key == "pivot_offset")
                m.pivot_offset_m = positive(qty(Unit::Length), "pivot_offset");
            else if (key == "static_tilt") m.static_tilt_rad = qty(Unit::Angle);
            else if (key == "oscillation_phase") m.oscillation_phase_rad = qty(Unit::Angle);
            else if (key == "enabled") m.enabled = detail::parse_bool(value, line_no);
            else throw parse_error("unknown mirror key '" + key + "'", line_no);
        } else if (section == "lengths") {
            auto &p = config.params;
            if (key == "source_to_first_splitter")
                p.source_to_first_splitter_m = positive(qty(Unit::Length), key.c_str());
            else if (key == "first_splitter_to_e")
                p.first_splitter_to_e_m = positive(qty(Unit::Length), key.c_str());
            else if (key == "first_splitter_to_c")
                p.first_splitter_to_c_m = positive(qty(Unit::Length), key.c_str());
            else if (key == "e_to_detector")
                p.e_to_detector_m = positive(qty(Unit::Length), key.c_str());
            else if (key == "inner_to_detector")
                p.inner_to_detector_m = positive(qty(Unit::Length), key.c_str());
            else if (key == "c_to_detector")
                p.c_to_detector_m = positive(qty(Unit::Length), key.c_str());
            else if (key == "f_to_detector")
                p.f_to_detector_m = positive(qty(Unit::Length), key.c_str());
            else if (key == "last_splitter_to_detector")
                p.last_splitter_to_detector_m = positive(qty(Unit::Length), key.c_str());
            else if (key == "inner_splitter_to_mirror")
                p.inner_splitter_to_mirror_m = positive(qty(Unit::Length), key.c_str());
            else if (key == "recombiner_to_f")
                p.recombiner_to_f_m = positive(qty(Unit::Length), key.c_str());
            else if (key == "block_fraction") {
                const double v = qty(Unit::Dimensionless);
                if (!(v > 0.0) || !(v < 1.0))
                    throw parse_error("block_fraction must lie in (0, 1)", line_no);
                p.block_fraction = v;
            } else throw parse_error("unknown lengths key '" + key + "'", line_no);
        } else if (section == "offsets") {
            auto &p = config.params;
            if (key == "inner_a") p.offset_inner_a_m = qty(Unit::Length);
            else if (key == "inner_b") p.offset_inner_b_m = qty(Unit::Length);
            else if (key == "outer_upper") p.offset_outer_upper_m = qty(Unit::Length);
            else if (key == "outer_lower") p.offset_outer_lower_m = qty(Unit::Length);
            else throw parse_error("unknown offsets key '" + key + "'", line_no);
        } else if (section == "tuning") {
            if (key == "inner_phase") config.params.inner_phase_rad = qty(Unit::Angle);
            else if (key == "outer_phase") config.params.outer_phase_rad = qty(Unit::Angle);
            else throw parse_error("unknown tuning key '" + key + "'", line_no);
        } else if (section == "sampling") {
            if (key == "sample_rate")
                config.sampling.sample_rate_hz = positive(qty(Unit::Frequency), "sample_rate");
            else if (key == "duration")
                config.sampling.duration_s = positive(qty(Unit::Time), "duration");
            else if (key == "window") {
                if (value == "rectangular") config.sampling.window = WindowKind::rectangular;
                else if (value == "hann") config.sampling.window = WindowKind::hann;
                else throw parse_error("window must be 'rectangular' or 'hann'", line_no);
            } else throw parse_error("unknown sampling key '" + key + "'", line_no);
        } else if (section == "noise") {
            if (key == "sigma")
                config.disturbances.noise_sigma = non_negative(qty(Unit::Dimensionless), "sigma");
            else if (key == "seed") {
                unsigned long long seed = 0;
                const std::string s{value};
                const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
                if (ec != std::errc{} || ptr != s.data() + s.size())
                    throw parse_error("seed must be an unsigned integer", line_no);
                config.disturbances.seed = seed;
            } else throw parse_error("unknown noise key '" + key + "'", line_no);
        } else if (section == "disturbance") {
            auto &d = *section_disturbance;
            if (key == "frequency") d.frequency_hz = positive(qty(Unit::Frequency), "frequency");
            else if (key == "relative_amplitude")
                d.relative_amplitude = non_negative(qty(Unit::Dimensionless), "relative_amplitude");
            else if (key == "phase") d.phase_rad = qty(Unit::Angle);
            else throw parse_error("unknown disturbance key '" + key + "'", line_no);
        }
    }

    for (const auto &d : config.disturbances.lines)
        if (!(d.frequency_hz > 0.0))
            throw parse_error("every disturbance section needs a positive frequency");

    // the config must describe a buildable, valid graph
    require_valid(config.build());
    return config;
}

inline ScenarioConfig parse_scenario_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open scenario file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

namespace detail {

inline std::string fmt_full(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Canonical text form; parse_scenario(write_scenario(c)) reproduces c.
inline std::string write_scenario(const ScenarioConfig &config)
{
    std::ostringstream os;
    const auto &p = config.params;

    os << "variant = "
       << (config.variant == ScenarioVariant::TwoPathAligned    ? "two-path"
           : config.variant == ScenarioVariant::NestedTuned ? "nested-tuned"
                                                                : "nested-blocked")
       << '\n';
    os << "deflection_factor = " << detail::fmt_full(p.deflection_factor) << '\n';
    os << "beam_waist = " << detail::fmt_full(p.beam_waist_m) << '\n';
    os << "band = " << detail::fmt_full(config.band.low_hz) << ':'
       << detail::fmt_full(config.band.high_hz) << '\n';
    if (!config.exclusions.empty()) {
        os << "exclude = ";
        for (std::size_t i = 0; i < config.exclusions.size(); ++i)
            os << (i ? ", " : "") << detail::fmt_full(config.exclusions[i]);
        os << '\n';
    }
    os << "normalize = " << (config.normalize ? "true" : "false") << '\n';
    os << "detection_threshold_db = " << detail::fmt_full(config.detection_threshold_db) << '\n';
    os << "tolerance_bins = " << config.tolerance_bins << '\n';
    os << "svg = " << (config.svg ? "true" : "false") << '\n';

    for (const auto &m : p.mirrors) {
        os << "\n[mirror " << to_char(m.id) << "]\n";
        os << "frequency = " << detail::fmt_full(m.frequency_hz) << '\n';
        os << "piezo_amplitude = " << detail::fmt_full(m.piezo_amplitude_m) << '\n';
        os << "pivot_offset = " << detail::fmt_full(m.pivot_offset_m) << '\n';
        os << "static_tilt = " << detail::fmt_full(m.static_tilt_rad) << '\n';
        os << "oscillation_phase = " << detail::fmt_full(m.oscillation_phase_rad) << '\n';
        os << "enabled = " << (m.enabled ? "true" : "false") << '\n';
    }

    os << "\n[lengths]\n";
    os << "source_to_first_splitter = " << detail::fmt_full(p.source_to_first_splitter_m) << '\n';
    os << "first_splitter_to_e = " << detail::fmt_full(p.first_splitter_to_e_m) << '\n';
    os << "first_splitter_to_c = " << detail::fmt_full(p.first_splitter_to_c_m) << '\n';
    os << "e_to_detector = " << detail::fmt_full(p.e_to_detector_m) << '\n';
    os << "inner_to_detector = " << detail::fmt_full(p.inner_to_detector_m) << '\n';
    os << "c_to_detector = " << detail::fmt_full(p.c_to_detector_m) << '\n';
    os << "f_to_detector = " << detail::fmt_full(p.f_to_detector_m) << '\n';
    os << "last_splitter_to_detector = " << detail::fmt_full(p.last_splitter_to_detector_m) << '\n';
    os << "inner_splitter_to_mirror = " << detail::fmt_full(p.inner_splitter_to_mirror_m) << '\n';
    os << "recombiner_to_f = " << detail::fmt_full(p.recombiner_to_f_m) << '\n';
    os << "block_fraction = " << detail::fmt_full(p.block_fraction) << '\n';

    os << "\n[offsets]\n";
    os << "inner_a = " << detail::fmt_full(p.offset_inner_a_m) << '\n';
    os << "inner_b = " << detail::fmt_full(p.offset_inner_b_m) << '\n';
    os << "outer_upper = " << detail::fmt_full(p.offset_outer_upper_m) << '\n';
    os << "outer_lower = " << detail::fmt_full(p.offset_outer_lower_m) << '\n';

    os << "\n[tuning]\n";
    os << "inner_phase = " << detail::fmt_full(p.inner_phase_rad) << '\n';
    os << "outer_phase = " << detail::fmt_full(p.outer_phase_rad) << '\n';

    os << "\n[sampling]\n";
    os << "sample_rate = " << detail::fmt_full(config.sampling.sample_rate_hz) << '\n';
    os << "duration = " << detail::fmt_full(config.sampling.duration_s) << '\n';
    os << "window = "
       << (config.sampling.window == WindowKind::hann ? "hann" : "rectangular") << '\n';

    os << "\n[noise]\n";
    os << "sigma = " << detail::fmt_full(config.disturbances.noise_sigma) << '\n';
    os << "seed = " << config.disturbances.seed << '\n';

    for (std::size_t i = 0; i < config.disturbances.lines.size(); ++i) {
        const auto &d = config.disturbances.lines[i];
        os << "\n[disturbance " << i + 1 << "]\n";
        os << "frequency = " << detail::fmt_full(d.frequency_hz) << '\n';
        os << "relative_amplitude = " << detail::fmt_full(d.relative_amplitude) << '\n';
        os << "phase = " << detail::fmt_full(d.phase_rad) << '\n';
    }
    return os.str();
}

} // namespace nmzi

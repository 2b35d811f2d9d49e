#pragma once

#include "nmzi/scenario.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nmzi {

// ---------------------------------------------------------------------------
// CSV / SVG / manifest emission and the scenario pipelines behind the CLI.
//
// CSV contract: header row, comma separator, lowercase scientific notation
// with 12 significant digits, LF newlines.  Byte-stable across reruns.
// ---------------------------------------------------------------------------

namespace csv {

inline std::string format_sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return buf;
}

inline std::string timeseries_text(const TimeSeries &ts)
{
    std::ostringstream os;
    os << "t_seconds,signal\n";
    for (std::size_t k = 0; k < ts.samples.size(); ++k) {
        os << format_sci(static_cast<double>(k) / ts.sample_rate_hz) << ','
           << format_sci(ts.samples[k]) << '\n';
    }
    return os.str();
}

inline std::string spectrum_text(const PowerSpectrum &spec)
{
    std::ostringstream os;
    os << "frequency_hz,power\n";
    for (int k = 0; k < spec.bins(); ++k)
        os << format_sci(spec.frequency(k)) << ',' << format_sci(spec.powers[static_cast<std::size_t>(k)])
           << '\n';
    return os.str();
}

inline TimeSeries parse_timeseries(const std::string &text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "t_seconds,signal")
        throw parse_error("time-series CSV must start with 't_seconds,signal'", 1);

    std::vector<double> t, x;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw parse_error("expected 't,signal' row", line_no);
        char *end = nullptr;
        const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
        const double tv = std::strtod(a.c_str(), &end);
        if (end != a.c_str() + a.size()) throw parse_error("bad time value", line_no);
        const double xv = std::strtod(b.c_str(), &end);
        if (end != b.c_str() + b.size()) throw parse_error("bad signal value", line_no);
        t.push_back(tv);
        x.push_back(xv);
    }
    if (x.size() < 2) throw parse_error("time series needs at least two rows");

    TimeSeries ts;
    ts.sample_rate_hz = static_cast<double>(x.size() - 1) / (t.back() - t.front());
    ts.samples = std::move(x);
    return ts;
}

inline TimeSeries read_timeseries(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open CSV file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_timeseries(buffer.str());
}

} // namespace csv

/// FNV-1a 64-bit; the manifest checksum.
inline std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Minimal polyline plot, fixed 800x500 viewport, linear axes with ticks.
inline std::string svg_spectrum_text(const PowerSpectrum &spec, std::optional<Band> focus = {})
{
    const double width = 800, height = 500;
    const double left = 70, right = 20, top = 20, bottom = 50;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double f_lo = 0.0, f_hi = spec.nyquist_hz();
    if (focus) {
        f_lo = focus->low_hz;
        f_hi = focus->high_hz;
    }
    double p_max = 0.0;
    for (int k = 0; k < spec.bins(); ++k) {
        const double f = spec.frequency(k);
        if (f >= f_lo && f <= f_hi) p_max = std::max(p_max, spec.powers[static_cast<std::size_t>(k)]);
    }
    if (p_max <= 0.0) p_max = 1.0;

    auto x_of = [&](double f) { return left + plot_w * (f - f_lo) / (f_hi - f_lo); };
    auto y_of = [&](double p) { return top + plot_h * (1.0 - p / p_max); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
          "viewBox=\"0 0 800 500\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\""
       << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";

    char label[32];
    for (int i = 0; i <= 5; ++i) {
        const double f = f_lo + (f_hi - f_lo) * i / 5.0;
        const double x = x_of(f);
        os << "<line x1=\"" << x << "\" y1=\"" << top + plot_h << "\" x2=\"" << x << "\" y2=\""
           << top + plot_h + 6 << "\" stroke=\"black\"/>\n";
        std::snprintf(label, sizeof label, "%.4g", f);
        os << "<text x=\"" << x << "\" y=\"" << top + plot_h + 22
           << "\" font-size=\"12\" text-anchor=\"middle\">" << label << "</text>\n";

        const double p = p_max * i / 5.0;
        const double y = y_of(p);
        os << "<line x1=\"" << left - 6 << "\" y1=\"" << y << "\" x2=\"" << left << "\" y2=\"" << y
           << "\" stroke=\"black\"/>\n";
        std::snprintf(label, sizeof label, "%.3g", p);
        os << "<text x=\"" << left - 10 << "\" y=\"" << y + 4
           << "\" font-size=\"12\" text-anchor=\"end\">" << label << "</text>\n";
    }
    os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
       << "\" font-size=\"13\" text-anchor=\"middle\">frequency (Hz)</text>\n";
    os << "<text x=\"16\" y=\"" << top + plot_h / 2
       << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << top + plot_h / 2 << ")\">power</text>\n";

    os << "<polyline fill=\"none\" stroke=\"#1f4e99\" stroke-width=\"1\" points=\"";
    bool first = true;
    for (int k = 0; k < spec.bins(); ++k) {
        const double f = spec.frequency(k);
        if (f < f_lo || f > f_hi) continue;
        if (!first) os << ' ';
        first = false;
        os << x_of(f) << ',' << y_of(spec.powers[static_cast<std::size_t>(k)]);
    }
    os << "\"/>\n</svg>\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// TSVF report
// ---------------------------------------------------------------------------

inline std::string tsvf_report_text(const InterferometerGraph &graph,
                                    const OverlapReport &overlap,
                                    const AgreementReport *comparison = nullptr,
                                    const Band *band = nullptr)
{
    std::ostringstream os;
    os << "# two-state-vector analysis\n";
    os << "detector_amplitude = " << csv::format_sci(overlap.detector_amplitude.real()) << " "
       << csv::format_sci(overlap.detector_amplitude.imag())
       << "  (magnitude " << csv::format_sci(std::abs(overlap.detector_amplitude)) << ")\n";
    os << "overlap_threshold = " << csv::format_sci(overlap.threshold) << "\n\n";

    os << "mirror  forward_mag     backward_mag    in_overlap\n";
    for (const auto &m : overlap.mirrors) {
        os << to_char(m.mirror) << "       " << csv::format_sci(m.forward_magnitude) << "  "
           << csv::format_sci(m.backward_magnitude) << "  "
           << (overlap.contains(m.mirror) ? "yes" : "no") << '\n';
    }

    os << "\nweak values (path projectors):\n";
    if (std::abs(overlap.detector_amplitude) < 1e-12) {
        os << "  ill-conditioned: detector amplitude vanishes\n";
    } else {
        for (const auto &m : overlap.mirrors) {
            const auto wv = weak_value(graph, m.mirror);
            os << "  " << to_char(m.mirror) << " = " << csv::format_sci(wv.real()) << " "
               << csv::format_sci(wv.imag()) << "\n";
        }
    }

    if (comparison && band) {
        os << "\n# prediction vs simulated spectrum\n";
        os << "band = " << band->low_hz << ":" << band->high_hz
           << "  detection_threshold_db = " << comparison->detection_threshold_db
           << "  masked_median = " << csv::format_sci(comparison->masked_median_power) << '\n';
        os << "mirror  predicted  detected  peak_power        verdict\n";
        for (const auto &e : comparison->entries) {
            os << to_char(e.mirror) << "       " << (e.predicted ? "yes" : "no ") << "        "
               << (e.detected ? "yes" : "no ") << "       " << csv::format_sci(e.peak_power)
               << "  " << (e.predicted == e.detected ? "agree" : "DISAGREE") << '\n';
        }
        os << "disagreements:";
        if (comparison->disagreements.empty()) {
            os << " none\n";
        } else {
            for (auto m : comparison->disagreements) os << ' ' << to_char(m);
            os << '\n';
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

struct RunArtifacts {
    std::filesystem::path directory;
    std::vector<std::pair<std::string, std::uint64_t>> files; ///< name -> fnv1a64
    double dominant_peak_hz = 0.0;
    AgreementReport comparison;
};

namespace detail {

inline void write_file(const std::filesystem::path &path, const std::string &bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write failed: " + path.string());
}

} // namespace detail

/// Full scenario run: time series, spectrum, TSVF report, manifest, optional
/// SVG.  Byte-deterministic for identical config and seed.
inline RunArtifacts run_scenario(const ScenarioConfig &config, const std::filesystem::path &out_dir,
                                 std::optional<std::uint64_t> seed_override = {},
                                 bool force_svg = false)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create output directory: " + out_dir.string());

    ScenarioConfig effective = config;
    if (seed_override) effective.disturbances.seed = *seed_override;

    const auto graph = effective.build();
    const auto simulated = simulate_time_series(graph, effective.sampling, effective.disturbances);

    // The emitted CSV is the source of truth: the spectrum is computed from
    // the 12-digit quantized series, so re-analysing timeseries.csv
    // reproduces spectrum.csv byte for byte.
    const std::string ts_text = csv::timeseries_text(simulated);
    const auto ts = csv::parse_timeseries(ts_text);

    auto spec = power_spectrum(apply_window(ts, effective.sampling.window));
    if (effective.normalize) spec = band_normalize(spec, effective.band);

    const auto overlap = overlap_set(graph);
    const auto comparison =
        compare_predictions(overlap, spec, effective.mirror_frequencies(), effective.band,
                            effective.detection_threshold_db, effective.exclusions,
                            effective.tolerance_bins);

    RunArtifacts artifacts;
    artifacts.directory = out_dir;
    artifacts.comparison = comparison;
    artifacts.dominant_peak_hz =
        dominant_peak(spec, effective.band, effective.exclusions, 2.0 * spec.bin_width_hz);

    auto emit = [&](const std::string &name, const std::string &bytes) {
        detail::write_file(out_dir / name, bytes);
        artifacts.files.emplace_back(name, fnv1a64(bytes));
    };

    emit("timeseries.csv", ts_text);
    emit("spectrum.csv", csv::spectrum_text(spec));
    emit("tsvf_report.txt", tsvf_report_text(graph, overlap, &comparison, &effective.band));
    if (effective.svg || force_svg) emit("spectrum.svg", svg_spectrum_text(spec, effective.band));

    std::ostringstream manifest;
    manifest << "# run manifest\n";
    manifest << "seed = " << effective.disturbances.seed << "\n";
    manifest << "dominant_peak_hz = " << csv::format_sci(artifacts.dominant_peak_hz) << "\n";
    manifest << "\n[scenario]\n" << write_scenario(effective);
    manifest << "\n[artifacts]\n";
    char sum[24];
    for (const auto &[name, checksum] : artifacts.files) {
        std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(checksum));
        manifest << name << " fnv1a64=" << sum << "\n";
    }
    detail::write_file(out_dir / "manifest.txt", manifest.str());
    artifacts.files.emplace_back("manifest.txt", fnv1a64(manifest.str()));

    return artifacts;
}

struct AnalyzeResult {
    PowerSpectrum spectrum;
    double dominant_peak_hz = 0.0;
    std::filesystem::path spectrum_csv;
};

/// Re-analysis of an exported (or external) time-series CSV.
inline AnalyzeResult analyze_timeseries_csv(const std::filesystem::path &csv_path, const Band &band,
                                            bool normalize, const std::vector<double> &exclusions,
                                            WindowKind window = WindowKind::hann,
                                            const std::filesystem::path &out_dir = ".",
                                            bool emit_svg = false)
{
    const auto ts = csv::read_timeseries(csv_path);
    auto spec = power_spectrum(apply_window(ts, window));
    if (normalize) spec = band_normalize(spec, band);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create output directory: " + out_dir.string());

    AnalyzeResult result;
    result.spectrum = spec;
    result.dominant_peak_hz = dominant_peak(spec, band, exclusions, 2.0 * spec.bin_width_hz);
    result.spectrum_csv = out_dir / "spectrum.csv";
    detail::write_file(result.spectrum_csv, csv::spectrum_text(spec));
    if (emit_svg) detail::write_file(out_dir / "spectrum.svg", svg_spectrum_text(spec, band));
    return result;
}

struct CalibrationResult {
    double offset_m = 0.0;
    double achieved_visibility = 0.0;
};

/// Visibility calibration against the scenario's graph; optionally writes an
/// updated scenario with the offset applied to the outer lower arm.
inline CalibrationResult calibrate_scenario(const ScenarioConfig &config, double target_visibility,
                                            const std::optional<std::filesystem::path> &updated_path = {})
{
    const auto graph = config.build();
    CalibrationResult result;
    result.offset_m = calibrate_misalignment(graph, target_visibility);

    InterferometerGraph check = graph;
    const int segment = detail::designated_outer_arm(check);
    check.segments[static_cast<std::size_t>(segment)].transverse_offset_m = result.offset_m;
    result.achieved_visibility = visibility(check);

    if (updated_path) {
        ScenarioConfig updated = config;
        updated.params.offset_outer_lower_m = result.offset_m;
        detail::write_file(*updated_path, write_scenario(updated));
    }
    return result;
}

} // namespace nmzi

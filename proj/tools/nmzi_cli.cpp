// nmzi command-line front end.
//
// Exit codes: 0 success, 1 validation/parse failure, 2 I/O failure.

#include "nmzi/artifacts.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

nmzi::Band parse_band_arg(const std::string &text)
{
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw nmzi::parse_error("--band must look like '<low>:<high>'");
    try {
        nmzi::Band band{std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
        if (!(band.low_hz >= 0.0) || !(band.low_hz < band.high_hz))
            throw nmzi::parse_error("--band requires 0 <= low < high");
        return band;
    } catch (const std::invalid_argument &) {
        throw nmzi::parse_error("--band must contain two numbers");
    }
}

std::vector<double> parse_exclude_arg(const std::string &text)
{
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string piece = text.substr(pos, comma - pos);
        if (!piece.empty()) {
            try {
                out.push_back(std::stod(piece));
            } catch (const std::invalid_argument &) {
                throw nmzi::parse_error("--exclude must be a comma-separated list of frequencies");
            }
        }
        pos = comma + 1;
    }
    return out;
}

int run_command(const std::string &scenario_path, const std::string &out_dir,
                std::optional<std::uint64_t> seed, bool svg)
{
    const auto config = nmzi::parse_scenario_file(scenario_path);
    const auto artifacts = nmzi::run_scenario(config, out_dir, seed, svg);
    std::cout << "wrote " << artifacts.files.size() << " artifacts to " << out_dir << "\n";
    for (const auto &[name, checksum] : artifacts.files) {
        char sum[24];
        std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(checksum));
        std::cout << "  " << name << "  fnv1a64=" << sum << "\n";
    }
    std::cout << "dominant peak in band: " << artifacts.dominant_peak_hz << " Hz\n";
    if (artifacts.comparison.full_agreement()) {
        std::cout << "TSVF prediction and simulated spectrum agree on every mirror\n";
    } else {
        std::cout << "TSVF disagreement at:";
        for (auto m : artifacts.comparison.disagreements) std::cout << ' ' << nmzi::to_char(m);
        std::cout << "\n";
    }
    return 0;
}

int tsvf_command(const std::string &scenario_path)
{
    const auto config = nmzi::parse_scenario_file(scenario_path);
    const auto graph = config.build();
    const auto overlap = nmzi::overlap_set(graph);
    std::cout << nmzi::tsvf_report_text(graph, overlap);
    return 0;
}

int calibrate_command(const std::string &scenario_path, double target,
                      const std::string &write_path)
{
    const auto config = nmzi::parse_scenario_file(scenario_path);
    std::optional<std::filesystem::path> updated;
    if (!write_path.empty()) updated = write_path;
    const auto result = nmzi::calibrate_scenario(config, target, updated);
    std::cout << "calibrated offset: " << nmzi::csv::format_sci(result.offset_m) << " m\n";
    std::cout << "achieved visibility: " << nmzi::csv::format_sci(result.achieved_visibility)
              << "\n";
    if (updated) std::cout << "updated scenario written to " << write_path << "\n";
    return 0;
}

int analyze_command(const std::string &csv_path, const std::string &band_text, bool normalize,
                    const std::string &exclude_text, const std::string &window,
                    const std::string &out_dir, bool svg)
{
    const auto band = parse_band_arg(band_text);
    const auto exclusions = parse_exclude_arg(exclude_text);
    nmzi::WindowKind kind = nmzi::WindowKind::hann;
    if (window == "rectangular") kind = nmzi::WindowKind::rectangular;
    else if (window != "hann") throw nmzi::parse_error("--window must be 'hann' or 'rectangular'");

    const auto result =
        nmzi::analyze_timeseries_csv(csv_path, band, normalize, exclusions, kind, out_dir, svg);
    std::cout << "wrote " << result.spectrum_csv.string() << "\n";
    std::cout << "dominant peak in band: " << result.dominant_peak_hz << " Hz\n";
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"nested Mach-Zehnder interferometer simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out", write_path, csv_path, band_text,
                exclude_text, window = "hann";
    double target_visibility = 0.95;
    std::optional<std::uint64_t> seed;
    bool svg = false, normalize = false;

    auto *run = app.add_subcommand("run", "simulate a scenario and emit artifacts");
    run->add_option("--scenario", scenario_path, "scenario file")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--seed", seed, "override the noise seed");
    run->add_flag("--svg", svg, "also emit spectrum.svg");

    auto *tsvf = app.add_subcommand("tsvf", "two-state-vector analysis of a scenario");
    tsvf->add_option("--scenario", scenario_path, "scenario file")->required();

    auto *calibrate = app.add_subcommand("calibrate", "find the offset for a target visibility");
    calibrate->add_option("--scenario", scenario_path, "scenario file")->required();
    calibrate->add_option("--visibility", target_visibility, "target visibility in (0, 1]")
        ->required();
    calibrate->add_option("--write-scenario", write_path, "write the calibrated scenario here");

    auto *analyze = app.add_subcommand("analyze", "power spectrum of a time-series CSV");
    analyze->add_option("--csv", csv_path, "timeseries.csv produced by 'run' (or compatible)")
        ->required();
    analyze->add_option("--band", band_text, "analysis band '<low>:<high>' in Hz")->required();
    analyze->add_flag("--normalize", normalize, "normalize the band integral to 1");
    analyze->add_option("--exclude", exclude_text, "comma-separated lines to mask");
    analyze->add_option("--window", window, "hann (default) or rectangular");
    analyze->add_option("--out", out_dir, "output directory (default '.')");
    analyze->add_flag("--svg", svg, "also emit spectrum.svg");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return run_command(scenario_path, out_dir, seed, svg);
        if (tsvf->parsed()) return tsvf_command(scenario_path);
        if (calibrate->parsed()) return calibrate_command(scenario_path, target_visibility, write_path);
        if (analyze->parsed()) {
            if (!analyze->count("--out")) out_dir = ".";
            return analyze_command(csv_path, band_text, normalize, exclude_text, window, out_dir,
                                   svg);
        }
        return 0;
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const nmzi::io_error &e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error &e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

// Acceptance suite: one pass/fail line per criterion.

#include <catch2/catch_amalgamated.hpp>

#include "nmzi/artifacts.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>

using namespace nmzi;

#ifndef NMZI_SCENARIO_DIR
#define NMZI_SCENARIO_DIR "scenarios"
#endif

namespace {

namespace fs = std::filesystem;

void report(int criterion, const char *label, bool pass)
{
    std::printf("ACCEPTANCE %d [%s]: %s\n", criterion, label, pass ? "PASS" : "FAIL");
    std::fflush(stdout);
    CHECK(pass);
}

double db_ratio(double a, double b) { return 10.0 * std::log10(a / b); }

std::string slurp(const fs::path &path)
{
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

const std::vector<double> kMirrorTones = {275.0, 288.0, 298.0, 318.0, 332.0};

} // namespace

TEST_CASE("acceptance criteria", "[acceptance]")
{
    // ----------------------------------------------------------------- 1
    {
        const double tilt = tilt_from_piezo(10e-9, 1e-2);
        const double displacement = displacement_at_distance(tilt, 0.10, 1.0);
        report(1, "lever arm: 10 nm piezo at 1 cm over 10 cm gives 100 nm",
               std::abs(displacement - 100e-9) < 1e-12 * 100e-9);
    }

    // ----------------------------------------------------------------- 2
    {
        const auto config = parse_scenario_file(fs::path(NMZI_SCENARIO_DIR) / "nested_tuned.scenario");
        const auto graph = config.build();
        const auto ts = simulate_time_series(graph, config.sampling, config.disturbances);
        const auto spec = power_spectrum(apply_window(ts, config.sampling.window));

        const double median = masked_band_median(spec, config.band, kMirrorTones, 2);
        const auto peaks = peak_heights(spec, kMirrorTones, 2);

        const bool driven = db_ratio(peaks.at(288.0), median) >= 30.0 &&
                            db_ratio(peaks.at(298.0), median) >= 30.0 &&
                            db_ratio(peaks.at(318.0), median) >= 30.0;
        const bool silent = peaks.at(275.0) <= std::pow(10.0, 0.6) * median &&
                            peaks.at(332.0) <= std::pow(10.0, 0.6) * median;
        report(2, "nested-tuned: peaks at f_A f_B f_C only", driven && silent);
    }

    // ----------------------------------------------------------------- 3 & 4
    {
        // offset scale from the visibility calibration on the two-path reference
        const auto reference = build_scenario(ScenarioVariant::TwoPathAligned);
        const double d = calibrate_misalignment(reference, 0.95);

        InterferometerGraph check = reference;
        check.segments[static_cast<std::size_t>(detail::designated_outer_arm(check))]
            .transverse_offset_m = d;
        const double achieved = visibility(check);

        const auto config = parse_scenario_file(fs::path(NMZI_SCENARIO_DIR) / "nested_blocked.scenario");
        // the shipped misalignment distributes the calibrated offset over the
        // inner arms as +3d/4 and -d/4 (separation d, plus a generic common
        // component so the dark-port leak is bright at the cell centre)
        const bool offsets_recorded =
            std::abs(config.params.offset_inner_a_m - 0.75 * d) < 1e-3 * d &&
            std::abs(config.params.offset_inner_b_m + 0.25 * d) < 1e-3 * d;

        const auto graph = config.build();
        const auto ts = simulate_time_series(graph, config.sampling, config.disturbances);
        auto spec = power_spectrum(apply_window(ts, config.sampling.window));
        spec = band_normalize(spec, config.band);

        const double dominant =
            dominant_peak(spec, config.band, config.exclusions, 2.0 * spec.bin_width_hz);
        const auto peaks = peak_heights(spec, kMirrorTones, config.tolerance_bins);
        const bool e_dominates = db_ratio(peaks.at(275.0), peaks.at(288.0)) >= 6.0 &&
                                 db_ratio(peaks.at(275.0), peaks.at(298.0)) >= 6.0;

        report(3, "nested-blocked at 95% visibility: f_E dominates",
               std::abs(achieved - 0.95) <= 0.005 && offsets_recorded && dominant == 275.0 &&
                   e_dominates);

        // criterion 4: TSVF sets and the disagreement flag on this output
        const auto overlap_2b = overlap_set(build_scenario(ScenarioVariant::NestedTuned));
        const auto overlap_2c = overlap_set(graph);
        const bool sets_ok =
            overlap_2b.overlap_set ==
                std::vector<MirrorLabel>{MirrorLabel::A, MirrorLabel::B, MirrorLabel::C} &&
            overlap_2c.overlap_set == std::vector<MirrorLabel>{MirrorLabel::A, MirrorLabel::B};

        bool ill_conditioned = false;
        try {
            (void)weak_value(graph, MirrorLabel::A);
        } catch (const ill_conditioned_weak_value_error &) {
            ill_conditioned = true;
        }

        const auto comparison =
            compare_predictions(overlap_2c, spec, config.mirror_frequencies(), config.band,
                                config.detection_threshold_db, config.exclusions,
                                config.tolerance_bins);
        const bool flags_ok = comparison.disagrees_on(MirrorLabel::E) &&
                              !comparison.disagrees_on(MirrorLabel::A) &&
                              !comparison.disagrees_on(MirrorLabel::B) &&
                              !comparison.disagrees_on(MirrorLabel::C);

        report(4, "TSVF overlap sets, ill-conditioned weak values, disagreement at E",
               sets_ok && ill_conditioned && flags_ok);
    }

    // ----------------------------------------------------------------- 5
    {
        bool fft_ok = true;
        std::mt19937_64 rng(123);
        for (std::size_t n : {256u, 512u, 1024u}) {
            std::vector<std::complex<double>> x(n);
            std::uniform_real_distribution<double> dist(-1.0, 1.0);
            for (auto &v : x) v = {dist(rng), dist(rng)};
            auto fast = x;
            detail::fft_radix2(fast);
            // independent O(N^2) oracle
            double max_mag = 0.0, max_err = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                std::complex<double> sum{0.0, 0.0};
                for (std::size_t j = 0; j < n; ++j)
                    sum += x[j] * std::polar(1.0, -2.0 * std::numbers::pi *
                                                     static_cast<double>(k * j % n) /
                                                     static_cast<double>(n));
                max_mag = std::max(max_mag, std::abs(sum));
                max_err = std::max(max_err, std::abs(fast[k] - sum));
            }
            fft_ok = fft_ok && max_err <= 1e-9 * max_mag;
        }

        bool parseval_ok = true;
        for (int trial = 0; trial < 100; ++trial) {
            TimeSeries ts;
            ts.sample_rate_hz = 1024.0;
            ts.samples.resize(256);
            std::uniform_real_distribution<double> dist(-1.0, 1.0);
            for (auto &v : ts.samples) v = dist(rng);
            const auto spec = power_spectrum(ts);
            double te = 0.0, fe = 0.0;
            for (double v : ts.samples) te += v * v;
            for (double p : spec.powers) fe += p;
            parseval_ok = parseval_ok && std::abs(fe - te) <= 1e-9 * te;
        }

        bool quadrature_ok = true;
        const double w = 1e-3;
        for (double ratio : {0.0, 0.1, 0.5, 1.0, 2.0}) {
            PathContribution c;
            c.amplitude = 1.0;
            c.displacement_m = ratio * w;
            const auto numeric = qcd_difference_signal({c}, w);
            const auto exact = closed_form_single_gaussian(ratio * w, w);
            quadrature_ok = quadrature_ok && std::abs(numeric.total - exact.total) <= 1e-9 * exact.total;
            const double tol = ratio == 0.0 ? 1e-9 * exact.total : 1e-9 * std::abs(exact.difference);
            quadrature_ok = quadrature_ok && std::abs(numeric.difference - exact.difference) <= tol;
        }

        const auto reference = build_scenario(ScenarioVariant::TwoPathAligned);
        const double d95 = calibrate_misalignment(reference, 0.95);
        InterferometerGraph check = reference;
        check.segments[static_cast<std::size_t>(detail::designated_outer_arm(check))]
            .transverse_offset_m = d95;
        const bool bisection_ok = std::abs(visibility(check) - 0.95) <= 1e-6;

        report(5, "numerical oracles: FFT/DFT, Parseval, quadrature vs erf, bisection",
               fft_ok && parseval_ok && quadrature_ok && bisection_ok);
    }

    // ----------------------------------------------------------------- 6
    {
        std::vector<double> log_amp, log_power;
        for (double amp_nm : {1.0, 1.778, 3.162, 5.623, 10.0}) {
            ScenarioParams params;
            params.mirror(MirrorLabel::C).piezo_amplitude_m = amp_nm * 1e-9;
            const auto g = build_scenario(ScenarioVariant::NestedTuned, params);
            SamplingSpec sampling;
            const auto ts = simulate_time_series(g, sampling);
            const auto spec = power_spectrum(apply_window(ts, sampling.window));
            const auto peaks = peak_heights(spec, {318.0}, 2);
            log_amp.push_back(std::log(amp_nm));
            log_power.push_back(std::log(peaks.at(318.0)));
        }
        // least-squares slope
        const auto n = static_cast<double>(log_amp.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < log_amp.size(); ++i) {
            sx += log_amp[i];
            sy += log_power[i];
            sxx += log_amp[i] * log_amp[i];
            sxy += log_amp[i] * log_power[i];
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        report(6, "f_C peak power scales quadratically with piezo amplitude",
               std::abs(slope - 2.0) <= 0.02);
    }

    // ----------------------------------------------------------------- 7
    {
        const auto config = parse_scenario_file(fs::path(NMZI_SCENARIO_DIR) / "nested_blocked.scenario");
        const auto dir1 = fs::temp_directory_path() / "nmzi_acceptance_run1";
        const auto dir2 = fs::temp_directory_path() / "nmzi_acceptance_run2";
        fs::remove_all(dir1);
        fs::remove_all(dir2);
        run_scenario(config, dir1, std::uint64_t{20251111});
        run_scenario(config, dir2, std::uint64_t{20251111});
        const bool identical = slurp(dir1 / "timeseries.csv") == slurp(dir2 / "timeseries.csv") &&
                               slurp(dir1 / "spectrum.csv") == slurp(dir2 / "spectrum.csv");
        fs::remove_all(dir1);
        fs::remove_all(dir2);
        report(7, "identical scenario and seed give byte-identical artifacts", identical);
    }
}

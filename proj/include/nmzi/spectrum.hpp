#pragma once

#include "nmzi/detector.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <thread>
#include <vector>

namespace nmzi {

// ---------------------------------------------------------------------------
// Sampling, spectra and peak bookkeeping.
//
// Periodogram convention: with X = FFT(x), the one-sided power at bin k is
//     P_k = |X_k|^2 / N, doubled for 0 < k < N/2 (DC and Nyquist undoubled),
// so that sum_k P_k equals sum_n x_n^2 exactly (Parseval).
// ---------------------------------------------------------------------------

enum class WindowKind { rectangular, hann };

struct SamplingSpec {
    double sample_rate_hz = 2048.0;
    double duration_s = 2.0;
    WindowKind window = WindowKind::hann;

    /// Rounded sample count; must be a power of two >= 256.
    int sample_count() const
    {
        const long long n = std::llround(sample_rate_hz * duration_s);
        if (n < 256 || (n & (n - 1)) != 0)
            throw std::domain_error("sample_rate * duration must round to a power of two >= 256");
        return static_cast<int>(n);
    }
};

struct Disturbance {
    double frequency_hz = 0.0;
    double relative_amplitude = 0.0;
    double phase_rad = 0.0;
};

struct DisturbanceSpec {
    std::vector<Disturbance> lines;
    double noise_sigma = 0.0; ///< relative to the nominal total detector power
    std::uint64_t seed = 1;
};

struct TimeSeries {
    double sample_rate_hz = 0.0;
    std::vector<double> samples;
};

struct Band {
    double low_hz = 0.0;
    double high_hz = 0.0;
};

struct PowerSpectrum {
    double bin_width_hz = 0.0;
    std::vector<double> powers; ///< one-sided, DC first
    std::optional<Band> normalized_band;
    bool zero_padded = false;

    double frequency(int bin) const { return bin_width_hz * bin; }
    int bins() const { return static_cast<int>(powers.size()); }
    double nyquist_hz() const { return bin_width_hz * (bins() - 1); }
};

namespace detail {

inline void check_series(const TimeSeries &ts)
{
    if (ts.samples.empty()) throw std::domain_error("time series is empty");
    if (!(ts.sample_rate_hz > 0.0)) throw std::domain_error("sample rate must be positive");
    for (double v : ts.samples)
        if (!std::isfinite(v)) throw std::domain_error("time series contains non-finite samples");
}

/// In-place iterative radix-2 FFT (deterministic; twiddles from std::polar).
inline void fft_radix2(std::vector<std::complex<double>> &data)
{
    const std::size_t n = data.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::domain_error("FFT length must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto w = std::polar(1.0, angle * static_cast<double>(k));
                const auto u = data[i + k];
                const auto v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
            }
        }
    }
}

/// Deterministic standard-normal stream: mt19937_64 mapped to [0,1) via the
/// top 53 bits, then Box-Muller.  Spelled out so every implementation of the
/// scenario format reproduces the same bytes.
class NormalGenerator {
public:
    explicit NormalGenerator(std::uint64_t seed) : engine_(seed) {}

    double next()
    {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Runs fn(i) for i in [0, n) across threads; each index writes its own slot,
/// so results are identical for any worker count.
template <typename Fn>
inline void parallel_for(int n, Fn &&fn)
{
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int workers = static_cast<int>(std::min<unsigned>(hw, 16u));
    if (n < 64 || workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto &t : pool) t.join();
}

} // namespace detail

/// Samples the quad-cell difference signal, then adds disturbance sinusoids
/// and seeded Gaussian noise.  Disturbance and noise amplitudes are relative
/// to the nominal (t = 0) total detector power.
inline TimeSeries simulate_time_series(const InterferometerGraph &graph, const SamplingSpec &sampling,
                                       const DisturbanceSpec &disturbances = {},
                                       const QuadratureSpec &quad = {})
{
    const int n = sampling.sample_count();
    if (!quad.valid()) throw std::domain_error("invalid quadrature spec");

    const auto compiled = detail::compile_paths(graph);

    double max_tone = 0.0;
    for (const auto &node : graph.nodes) {
        if (const auto *m = std::get_if<MirrorSpec>(&node.kind)) {
            if (m->enabled) max_tone = std::max(max_tone, m->frequency_hz);
        }
    }
    for (const auto &line : disturbances.lines) {
        if (line.relative_amplitude < 0.0)
            throw validation_error("disturbance amplitude must be >= 0");
        max_tone = std::max(max_tone, line.frequency_hz);
    }
    if (!(sampling.sample_rate_hz > 2.0 * max_tone))
        throw validation_error("sample rate must exceed twice the highest driven frequency");

    const double w = graph.beam_waist_m;
    auto sample_at = [&](double t) {
        std::vector<PathContribution> contributions;
        contributions.reserve(compiled.detector_paths.size());
        for (const auto &p : compiled.detector_paths)
            contributions.push_back(detail::evaluate_path(p, compiled.deflection_factor, t));
        return qcd_difference_signal(contributions, w, quad);
    };

    TimeSeries ts;
    ts.sample_rate_hz = sampling.sample_rate_hz;
    ts.samples.assign(static_cast<std::size_t>(n), 0.0);
    detail::parallel_for(n, [&](int k) {
        ts.samples[static_cast<std::size_t>(k)] = sample_at(k / sampling.sample_rate_hz).difference;
    });

    if (!disturbances.lines.empty() || disturbances.noise_sigma > 0.0) {
        double scale = sample_at(0.0).total;
        if (scale <= 0.0) scale = w * std::sqrt(std::numbers::pi / 2.0);
        for (const auto &line : disturbances.lines) {
            const double amp = line.relative_amplitude * scale;
            for (int k = 0; k < n; ++k) {
                const double t = k / sampling.sample_rate_hz;
                ts.samples[static_cast<std::size_t>(k)] +=
                    amp * std::sin(2.0 * std::numbers::pi * line.frequency_hz * t + line.phase_rad);
            }
        }
        if (disturbances.noise_sigma > 0.0) {
            detail::NormalGenerator gen(disturbances.seed);
            const double sigma = disturbances.noise_sigma * scale;
            for (auto &v : ts.samples) v += sigma * gen.next();
        }
    }
    return ts;
}

inline TimeSeries apply_window(const TimeSeries &ts, WindowKind window)
{
    detail::check_series(ts);
    if (window == WindowKind::rectangular) return ts;
    TimeSeries out = ts;
    const std::size_t n = out.samples.size();
    if (n == 1) {
        out.samples[0] = 0.0;
        return out;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double factor =
            0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                  static_cast<double>(n - 1)));
        out.samples[k] *= factor;
    }
    return out;
}

/// One-sided periodogram.  Non-power-of-two input is zero padded (flagged).
inline PowerSpectrum power_spectrum(const TimeSeries &ts)
{
    detail::check_series(ts);

    std::size_t n = 1;
    while (n < ts.samples.size()) n <<= 1;

    PowerSpectrum spec;
    spec.zero_padded = n != ts.samples.size();

    std::vector<std::complex<double>> data(n, {0.0, 0.0});
    for (std::size_t k = 0; k < ts.samples.size(); ++k) data[k] = ts.samples[k];
    detail::fft_radix2(data);

    const std::size_t half = n / 2;
    spec.bin_width_hz = ts.sample_rate_hz / static_cast<double>(n);
    spec.powers.resize(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        double p = std::norm(data[k]) / static_cast<double>(n);
        if (k != 0 && k != half) p *= 2.0;
        spec.powers[k] = p;
    }
    return spec;
}

inline PowerSpectrum band_normalize(const PowerSpectrum &spec, const Band &band)
{
    if (!(band.low_hz >= 0.0) || !(band.low_hz < band.high_hz) || band.high_hz > spec.nyquist_hz())
        throw std::domain_error("band must satisfy 0 <= low < high <= Nyquist");
    double integral = 0.0;
    for (int k = 0; k < spec.bins(); ++k) {
        const double f = spec.frequency(k);
        if (f >= band.low_hz && f <= band.high_hz) integral += spec.powers[static_cast<std::size_t>(k)];
    }
    integral *= spec.bin_width_hz;
    if (!(integral > 0.0))
        throw degenerate_normalization_error("band integral is zero; cannot normalize");

    PowerSpectrum out = spec;
    for (auto &p : out.powers) p /= integral;
    out.normalized_band = band;
    return out;
}

/// Maximum power within +-tolerance_bins of each requested frequency.
inline std::map<double, double> peak_heights(const PowerSpectrum &spec,
                                             const std::vector<double> &frequencies_hz,
                                             int tolerance_bins)
{
    if (tolerance_bins < 0) throw std::domain_error("tolerance_bins must be >= 0");
    std::map<double, double> out;
    for (double f : frequencies_hz) {
        if (f >= spec.nyquist_hz())
            throw std::domain_error("requested peak frequency is at or above Nyquist");
        const int centre = static_cast<int>(std::lround(f / spec.bin_width_hz));
        double best = 0.0;
        for (int k = std::max(0, centre - tolerance_bins);
             k <= std::min(spec.bins() - 1, centre + tolerance_bins); ++k)
            best = std::max(best, spec.powers[static_cast<std::size_t>(k)]);
        out[f] = best;
    }
    return out;
}

/// Frequency of the strongest bin inside the band after masking
/// +-exclusion_halfwidth_hz around each excluded line.  Ties go to the
/// lowest frequency.
inline double dominant_peak(const PowerSpectrum &spec, const Band &band,
                            const std::vector<double> &exclude_hz = {},
                            double exclusion_halfwidth_hz = 0.0)
{
    if (!(band.low_hz >= 0.0) || !(band.low_hz < band.high_hz) || band.high_hz > spec.nyquist_hz())
        throw std::domain_error("band must satisfy 0 <= low < high <= Nyquist");

    double best_power = -1.0;
    double best_freq = 0.0;
    for (int k = 0; k < spec.bins(); ++k) {
        const double f = spec.frequency(k);
        if (f < band.low_hz || f > band.high_hz) continue;
        bool masked = false;
        for (double ex : exclude_hz) {
            if (std::abs(f - ex) <= exclusion_halfwidth_hz) {
                masked = true;
                break;
            }
        }
        if (masked) continue;
        if (spec.powers[static_cast<std::size_t>(k)] > best_power) {
            best_power = spec.powers[static_cast<std::size_t>(k)];
            best_freq = f;
        }
    }
    if (best_power < 0.0) throw std::domain_error("exclusions mask the entire band");
    return best_freq;
}

/// Median band power with +-tolerance_bins masked around each listed line;
/// the noise-floor reference for peak detection.
inline double masked_band_median(const PowerSpectrum &spec, const Band &band,
                                 const std::vector<double> &masked_hz, int tolerance_bins)
{
    std::vector<double> kept;
    for (int k = 0; k < spec.bins(); ++k) {
        const double f = spec.frequency(k);
        if (f < band.low_hz || f > band.high_hz) continue;
        bool masked = false;
        for (double m : masked_hz) {
            const int centre = static_cast<int>(std::lround(m / spec.bin_width_hz));
            if (std::abs(k - centre) <= tolerance_bins) {
                masked = true;
                break;
            }
        }
        if (!masked) kept.push_back(spec.powers[static_cast<std::size_t>(k)]);
    }
    if (kept.empty()) throw std::domain_error("mask removes every bin in the band");
    std::sort(kept.begin(), kept.end());
    const std::size_t n = kept.size();
    return n % 2 ? kept[n / 2] : 0.5 * (kept[n / 2 - 1] + kept[n / 2]);
}

} // namespace nmzi

#pragma once

#include "nmzi/beams.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace nmzi {

// ---------------------------------------------------------------------------
// Quad-cell detector model.
//
// Each path contributes a displaced Gaussian a_p * exp(-(y - d_p)^2 / w^2) to
// the field on the split photodiode.  The read-out is
//     difference = int_0^inf |E|^2 dy - int_-inf^0 |E|^2 dy
//     total      = int |E|^2 dy
// integrated by composite Simpson, truncated at +-(half_range*w + max|d_p|).
// For a single unit contribution the closed forms are
//     total      = w * sqrt(pi/2)
//     difference = w * sqrt(pi/2) * erf(sqrt(2) d / w)
// which serve as the independent oracle for the quadrature.  erf comes from
// the standard library (correctly rounded to well below 1e-12).
// ---------------------------------------------------------------------------

struct QuadratureSpec {
    double half_range_w = 8.0; ///< truncation in units of the beam waist
    int point_count = 2048;    ///< Simpson intervals per half-axis, even

    bool valid() const { return half_range_w >= 4.0 && point_count >= 64 && point_count % 2 == 0; }
};

struct DetectorSample {
    double difference = 0.0;
    double total = 0.0;
};

struct FieldOptions {
    /// When nonzero, each contribution carries exp(i * k * tilt * y).
    /// Off by default: displacement is the leading quad-cell effect.
    double tilt_phase_wavenumber = 0.0;
};

inline std::complex<double> field_at_detector(const std::vector<PathContribution> &contributions,
                                              double y_m, double beam_waist_m,
                                              const FieldOptions &options = {})
{
    if (!(beam_waist_m > 0.0)) throw std::domain_error("beam waist must be positive");
    std::complex<double> field{0.0, 0.0};
    for (const auto &c : contributions) {
        const double u = (y_m - c.displacement_m) / beam_waist_m;
        std::complex<double> term = c.amplitude * std::exp(-u * u);
        if (options.tilt_phase_wavenumber != 0.0) {
            term *= std::polar(1.0, options.tilt_phase_wavenumber * c.residual_tilt_rad * y_m);
        }
        field += term;
    }
    return field;
}

namespace detail {

/// Simpson over [0, reach] of |E(sign * y)|^2.  Both half-axis integrals run
/// over the identical grid, so mirroring the field mirrors the two sums
/// bit-exactly.
inline double simpson_half_axis(const std::vector<PathContribution> &contributions,
                                double beam_waist_m, const FieldOptions &options, double sign,
                                double reach, int intervals)
{
    const double h = reach / intervals;
    auto f = [&](double y) {
        const auto e = field_at_detector(contributions, sign * y, beam_waist_m, options);
        return std::norm(e);
    };
    double sum = f(0.0) + f(reach);
    for (int k = 1; k < intervals; ++k) sum += f(h * k) * (k % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

} // namespace detail

inline DetectorSample qcd_difference_signal(const std::vector<PathContribution> &contributions,
                                            double beam_waist_m, const QuadratureSpec &quad = {},
                                            const FieldOptions &options = {})
{
    if (!quad.valid()) throw std::domain_error("invalid quadrature spec");
    if (!(beam_waist_m > 0.0)) throw std::domain_error("beam waist must be positive");

    double max_offset = 0.0;
    for (const auto &c : contributions) max_offset = std::max(max_offset, std::abs(c.displacement_m));
    const double reach = quad.half_range_w * beam_waist_m + max_offset;

    const double upper = detail::simpson_half_axis(contributions, beam_waist_m, options, 1.0,
                                                   reach, quad.point_count);
    const double lower = detail::simpson_half_axis(contributions, beam_waist_m, options, -1.0,
                                                   reach, quad.point_count);

    return DetectorSample{upper - lower, upper + lower};
}

/// Analytic oracle for a single unit-amplitude contribution.
inline DetectorSample closed_form_single_gaussian(double displacement_m, double beam_waist_m)
{
    if (!(beam_waist_m > 0.0)) throw std::domain_error("beam waist must be positive");
    const double total = beam_waist_m * std::sqrt(std::numbers::pi / 2.0);
    const double difference = total * std::erf(std::numbers::sqrt2 * displacement_m / beam_waist_m);
    return DetectorSample{difference, total};
}

namespace detail {

/// Golden-section search for the maximum of f over [a, b].
inline double golden_max(const std::function<double(double)> &f, double a, double b, double tol)
{
    constexpr double inv_phi = 0.6180339887498949;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return f(0.5 * (a + b));
}

/// The phase-scan knob: the segment leaving mirror C, i.e. the lower arm of
/// the outer loop.  This is also the default calibration arm.
inline int designated_outer_arm(const InterferometerGraph &g)
{
    const int c = g.mirror_node(MirrorLabel::C);
    if (c < 0) throw validation_error("graph has no mirror C to designate an outer arm");
    const auto out = g.outgoing(c);
    if (out.empty()) throw validation_error("designated outer arm has no segment");
    return out.front();
}

inline double scan_power(const InterferometerGraph &g, int segment, double phase_rad)
{
    InterferometerGraph copy = g;
    copy.segments[static_cast<std::size_t>(segment)].phase_offset_rad += phase_rad;
    const auto contributions = trace_paths(copy, 0.0);
    return qcd_difference_signal(contributions, copy.beam_waist_m).total;
}

} // namespace detail

/// Fringe contrast (Imax - Imin) / (Imax + Imin) under a phase scan of one
/// outer arm, evaluated at t = 0.  Coarse scan plus golden-section refinement.
inline double visibility(const InterferometerGraph &g, int scan_points = 256, int scan_segment = -1)
{
    if (scan_points < 16) throw std::domain_error("visibility needs at least 16 scan points");
    require_valid(g);
    const int segment = scan_segment >= 0 ? scan_segment : detail::designated_outer_arm(g);

    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> power(static_cast<std::size_t>(scan_points));
    int imax = 0, imin = 0;
    for (int i = 0; i < scan_points; ++i) {
        power[static_cast<std::size_t>(i)] = detail::scan_power(g, segment, two_pi * i / scan_points);
        if (power[static_cast<std::size_t>(i)] > power[static_cast<std::size_t>(imax)]) imax = i;
        if (power[static_cast<std::size_t>(i)] < power[static_cast<std::size_t>(imin)]) imin = i;
    }

    auto refine = [&](int centre, bool maximize) {
        const double lo = two_pi * (centre - 1) / scan_points;
        const double hi = two_pi * (centre + 1) / scan_points;
        auto f = [&](double phi) {
            const double p = detail::scan_power(g, segment, phi);
            return maximize ? p : -p;
        };
        const double v = detail::golden_max(f, lo, hi, 1e-10);
        return maximize ? v : -v;
    };

    const double i_max = refine(imax, true);
    const double i_min = refine(imin, false);

    const double scale = g.beam_waist_m * std::sqrt(std::numbers::pi / 2.0);
    if (i_max <= 1e-13 * scale)
        throw degenerate_visibility_error("no detector power at any scan phase");
    return (i_max - i_min) / (i_max + i_min);
}

/// Finds the static transverse offset on the designated leak arm that brings
/// the visibility to `target_visibility`, by bisection on d in [0, 6w].
inline double calibrate_misalignment(const InterferometerGraph &g, double target_visibility,
                                     int scan_points = 256, int leak_segment = -1)
{
    require_valid(g);
    if (!(target_visibility > 0.0) || target_visibility > 1.0)
        throw unreachable_target_error("target visibility must lie in (0, 1]");
    const int segment = leak_segment >= 0 ? leak_segment : detail::designated_outer_arm(g);

    auto vis_at = [&](double d) {
        InterferometerGraph copy = g;
        copy.segments[static_cast<std::size_t>(segment)].transverse_offset_m = d;
        return visibility(copy, scan_points);
    };

    constexpr double kTolerance = 1e-6;
    const double d_hi = 6.0 * g.beam_waist_m;
    const double v0 = vis_at(0.0);
    if (std::abs(v0 - target_visibility) <= kTolerance) return 0.0;
    if (target_visibility > v0)
        throw unreachable_target_error("target visibility exceeds the achievable maximum");
    const double v_hi = vis_at(d_hi);
    if (target_visibility < v_hi)
        throw unreachable_target_error("target visibility below the reachable range");

    double lo = 0.0, hi = d_hi; // V(lo) >= target >= V(hi)
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double v = vis_at(mid);
        if (std::abs(v - target_visibility) <= kTolerance) return mid;
        if (v > target_visibility)
            lo = mid;
        else
            hi = mid;
    }
    throw unreachable_target_error("visibility bisection did not converge to the target");
}

} // namespace nmzi

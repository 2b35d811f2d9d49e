#pragma once

#include "nmzi/spectrum.hpp"

#include <complex>
#include <map>
#include <vector>

namespace nmzi {

// ---------------------------------------------------------------------------
// Two-state-vector analysis.
//
// The forward state propagates unit amplitude from the source through the
// graph; the backward state propagates unit amplitude from the detector along
// reversed edges with conjugated element transforms.  A mirror belongs to the
// overlap set when |forward| * |backward| there exceeds a small threshold,
// the criterion that reads "the photon has been where both states live".
// Weak values of the path projectors are reported alongside but do not feed
// the overlap criterion.
// ---------------------------------------------------------------------------

/// Node-indexed amplitude maps.  For splitters the entry is the coherent sum
/// of the amplitudes arriving at the element.
struct TSVFStates {
    std::vector<std::complex<double>> forward;
    std::vector<std::complex<double>> backward;
};

struct OverlapReport {
    struct MirrorOverlap {
        MirrorLabel mirror;
        double forward_magnitude = 0.0;
        double backward_magnitude = 0.0;
    };

    std::vector<MirrorLabel> overlap_set; ///< sorted by label
    std::vector<MirrorOverlap> mirrors;   ///< every mirror in the graph
    std::complex<double> detector_amplitude;
    double threshold = 1e-9;

    bool contains(MirrorLabel m) const
    {
        return std::find(overlap_set.begin(), overlap_set.end(), m) != overlap_set.end();
    }
};

namespace detail {

/// Per-segment forward amplitudes; node amplitudes are per-segment sums.
struct ForwardPass {
    std::vector<std::complex<double>> segment; // amplitude on each segment
    std::vector<std::complex<double>> node;    // amplitude arriving at each node
};

inline ForwardPass forward_pass(const InterferometerGraph &g)
{
    require_valid(g);
    const auto ports = resolve_ports(g);
    const auto order = topological_order(g);
    const std::complex<double> i_unit{0.0, 1.0};

    ForwardPass out;
    out.segment.assign(g.segments.size(), {0.0, 0.0});
    out.node.assign(g.nodes.size(), {0.0, 0.0});

    const int src = g.source_node();
    out.node[static_cast<std::size_t>(src)] = {1.0, 0.0};

    for (int n : order) {
        const auto &el = g.nodes[static_cast<std::size_t>(n)];
        const auto in = g.incoming(n);
        const auto outgoing = g.outgoing(n);

        if (n != src) {
            std::complex<double> sum{0.0, 0.0};
            for (int s : in) sum += out.segment[static_cast<std::size_t>(s)];
            out.node[static_cast<std::size_t>(n)] = sum;
        }

        if (std::holds_alternative<BlockSpec>(el.kind)) continue; // absorbed
        if (std::holds_alternative<DetectorSpec>(el.kind)) continue;

        for (int s : outgoing) {
            const auto &seg = g.segments[static_cast<std::size_t>(s)];
            const auto phase = std::polar(1.0, seg.phase_offset_rad);
            if (const auto *bs = std::get_if<BeamSplitterSpec>(&el.kind)) {
                const int q = ports.out_port[static_cast<std::size_t>(s)];
                std::complex<double> fed{0.0, 0.0};
                for (int s_in : in) {
                    const int p = ports.in_port[static_cast<std::size_t>(s_in)];
                    const auto coupling = p == q
                                              ? std::complex<double>{bs->transmittance_amplitude, 0.0}
                                              : i_unit * bs->reflectance_amplitude;
                    fed += out.segment[static_cast<std::size_t>(s_in)] * coupling;
                }
                out.segment[static_cast<std::size_t>(s)] = fed * phase;
            } else {
                // source or mirror: pass through
                out.segment[static_cast<std::size_t>(s)] =
                    out.node[static_cast<std::size_t>(n)] * phase;
            }
        }
    }
    return out;
}

struct BackwardPass {
    std::vector<std::complex<double>> segment; // backward amplitude on each segment
    std::vector<std::complex<double>> node;    // backward amplitude arriving at each node
};

inline BackwardPass backward_pass(const InterferometerGraph &g)
{
    require_valid(g);
    const auto ports = resolve_ports(g);
    auto order = topological_order(g);
    std::reverse(order.begin(), order.end());
    const std::complex<double> i_unit{0.0, 1.0};

    BackwardPass out;
    out.segment.assign(g.segments.size(), {0.0, 0.0});
    out.node.assign(g.nodes.size(), {0.0, 0.0});

    const int det = g.detector_node();
    out.node[static_cast<std::size_t>(det)] = {1.0, 0.0};

    for (int n : order) {
        const auto &el = g.nodes[static_cast<std::size_t>(n)];
        const auto in = g.incoming(n);
        const auto outgoing = g.outgoing(n);

        if (n != det) {
            std::complex<double> sum{0.0, 0.0};
            for (int s : outgoing) sum += out.segment[static_cast<std::size_t>(s)];
            out.node[static_cast<std::size_t>(n)] = sum;
        }

        if (std::holds_alternative<BlockSpec>(el.kind)) continue; // nothing passes upstream
        if (std::holds_alternative<SourceSpec>(el.kind)) continue;

        for (int s : in) {
            const auto &seg = g.segments[static_cast<std::size_t>(s)];
            const auto phase = std::polar(1.0, -seg.phase_offset_rad); // conjugated
            if (const auto *bs = std::get_if<BeamSplitterSpec>(&el.kind)) {
                const int p = ports.in_port[static_cast<std::size_t>(s)];
                std::complex<double> fed{0.0, 0.0};
                for (int s_out : outgoing) {
                    const int q = ports.out_port[static_cast<std::size_t>(s_out)];
                    const auto coupling = p == q
                                              ? std::complex<double>{bs->transmittance_amplitude, 0.0}
                                              : -i_unit * bs->reflectance_amplitude; // conj(i r)
                    fed += out.segment[static_cast<std::size_t>(s_out)] * coupling;
                }
                out.segment[static_cast<std::size_t>(s)] = fed * phase;
            } else if (std::holds_alternative<DetectorSpec>(el.kind)) {
                out.segment[static_cast<std::size_t>(s)] =
                    out.node[static_cast<std::size_t>(n)] * phase;
            } else {
                // mirror (conjugate of unit reflection is unit)
                out.segment[static_cast<std::size_t>(s)] =
                    out.node[static_cast<std::size_t>(n)] * phase;
            }
        }
    }
    return out;
}

} // namespace detail

inline std::vector<std::complex<double>> forward_state(const InterferometerGraph &g)
{
    return detail::forward_pass(g).node;
}

inline std::vector<std::complex<double>> backward_state(const InterferometerGraph &g)
{
    return detail::backward_pass(g).node;
}

inline TSVFStates tsvf_states(const InterferometerGraph &g)
{
    return TSVFStates{forward_state(g), backward_state(g)};
}

/// Amplitude of the forward state at the detector, <phi|psi>.
inline std::complex<double> detector_amplitude(const InterferometerGraph &g)
{
    return detail::forward_pass(g).node[static_cast<std::size_t>(g.detector_node())];
}

inline OverlapReport overlap_set(const InterferometerGraph &g, double threshold = 1e-9)
{
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw std::domain_error("overlap threshold must lie in (0, 1)");

    const auto fw = forward_state(g);
    const auto bw = backward_state(g);

    OverlapReport report;
    report.threshold = threshold;
    report.detector_amplitude = fw[static_cast<std::size_t>(g.detector_node())];
    for (MirrorLabel label : g.mirror_labels()) {
        const int node = g.mirror_node(label);
        const double fmag = std::abs(fw[static_cast<std::size_t>(node)]);
        const double bmag = std::abs(bw[static_cast<std::size_t>(node)]);
        report.mirrors.push_back(OverlapReport::MirrorOverlap{label, fmag, bmag});
        if (fmag * bmag > threshold) report.overlap_set.push_back(label);
    }
    return report;
}

/// Weak value of the path projector at a mirror:
/// forward(m) * conj(backward(m)) / <phi|psi>.
inline std::complex<double> weak_value(const InterferometerGraph &g, MirrorLabel mirror)
{
    const int node = g.mirror_node(mirror);
    if (node < 0) throw validation_error(std::string("graph has no mirror ") + to_char(mirror));

    const auto fw = forward_state(g);
    const auto bw = backward_state(g);
    const auto amp = fw[static_cast<std::size_t>(g.detector_node())];
    if (std::abs(amp) < 1e-12)
        throw ill_conditioned_weak_value_error(
            "detector amplitude vanishes; weak values are undefined");
    return fw[static_cast<std::size_t>(node)] * std::conj(bw[static_cast<std::size_t>(node)]) / amp;
}

// ---------------------------------------------------------------------------
// Prediction vs simulation
// ---------------------------------------------------------------------------

struct AgreementEntry {
    MirrorLabel mirror;
    bool predicted = false; ///< in the TSVF overlap set
    bool detected = false;  ///< spectral peak above threshold
    double peak_power = 0.0;
};

struct AgreementReport {
    std::vector<AgreementEntry> entries;
    std::vector<MirrorLabel> disagreements;
    double masked_median_power = 0.0;
    double detection_threshold_db = 0.0;

    bool full_agreement() const { return disagreements.empty(); }
    bool disagrees_on(MirrorLabel m) const
    {
        return std::find(disagreements.begin(), disagreements.end(), m) != disagreements.end();
    }
};

/// Per-mirror verdict: TSVF-predicted (overlap) vs simulated-detected (peak at
/// the mirror's frequency at least `detection_threshold_db` above the median
/// of the band with all listed lines masked).
inline AgreementReport compare_predictions(const OverlapReport &overlap, const PowerSpectrum &spec,
                                           const std::map<MirrorLabel, double> &mirror_frequencies,
                                           const Band &band, double detection_threshold_db = 20.0,
                                           const std::vector<double> &extra_masked_hz = {},
                                           int tolerance_bins = 2)
{
    AgreementReport report;
    report.detection_threshold_db = detection_threshold_db;

    std::vector<double> masked = extra_masked_hz;
    std::vector<double> freqs;
    for (const auto &[mirror, f] : mirror_frequencies) {
        masked.push_back(f);
        freqs.push_back(f);
    }
    report.masked_median_power = masked_band_median(spec, band, masked, tolerance_bins);
    const auto peaks = peak_heights(spec, freqs, tolerance_bins);
    const double gain = std::pow(10.0, detection_threshold_db / 10.0);

    for (const auto &[mirror, f] : mirror_frequencies) {
        AgreementEntry entry;
        entry.mirror = mirror;
        entry.predicted = overlap.contains(mirror);
        entry.peak_power = peaks.at(f);
        entry.detected = report.masked_median_power > 0.0
                             ? entry.peak_power >= gain * report.masked_median_power
                             : entry.peak_power > 0.0;
        if (entry.predicted != entry.detected) report.disagreements.push_back(mirror);
        report.entries.push_back(entry);
    }
    return report;
}

} // namespace nmzi

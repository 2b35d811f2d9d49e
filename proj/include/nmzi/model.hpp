#pragma once

#include "nmzi/errors.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace nmzi {

// ---------------------------------------------------------------------------
// Optical element model.
//
// An interferometer is a DAG of elements (source, beam splitters, mirrors,
// blocks, detector) connected by segments.  Segments carry geometric length,
// an explicit phase offset (which stands in for wavelength-scale length
// differences) and a static transverse misalignment.
// ---------------------------------------------------------------------------

enum class MirrorLabel : std::uint8_t { A, B, C, E, F };

inline constexpr std::array<MirrorLabel, 5> kMirrorLabels = {
    MirrorLabel::A, MirrorLabel::B, MirrorLabel::C, MirrorLabel::E, MirrorLabel::F};

inline char to_char(MirrorLabel m)
{
    switch (m) {
    case MirrorLabel::A: return 'A';
    case MirrorLabel::B: return 'B';
    case MirrorLabel::C: return 'C';
    case MirrorLabel::E: return 'E';
    case MirrorLabel::F: return 'F';
    }
    return '?';
}

inline std::optional<MirrorLabel> mirror_label_from_char(char c)
{
    switch (c) {
    case 'A': case 'a': return MirrorLabel::A;
    case 'B': case 'b': return MirrorLabel::B;
    case 'C': case 'c': return MirrorLabel::C;
    case 'E': case 'e': return MirrorLabel::E;
    case 'F': case 'f': return MirrorLabel::F;
    default: return std::nullopt;
    }
}

/// Oscillating mirror driven by a piezo at `pivot_offset_m` from its tilt axis.
struct MirrorSpec {
    MirrorLabel id = MirrorLabel::A;
    double frequency_hz = 0.0;
    double piezo_amplitude_m = 10e-9;
    double pivot_offset_m = 1e-2;
    double static_tilt_rad = 0.0;
    double oscillation_phase_rad = 0.0;
    bool enabled = true;
};

struct SourceSpec {};
struct DetectorSpec {};
struct BlockSpec {};

/// Lossless splitter; the reflected amplitude carries a +90 degree phase,
/// i.e. the coupling is `t` straight through and `i*r` on the crossed pair.
struct BeamSplitterSpec {
    double reflectance_amplitude = std::numbers::sqrt2 / 2.0;
    double transmittance_amplitude = std::numbers::sqrt2 / 2.0;
};

using ElementKind = std::variant<SourceSpec, BeamSplitterSpec, MirrorSpec, BlockSpec, DetectorSpec>;

struct Element {
    ElementKind kind;
    std::string name; // diagnostics only
};

/// Directed connection between two elements.
///
/// `from_port` / `to_port` select which splitter port the segment occupies
/// (0 or 1).  Left at -1 they are assigned by attachment order; an explicit
/// value is needed when a lone segment must sit on the crossed port.
struct SegmentSpec {
    int from_node = -1;
    int to_node = -1;
    double length_m = 0.0;
    double phase_offset_rad = 0.0;
    double transverse_offset_m = 0.0;
    int from_port = -1;
    int to_port = -1;
};

struct InterferometerGraph {
    std::vector<Element> nodes;
    std::vector<SegmentSpec> segments;
    double beam_waist_m = 1e-3;
    double deflection_factor = 1.0;

    int add_node(ElementKind kind, std::string name)
    {
        nodes.push_back(Element{std::move(kind), std::move(name)});
        return static_cast<int>(nodes.size()) - 1;
    }

    int add_segment(SegmentSpec seg)
    {
        segments.push_back(seg);
        return static_cast<int>(segments.size()) - 1;
    }

    bool is_kind(int node, auto tag) const
    {
        using T = decltype(tag);
        return node >= 0 && node < static_cast<int>(nodes.size()) &&
               std::holds_alternative<T>(nodes[static_cast<std::size_t>(node)].kind);
    }

    int find_unique(auto tag) const
    {
        using T = decltype(tag);
        int found = -1;
        for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
            if (std::holds_alternative<T>(nodes[static_cast<std::size_t>(i)].kind)) {
                if (found >= 0) return -1;
                found = i;
            }
        }
        return found;
    }

    int source_node() const { return find_unique(SourceSpec{}); }
    int detector_node() const { return find_unique(DetectorSpec{}); }

    int mirror_node(MirrorLabel label) const
    {
        for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
            if (const auto *m = std::get_if<MirrorSpec>(&nodes[static_cast<std::size_t>(i)].kind)) {
                if (m->id == label) return i;
            }
        }
        return -1;
    }

    std::vector<MirrorLabel> mirror_labels() const
    {
        std::vector<MirrorLabel> out;
        for (const auto &n : nodes) {
            if (const auto *m = std::get_if<MirrorSpec>(&n.kind)) out.push_back(m->id);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    std::vector<int> outgoing(int node) const
    {
        std::vector<int> out;
        for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
            if (segments[static_cast<std::size_t>(s)].from_node == node) out.push_back(s);
        }
        return out;
    }

    std::vector<int> incoming(int node) const
    {
        std::vector<int> out;
        for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
            if (segments[static_cast<std::size_t>(s)].to_node == node) out.push_back(s);
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    enum class Code {
        BadSegmentEndpoint,
        NegativeLength,
        Cycle,
        MissingSource,
        MissingDetector,
        NonUnitarySplitter,
        DuplicateMirrorLabel,
        DuplicateMirrorFrequency,
        NonPositiveFrequency,
        NonPositivePivot,
        NegativePiezoAmplitude,
        PortConflict,
        DegreeViolation,
        UnreachableDetector,
        BadBeamWaist,
        BadDeflectionFactor,
    };

    Code code;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool valid() const { return violations.empty(); }

    bool has(Violation::Code code) const
    {
        return std::any_of(violations.begin(), violations.end(),
                           [code](const Violation &v) { return v.code == code; });
    }

    std::string to_string() const
    {
        std::ostringstream os;
        for (const auto &v : violations) os << v.message << '\n';
        return os.str();
    }
};

namespace detail {

/// Resolved per-segment splitter ports.  out_port[s] is the port the segment
/// occupies at its from-node, in_port[s] the port at its to-node.  Only
/// meaningful where the adjacent node is a beam splitter (0 otherwise).
struct ResolvedPorts {
    std::vector<int> out_port;
    std::vector<int> in_port;
    bool ok = true;
    std::string error;
};

inline ResolvedPorts resolve_ports(const InterferometerGraph &g)
{
    ResolvedPorts r;
    r.out_port.assign(g.segments.size(), 0);
    r.in_port.assign(g.segments.size(), 0);

    auto assign_side = [&](int node, bool outgoing_side) {
        std::vector<int> segs;
        for (int s = 0; s < static_cast<int>(g.segments.size()); ++s) {
            const auto &seg = g.segments[static_cast<std::size_t>(s)];
            if ((outgoing_side ? seg.from_node : seg.to_node) == node) segs.push_back(s);
        }
        if (segs.size() > 2) {
            r.ok = false;
            r.error = "splitter node " + std::to_string(node) + " has more than two " +
                      (outgoing_side ? "outgoing" : "incoming") + " segments";
            return;
        }
        std::array<bool, 2> used = {false, false};
        // explicit ports claim first
        for (int s : segs) {
            const auto &seg = g.segments[static_cast<std::size_t>(s)];
            int p = outgoing_side ? seg.from_port : seg.to_port;
            if (p < -1 || p > 1) {
                r.ok = false;
                r.error = "segment " + std::to_string(s) + " has port index out of range";
                return;
            }
            if (p >= 0) {
                if (used[static_cast<std::size_t>(p)]) {
                    r.ok = false;
                    r.error = "port collision at node " + std::to_string(node);
                    return;
                }
                used[static_cast<std::size_t>(p)] = true;
                (outgoing_side ? r.out_port : r.in_port)[static_cast<std::size_t>(s)] = p;
            }
        }
        // remaining segments fill the free ports in attachment order
        for (int s : segs) {
            const auto &seg = g.segments[static_cast<std::size_t>(s)];
            int p = outgoing_side ? seg.from_port : seg.to_port;
            if (p >= 0) continue;
            int free = used[0] ? (used[1] ? -1 : 1) : 0;
            if (free < 0) {
                r.ok = false;
                r.error = "port collision at node " + std::to_string(node);
                return;
            }
            used[static_cast<std::size_t>(free)] = true;
            (outgoing_side ? r.out_port : r.in_port)[static_cast<std::size_t>(s)] = free;
        }
    };

    for (int n = 0; n < static_cast<int>(g.nodes.size()) && r.ok; ++n) {
        if (!std::holds_alternative<BeamSplitterSpec>(g.nodes[static_cast<std::size_t>(n)].kind))
            continue;
        assign_side(n, true);
        if (r.ok) assign_side(n, false);
    }
    return r;
}

/// Kahn topological order; empty result signals a cycle.
inline std::vector<int> topological_order(const InterferometerGraph &g)
{
    const int n = static_cast<int>(g.nodes.size());
    std::vector<int> indeg(static_cast<std::size_t>(n), 0);
    for (const auto &s : g.segments) {
        if (s.to_node >= 0 && s.to_node < n) ++indeg[static_cast<std::size_t>(s.to_node)];
    }
    std::vector<int> queue, order;
    for (int i = 0; i < n; ++i)
        if (indeg[static_cast<std::size_t>(i)] == 0) queue.push_back(i);
    while (!queue.empty()) {
        // smallest id first keeps the order deterministic
        auto it = std::min_element(queue.begin(), queue.end());
        int u = *it;
        queue.erase(it);
        order.push_back(u);
        for (int s = 0; s < static_cast<int>(g.segments.size()); ++s) {
            const auto &seg = g.segments[static_cast<std::size_t>(s)];
            if (seg.from_node != u) continue;
            if (--indeg[static_cast<std::size_t>(seg.to_node)] == 0) queue.push_back(seg.to_node);
        }
    }
    if (static_cast<int>(order.size()) != n) order.clear();
    return order;
}

} // namespace detail

inline ValidationReport validate_graph(const InterferometerGraph &g)
{
    ValidationReport report;
    auto add = [&](Violation::Code c, std::string msg) {
        report.violations.push_back(Violation{c, std::move(msg)});
    };

    const int n = static_cast<int>(g.nodes.size());

    if (!(g.beam_waist_m > 0.0) || !std::isfinite(g.beam_waist_m))
        add(Violation::Code::BadBeamWaist, "beam waist must be positive and finite");
    if (g.deflection_factor != 1.0 && g.deflection_factor != 2.0)
        add(Violation::Code::BadDeflectionFactor, "deflection factor must be 1 or 2");

    for (int s = 0; s < static_cast<int>(g.segments.size()); ++s) {
        const auto &seg = g.segments[static_cast<std::size_t>(s)];
        if (seg.from_node < 0 || seg.from_node >= n || seg.to_node < 0 || seg.to_node >= n ||
            seg.from_node == seg.to_node) {
            add(Violation::Code::BadSegmentEndpoint,
                "segment " + std::to_string(s) + " has invalid endpoints");
        }
        if (seg.length_m < 0.0 || !std::isfinite(seg.length_m))
            add(Violation::Code::NegativeLength,
                "segment " + std::to_string(s) + " has negative length");
    }
    if (!report.valid()) return report; // endpoint errors poison the rest

    // element bookkeeping
    int sources = 0, detectors = 0;
    bool has_block = false;
    std::vector<MirrorLabel> labels;
    std::vector<double> freqs;
    for (int i = 0; i < n; ++i) {
        const auto &el = g.nodes[static_cast<std::size_t>(i)];
        if (std::holds_alternative<SourceSpec>(el.kind)) ++sources;
        if (std::holds_alternative<DetectorSpec>(el.kind)) ++detectors;
        if (std::holds_alternative<BlockSpec>(el.kind)) has_block = true;
        if (const auto *bs = std::get_if<BeamSplitterSpec>(&el.kind)) {
            const double r2t2 = bs->reflectance_amplitude * bs->reflectance_amplitude +
                                bs->transmittance_amplitude * bs->transmittance_amplitude;
            if (std::abs(r2t2 - 1.0) > 1e-9)
                add(Violation::Code::NonUnitarySplitter,
                    "splitter node " + std::to_string(i) + ": |r|^2 + |t|^2 = " + std::to_string(r2t2));
        }
        if (const auto *m = std::get_if<MirrorSpec>(&el.kind)) {
            if (std::find(labels.begin(), labels.end(), m->id) != labels.end())
                add(Violation::Code::DuplicateMirrorLabel,
                    std::string("duplicate mirror label ") + to_char(m->id));
            labels.push_back(m->id);
            for (double f : freqs) {
                if (f == m->frequency_hz)
                    add(Violation::Code::DuplicateMirrorFrequency,
                        "mirror frequencies must be pairwise distinct (" +
                            std::to_string(m->frequency_hz) + " Hz repeated)");
            }
            freqs.push_back(m->frequency_hz);
            if (!(m->frequency_hz > 0.0))
                add(Violation::Code::NonPositiveFrequency,
                    std::string("mirror ") + to_char(m->id) + " frequency must be positive");
            if (!(m->pivot_offset_m > 0.0))
                add(Violation::Code::NonPositivePivot,
                    std::string("mirror ") + to_char(m->id) + " pivot offset must be positive");
            if (m->piezo_amplitude_m < 0.0)
                add(Violation::Code::NegativePiezoAmplitude,
                    std::string("mirror ") + to_char(m->id) + " piezo amplitude must be >= 0");
        }
    }
    if (sources != 1) add(Violation::Code::MissingSource, "graph needs exactly one source");
    if (detectors != 1) add(Violation::Code::MissingDetector, "graph needs exactly one detector");

    // per-kind degree constraints
    for (int i = 0; i < n; ++i) {
        const auto &el = g.nodes[static_cast<std::size_t>(i)];
        const auto in = g.incoming(i).size();
        const auto out = g.outgoing(i).size();
        auto degree_error = [&](const char *what) {
            add(Violation::Code::DegreeViolation,
                "node " + std::to_string(i) + " (" + el.name + "): " + what);
        };
        if (std::holds_alternative<SourceSpec>(el.kind)) {
            if (in != 0 || out != 1) degree_error("source must have no inputs and one output");
        } else if (std::holds_alternative<DetectorSpec>(el.kind)) {
            if (out != 0 || in < 1) degree_error("detector must have at least one input and no outputs");
        } else if (std::holds_alternative<MirrorSpec>(el.kind)) {
            if (in != 1 || out > 1) degree_error("mirror must have one input and at most one output");
        } else if (std::holds_alternative<BlockSpec>(el.kind)) {
            if (in != 1 || out > 1) degree_error("block must have one input and at most one output");
        } else if (std::holds_alternative<BeamSplitterSpec>(el.kind)) {
            if (in < 1 || in > 2 || out < 1 || out > 2)
                degree_error("splitter must have 1..2 inputs and 1..2 outputs");
        }
    }

    auto ports = detail::resolve_ports(g);
    if (!ports.ok) add(Violation::Code::PortConflict, ports.error);

    if (detail::topological_order(g).empty() && n > 0)
        add(Violation::Code::Cycle, "segment graph contains a cycle");

    // detector reachability, ignoring block absorption only when a block exists
    if (sources == 1 && detectors == 1 && !report.has(Violation::Code::Cycle)) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<int> stack = {g.source_node()};
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            if (u < 0 || seen[static_cast<std::size_t>(u)]) continue;
            seen[static_cast<std::size_t>(u)] = 1;
            if (std::holds_alternative<BlockSpec>(g.nodes[static_cast<std::size_t>(u)].kind)) continue;
            for (int s : g.outgoing(u)) stack.push_back(g.segments[static_cast<std::size_t>(s)].to_node);
        }
        if (!seen[static_cast<std::size_t>(g.detector_node())] && !has_block)
            add(Violation::Code::UnreachableDetector,
                "detector is unreachable from the source and no block explains it");
    }

    return report;
}

inline void require_valid(const InterferometerGraph &g)
{
    const auto report = validate_graph(g);
    if (!report.valid()) throw validation_error("invalid interferometer graph:\n" + report.to_string());
}

// ---------------------------------------------------------------------------
// Canonical scenarios
// ---------------------------------------------------------------------------

enum class ScenarioVariant {
    TwoPathAligned, ///< plain two-arm interferometer (sanity/calibration reference)
    NestedTuned,    ///< small loop dark toward the output, big loop constructive
    LowerBlocked,   ///< NestedTuned with the lower arm blocked after mirror C
};

/// Everything the builders accept.  Distances are measured along the beam
/// from each mirror to the detector; segment lengths are derived from them.
struct ScenarioParams {
    std::array<MirrorSpec, 5> mirrors = {
        MirrorSpec{MirrorLabel::A, 288.0},
        MirrorSpec{MirrorLabel::B, 298.0},
        MirrorSpec{MirrorLabel::C, 318.0},
        MirrorSpec{MirrorLabel::E, 275.0},
        MirrorSpec{MirrorLabel::F, 332.0},
    };

    double source_to_first_splitter_m = 0.05;
    double first_splitter_to_e_m = 0.05;
    double first_splitter_to_c_m = 0.05;
    double e_to_detector_m = 0.40;
    double inner_to_detector_m = 0.25; // mirrors A and B
    double c_to_detector_m = 0.20;
    double f_to_detector_m = 0.10;
    double last_splitter_to_detector_m = 0.05;
    double inner_splitter_to_mirror_m = 0.05; // both inner arms
    double recombiner_to_f_m = 0.05;

    double beam_waist_m = 1e-3;
    double deflection_factor = 1.0;

    // static transverse misalignments, one knob per arm
    double offset_inner_a_m = 0.0;
    double offset_inner_b_m = 0.0;
    double offset_outer_upper_m = 0.0;
    double offset_outer_lower_m = 0.0;

    // interference tuning; see build_scenario
    double inner_phase_rad = std::numbers::pi;
    double outer_phase_rad = -std::numbers::pi / 2.0;

    double splitter_reflectance = std::numbers::sqrt2 / 2.0;
    double splitter_transmittance = std::numbers::sqrt2 / 2.0;

    /// Where the block sits along the C -> final-splitter leg (LowerBlocked).
    double block_fraction = 0.5;

    MirrorSpec &mirror(MirrorLabel label)
    {
        for (auto &m : mirrors)
            if (m.id == label) return m;
        return mirrors[0];
    }

    const MirrorSpec &mirror(MirrorLabel label) const
    {
        for (const auto &m : mirrors)
            if (m.id == label) return m;
        return mirrors[0];
    }
};

/// Builds one of the canonical setups.
///
/// NestedTuned port layout (splitter couplings: straight = t, crossed = i*r):
///   source -> BS1 -> { E -> BS2 -> {A, B} -> BS3 -> F -> BS4, C -> BS4 } -> detector
/// The small loop carries a relative phase pi between its arms, which makes
/// its output toward F dark.  The big loop carries -pi/2 on the upper return
/// leg: with the small loop re-tuned bright this sends the full input power
/// to the detector, which is the constructive working point of the big loop.
inline InterferometerGraph build_scenario(ScenarioVariant variant, const ScenarioParams &params = {})
{
    InterferometerGraph g;
    g.beam_waist_m = params.beam_waist_m;
    g.deflection_factor = params.deflection_factor;

    const BeamSplitterSpec bs{params.splitter_reflectance, params.splitter_transmittance};

    auto check_positive = [](double v, const char *what) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw validation_error(std::string("derived segment length not positive: ") + what);
    };

    if (variant == ScenarioVariant::TwoPathAligned) {
        const int src = g.add_node(SourceSpec{}, "source");
        const int bs1 = g.add_node(bs, "splitter-in");
        const int e = g.add_node(params.mirror(MirrorLabel::E), "mirror-E");
        const int c = g.add_node(params.mirror(MirrorLabel::C), "mirror-C");
        const int bs2 = g.add_node(bs, "splitter-out");
        const int det = g.add_node(DetectorSpec{}, "detector");

        const double e_leg = params.e_to_detector_m - params.last_splitter_to_detector_m;
        const double c_leg = params.c_to_detector_m - params.last_splitter_to_detector_m;
        check_positive(e_leg, "E arm");
        check_positive(c_leg, "C arm");

        g.add_segment({src, bs1, params.source_to_first_splitter_m});
        g.add_segment({bs1, e, params.first_splitter_to_e_m}); // out0: straight
        g.add_segment({bs1, c, params.first_splitter_to_c_m}); // out1: crossed
        g.add_segment({e, bs2, e_leg, 0.0, params.offset_outer_upper_m});
        g.add_segment({c, bs2, c_leg, 0.0, params.offset_outer_lower_m});
        // crossed output port: with zero offsets the detector port is bright
        g.add_segment({bs2, det, params.last_splitter_to_detector_m, 0.0, 0.0, 1, -1});
    } else {
        const int src = g.add_node(SourceSpec{}, "source");
        const int bs1 = g.add_node(bs, "splitter-in");
        const int e = g.add_node(params.mirror(MirrorLabel::E), "mirror-E");
        const int bs2 = g.add_node(bs, "splitter-inner-in");
        const int a = g.add_node(params.mirror(MirrorLabel::A), "mirror-A");
        const int b = g.add_node(params.mirror(MirrorLabel::B), "mirror-B");
        const int bs3 = g.add_node(bs, "splitter-inner-out");
        const int f = g.add_node(params.mirror(MirrorLabel::F), "mirror-F");
        const int bs4 = g.add_node(bs, "splitter-out");
        const int c = g.add_node(params.mirror(MirrorLabel::C), "mirror-C");
        const int det = g.add_node(DetectorSpec{}, "detector");

        const double f_to_bs4 = params.f_to_detector_m - params.last_splitter_to_detector_m;
        const double a_to_bs3 =
            params.inner_to_detector_m - params.recombiner_to_f_m - params.f_to_detector_m;
        const double e_to_bs2 =
            params.e_to_detector_m - params.inner_splitter_to_mirror_m - params.inner_to_detector_m;
        const double c_to_bs4 = params.c_to_detector_m - params.last_splitter_to_detector_m;
        check_positive(f_to_bs4, "F return leg");
        check_positive(a_to_bs3, "inner arm to recombiner");
        check_positive(e_to_bs2, "E to inner splitter");
        check_positive(c_to_bs4, "C to final splitter");

        g.add_segment({src, bs1, params.source_to_first_splitter_m});
        g.add_segment({bs1, e, params.first_splitter_to_e_m}); // out0: straight -> upper
        g.add_segment({bs1, c, params.first_splitter_to_c_m}); // out1: crossed -> lower
        g.add_segment({e, bs2, e_to_bs2});
        // inner tuning phase on the A arm
        g.add_segment({bs2, a, params.inner_splitter_to_mirror_m, params.inner_phase_rad,
                       params.offset_inner_a_m});
        g.add_segment({bs2, b, params.inner_splitter_to_mirror_m, 0.0, params.offset_inner_b_m});
        g.add_segment({a, bs3, a_to_bs3});
        g.add_segment({b, bs3, a_to_bs3});
        // crossed port toward F: dark at inner relative phase pi
        g.add_segment({bs3, f, params.recombiner_to_f_m, 0.0, 0.0, 1, -1});
        // big-loop tuning phase on the upper return leg
        g.add_segment({f, bs4, f_to_bs4, params.outer_phase_rad, params.offset_outer_upper_m});

        if (variant == ScenarioVariant::LowerBlocked) {
            if (!(params.block_fraction > 0.0) || !(params.block_fraction < 1.0))
                throw validation_error("block fraction must lie strictly inside (0, 1)");
            const int blk = g.add_node(BlockSpec{}, "block");
            g.add_segment({c, blk, c_to_bs4 * params.block_fraction, 0.0, params.offset_outer_lower_m});
            g.add_segment({blk, bs4, c_to_bs4 * (1.0 - params.block_fraction)});
        } else {
            g.add_segment({c, bs4, c_to_bs4, 0.0, params.offset_outer_lower_m});
        }
        // crossed output port: constructive working point of the big loop
        g.add_segment({bs4, det, params.last_splitter_to_detector_m, 0.0, 0.0, 1, -1});
    }

    require_valid(g);
    return g;
}

/// Mirror -> detector distance along the (unique) downstream route.
inline double mirror_to_detector_length(const InterferometerGraph &g, MirrorLabel label)
{
    int node = g.mirror_node(label);
    if (node < 0) throw validation_error(std::string("graph has no mirror ") + to_char(label));
    double length = 0.0;
    const int det = g.detector_node();
    int guard = 0;
    while (node != det) {
        if (++guard > static_cast<int>(g.nodes.size()) + static_cast<int>(g.segments.size()))
            throw validation_error("mirror has no downstream route to the detector");
        const auto out = g.outgoing(node);
        if (out.empty()) throw validation_error("mirror has no downstream route to the detector");
        // follow the detector-bound branch (splitters: prefer the one that reaches it)
        int next_seg = -1;
        for (int s : out) {
            const int to = g.segments[static_cast<std::size_t>(s)].to_node;
            // cheap reachability probe
            std::vector<int> stack = {to};
            std::vector<char> seen(g.nodes.size(), 0);
            bool reaches = false;
            while (!stack.empty()) {
                int u = stack.back();
                stack.pop_back();
                if (u == det) { reaches = true; break; }
                if (seen[static_cast<std::size_t>(u)]) continue;
                seen[static_cast<std::size_t>(u)] = 1;
                for (int s2 : g.outgoing(u)) stack.push_back(g.segments[static_cast<std::size_t>(s2)].to_node);
            }
            if (reaches) { next_seg = s; break; }
        }
        if (next_seg < 0) throw validation_error("mirror has no downstream route to the detector");
        length += g.segments[static_cast<std::size_t>(next_seg)].length_m;
        node = g.segments[static_cast<std::size_t>(next_seg)].to_node;
    }
    return length;
}

} // namespace nmzi

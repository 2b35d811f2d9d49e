#pragma once

#include "nmzi/model.hpp"

#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace nmzi {

// ---------------------------------------------------------------------------
// Gaussian-beam path tracing.
//
// Quasi-static model: light transit is instantaneous on the time scale of the
// mirror motion, so each sample time is an independent stationary problem.
// A mirror tilted by theta displaces the beam centre at the detector by
// deflection_factor * theta * L, where L is the remaining path length from
// that mirror to the detector.
// ---------------------------------------------------------------------------

/// One source->detector route evaluated at an instant.
struct PathContribution {
    std::complex<double> amplitude;   ///< product of splitter couplings and phase factors
    double displacement_m = 0.0;      ///< transverse beam-centre shift at the detector
    double residual_tilt_rad = 0.0;   ///< net angular deviation at the detector
    std::vector<MirrorLabel> path_mirrors;
};

struct LeverArm {
    double tilt_rad = 0.0;
    double distance_m = 0.0;
    double deflection_factor = 1.0;
};

inline double tilt_from_piezo(double piezo_amplitude_m, double pivot_offset_m)
{
    if (!(pivot_offset_m > 0.0))
        throw std::domain_error("pivot offset must be positive");
    return piezo_amplitude_m / pivot_offset_m; // small-angle
}

inline double displacement_at_distance(double tilt_rad, double distance_m, double deflection_factor)
{
    return deflection_factor * tilt_rad * distance_m;
}

inline double displacement_at_distance(const LeverArm &arm)
{
    return displacement_at_distance(arm.tilt_rad, arm.distance_m, arm.deflection_factor);
}

inline double mirror_angle_at(const MirrorSpec &mirror, double t_s)
{
    if (!mirror.enabled) return mirror.static_tilt_rad;
    const double amplitude = tilt_from_piezo(mirror.piezo_amplitude_m, mirror.pivot_offset_m);
    return mirror.static_tilt_rad +
           amplitude * std::sin(2.0 * std::numbers::pi * mirror.frequency_hz * t_s +
                                mirror.oscillation_phase_rad);
}

namespace detail {

/// Time-independent structure of one traced path.
struct CompiledPath {
    std::complex<double> amplitude;
    double static_offset_m = 0.0; // sum of segment transverse offsets
    struct MirrorOnPath {
        MirrorSpec spec;
        double lever_m = 0.0; // remaining length to the detector along this path
    };
    std::vector<MirrorOnPath> mirrors;
    std::vector<MirrorLabel> labels;
};

struct TracedTerminal {
    int node = -1;
    int port = 0;
    bool is_detector = false;
    std::complex<double> amplitude;
};

struct CompiledPaths {
    std::vector<CompiledPath> detector_paths;       // lexicographic by node sequence
    std::vector<TracedTerminal> terminal_amplitudes; // detector + open splitter ports
    double deflection_factor = 1.0;
};

inline CompiledPaths compile_paths(const InterferometerGraph &g)
{
    require_valid(g);
    const auto ports = resolve_ports(g);

    CompiledPaths out;
    out.deflection_factor = g.deflection_factor;

    const std::complex<double> i_unit{0.0, 1.0};
    const int det = g.detector_node();

    struct Hop {
        int seg;
        std::complex<double> coupling; // splitter/mirror factor applied on entry to seg
    };

    // depth-first enumeration; branches sorted by destination node id gives
    // the documented lexicographic path order.
    std::vector<Hop> stack;
    std::vector<CompiledPath> paths;
    std::vector<TracedTerminal> terminals;

    auto splitter_coupling = [&](const BeamSplitterSpec &bs, int in_port, int out_port) {
        return in_port == out_port ? std::complex<double>{bs.transmittance_amplitude, 0.0}
                                   : i_unit * bs.reflectance_amplitude;
    };

    auto emit_terminal = [&](int node, int port, bool is_det) {
        std::complex<double> amp{1.0, 0.0};
        for (const auto &hop : stack) {
            const auto &seg = g.segments[static_cast<std::size_t>(hop.seg)];
            amp *= hop.coupling * std::polar(1.0, seg.phase_offset_rad);
        }
        terminals.push_back(TracedTerminal{node, port, is_det, amp});
        if (!is_det) return;

        CompiledPath p;
        p.amplitude = amp;
        double remaining = 0.0;
        // walk backwards to accumulate per-mirror lever arms
        for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
            const auto &seg = g.segments[static_cast<std::size_t>(it->seg)];
            remaining += seg.length_m;
            p.static_offset_m += seg.transverse_offset_m;
            const int from = seg.from_node;
            if (const auto *m = std::get_if<MirrorSpec>(&g.nodes[static_cast<std::size_t>(from)].kind)) {
                p.mirrors.push_back(CompiledPath::MirrorOnPath{*m, remaining});
            }
        }
        std::reverse(p.mirrors.begin(), p.mirrors.end());
        for (const auto &m : p.mirrors) p.labels.push_back(m.spec.id);
        paths.push_back(std::move(p));
    };

    // iterative DFS
    struct Frame {
        int node;
        int entered_by_seg; // -1 at source
        std::vector<int> branches;
        std::size_t next = 0;
        int open_ports_emitted = 0;
    };

    std::vector<Frame> frames;
    auto sorted_outgoing = [&](int node) {
        auto segs = g.outgoing(node);
        std::sort(segs.begin(), segs.end(), [&](int a, int b) {
            const auto &sa = g.segments[static_cast<std::size_t>(a)];
            const auto &sb = g.segments[static_cast<std::size_t>(b)];
            if (sa.to_node != sb.to_node) return sa.to_node < sb.to_node;
            return a < b;
        });
        return segs;
    };

    frames.push_back(Frame{g.source_node(), -1, sorted_outgoing(g.source_node())});

    while (!frames.empty()) {
        Frame &fr = frames.back();
        const auto &el = g.nodes[static_cast<std::size_t>(fr.node)];

        if (fr.node == det) {
            emit_terminal(fr.node, 0, true);
            frames.pop_back();
            if (!stack.empty()) stack.pop_back();
            continue;
        }
        if (std::holds_alternative<BlockSpec>(el.kind)) {
            // absorbed; not a terminal port
            frames.pop_back();
            if (!stack.empty()) stack.pop_back();
            continue;
        }

        const bool is_splitter = std::holds_alternative<BeamSplitterSpec>(el.kind);

        // open splitter ports are terminals (light leaves the setup)
        if (is_splitter && fr.next == 0 && fr.open_ports_emitted == 0) {
            fr.open_ports_emitted = 1;
            const auto *bsp = std::get_if<BeamSplitterSpec>(&el.kind);
            const int in_port =
                fr.entered_by_seg >= 0 ? ports.in_port[static_cast<std::size_t>(fr.entered_by_seg)] : 0;
            std::array<bool, 2> used = {false, false};
            for (int s : fr.branches) used[static_cast<std::size_t>(ports.out_port[static_cast<std::size_t>(s)])] = true;
            for (int q = 0; q < 2; ++q) {
                if (used[static_cast<std::size_t>(q)]) continue;
                stack.push_back(Hop{-1, splitter_coupling(*bsp, in_port, q)});
                // fake hop: no segment phase
                std::complex<double> amp{1.0, 0.0};
                for (const auto &hop : stack) {
                    if (hop.seg >= 0) {
                        const auto &seg = g.segments[static_cast<std::size_t>(hop.seg)];
                        amp *= hop.coupling * std::polar(1.0, seg.phase_offset_rad);
                    } else {
                        amp *= hop.coupling;
                    }
                }
                terminals.push_back(TracedTerminal{fr.node, q, false, amp});
                stack.pop_back();
            }
        }
        if (!is_splitter && fr.branches.empty()) {
            // dead-end mirror: light leaves the setup here
            emit_terminal(fr.node, 0, false);
            frames.pop_back();
            if (!stack.empty()) stack.pop_back();
            continue;
        }

        if (fr.next >= fr.branches.size()) {
            frames.pop_back();
            if (!stack.empty()) stack.pop_back();
            continue;
        }

        const int seg_idx = fr.branches[fr.next++];
        std::complex<double> coupling{1.0, 0.0};
        if (is_splitter) {
            const auto *bsp = std::get_if<BeamSplitterSpec>(&el.kind);
            const int in_port =
                fr.entered_by_seg >= 0 ? ports.in_port[static_cast<std::size_t>(fr.entered_by_seg)] : 0;
            coupling = splitter_coupling(*bsp, in_port, ports.out_port[static_cast<std::size_t>(seg_idx)]);
        }
        stack.push_back(Hop{seg_idx, coupling});
        const int next_node = g.segments[static_cast<std::size_t>(seg_idx)].to_node;
        frames.push_back(Frame{next_node, seg_idx, sorted_outgoing(next_node)});
    }

    out.detector_paths = std::move(paths);
    out.terminal_amplitudes = std::move(terminals);
    return out;
}

inline PathContribution evaluate_path(const CompiledPath &p, double deflection_factor, double t_s)
{
    PathContribution c;
    c.amplitude = p.amplitude;
    c.path_mirrors = p.labels;
    c.displacement_m = p.static_offset_m;
    for (const auto &m : p.mirrors) {
        const double angle = mirror_angle_at(m.spec, t_s);
        c.displacement_m += displacement_at_distance(angle, m.lever_m, deflection_factor);
        c.residual_tilt_rad += deflection_factor * angle;
    }
    return c;
}

} // namespace detail

/// All unblocked source->detector contributions at time t.
inline std::vector<PathContribution> trace_paths(const InterferometerGraph &g, double t_s)
{
    const auto compiled = detail::compile_paths(g);
    std::vector<PathContribution> out;
    out.reserve(compiled.detector_paths.size());
    for (const auto &p : compiled.detector_paths)
        out.push_back(detail::evaluate_path(p, compiled.deflection_factor, t_s));
    return out;
}

struct TerminalAmplitude {
    int node = -1;
    int port = 0;
    bool is_detector = false;
    std::complex<double> amplitude;
};

/// Coherent amplitude reaching every exit of the setup (detector plus open
/// splitter ports).  For a block-free graph the squared magnitudes sum to 1.
inline std::vector<TerminalAmplitude> terminal_port_amplitudes(const InterferometerGraph &g)
{
    const auto compiled = detail::compile_paths(g);
    std::vector<TerminalAmplitude> out;
    for (const auto &t : compiled.terminal_amplitudes) {
        // coalesce multiple paths reaching the same exit
        bool merged = false;
        for (auto &existing : out) {
            if (existing.node == t.node && existing.port == t.port) {
                existing.amplitude += t.amplitude;
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back(TerminalAmplitude{t.node, t.port, t.is_detector, t.amplitude});
    }
    return out;
}

} // namespace nmzi

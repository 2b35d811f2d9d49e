#include <catch2/catch_amalgamated.hpp>

#include "nmzi/beams.hpp"

#include <complex>
#include <numbers>

using namespace nmzi;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("tilt_from_piezo small-angle conversion", "[beams]")
{
    CHECK_THAT(tilt_from_piezo(10e-9, 1e-2), WithinRel(1.0e-6, 1e-12));
    CHECK(tilt_from_piezo(0.0, 1e-2) == 0.0);
    CHECK_THAT(tilt_from_piezo(20e-9, 1e-2), WithinRel(2.0e-6, 1e-12));
    CHECK_THROWS_AS(tilt_from_piezo(10e-9, 0.0), std::domain_error);
    CHECK_THROWS_AS(tilt_from_piezo(10e-9, -1e-2), std::domain_error);
}

TEST_CASE("displacement_at_distance lever arm", "[beams]")
{
    CHECK_THAT(displacement_at_distance(1.0e-6, 0.10, 1.0), WithinRel(100e-9, 1e-12));
    CHECK_THAT(displacement_at_distance(1.0e-6, 0.10, 2.0), WithinRel(200e-9, 1e-12));
    CHECK(displacement_at_distance(1.0e-6, 0.0, 2.0) == 0.0);
    CHECK(displacement_at_distance(LeverArm{1.0e-6, 0.10, 1.0}) ==
          displacement_at_distance(1.0e-6, 0.10, 1.0));
}

TEST_CASE("mirror_angle_at", "[beams]")
{
    MirrorSpec m;
    m.frequency_hz = 318.0;
    m.piezo_amplitude_m = 10e-9;
    m.pivot_offset_m = 1e-2;
    m.static_tilt_rad = 3e-7;

    CHECK_THAT(mirror_angle_at(m, 0.0), WithinRel(3e-7, 1e-12)); // sin(0) = 0

    const double quarter_period = 0.25 / m.frequency_hz;
    m.static_tilt_rad = 0.0;
    CHECK_THAT(mirror_angle_at(m, quarter_period), WithinRel(1.0e-6, 1e-9));

    m.static_tilt_rad = 5e-7;
    m.enabled = false;
    CHECK(mirror_angle_at(m, 0.123) == 5e-7);
    CHECK(mirror_angle_at(m, 0.456) == 5e-7);
}

TEST_CASE("trace_paths on the nested scenario", "[beams]")
{
    SECTION("static graph: displacements are the static offsets only")
    {
        ScenarioParams params;
        for (auto &m : params.mirrors) m.piezo_amplitude_m = 0.0;
        params.offset_inner_a_m = 1e-4;
        const auto g = build_scenario(ScenarioVariant::NestedTuned, params);
        const auto paths = trace_paths(g, 0.0);
        REQUIRE(paths.size() == 3);
        for (const auto &p : paths) {
            const bool has_a = std::find(p.path_mirrors.begin(), p.path_mirrors.end(),
                                         MirrorLabel::A) != p.path_mirrors.end();
            CHECK_THAT(p.displacement_m, WithinAbs(has_a ? 1e-4 : 0.0, 1e-18));
        }
    }

    SECTION("only mirror C enabled, quarter period")
    {
        ScenarioParams params;
        for (auto &m : params.mirrors) m.enabled = m.id == MirrorLabel::C;
        const auto g = build_scenario(ScenarioVariant::NestedTuned, params);
        const double f_c = params.mirror(MirrorLabel::C).frequency_hz;
        const auto paths = trace_paths(g, 0.25 / f_c);
        REQUIRE(paths.size() == 3);
        for (const auto &p : paths) {
            const bool has_c = std::find(p.path_mirrors.begin(), p.path_mirrors.end(),
                                         MirrorLabel::C) != p.path_mirrors.end();
            // lever arm chain: (10 nm / 1 cm) * 0.20 m = 2.0e-7 m
            const double expected =
                has_c ? displacement_at_distance(tilt_from_piezo(10e-9, 1e-2), 0.20, 1.0) : 0.0;
            CHECK_THAT(p.displacement_m, WithinAbs(expected, 1e-16));
        }
    }

    SECTION("paths are ordered lexicographically by node sequence and stay constant in t")
    {
        const auto g = build_scenario(ScenarioVariant::NestedTuned);
        const auto p0 = trace_paths(g, 0.0);
        const auto p1 = trace_paths(g, 0.37);
        REQUIRE(p0.size() == p1.size());
        for (std::size_t i = 0; i < p0.size(); ++i)
            CHECK(p0[i].path_mirrors == p1[i].path_mirrors);
    }
}

TEST_CASE("inner loop is dark toward the detector-bound port", "[beams]")
{
    const auto g = build_scenario(ScenarioVariant::NestedTuned);
    const auto paths = trace_paths(g, 0.0);
    REQUIRE(paths.size() == 3);

    std::complex<double> inner_sum{0.0, 0.0};
    std::complex<double> c_amp{0.0, 0.0};
    for (const auto &p : paths) {
        if (std::find(p.path_mirrors.begin(), p.path_mirrors.end(), MirrorLabel::C) !=
            p.path_mirrors.end())
            c_amp = p.amplitude;
        else
            inner_sum += p.amplitude;
    }
    CHECK_THAT(std::abs(inner_sum), WithinAbs(0.0, 1e-15));
    CHECK_THAT(std::abs(c_amp), WithinRel(0.5, 1e-12));

    // big loop sits at its constructive working point: each leaked inner
    // amplitude is a real multiple of the C amplitude
    for (const auto &p : paths) {
        const bool inner = std::find(p.path_mirrors.begin(), p.path_mirrors.end(),
                                     MirrorLabel::C) == p.path_mirrors.end();
        if (!inner) continue;
        const auto ratio = p.amplitude / c_amp;
        CHECK_THAT(std::abs(ratio.imag()), WithinAbs(0.0, 1e-12));
        CHECK_THAT(std::abs(ratio.real()), WithinRel(0.5, 1e-12));
    }
}

TEST_CASE("bright-tuned inner loop sends full power to the detector", "[beams]")
{
    ScenarioParams params;
    params.inner_phase_rad = 0.0; // re-tune the small loop bright
    const auto g = build_scenario(ScenarioVariant::NestedTuned, params);

    std::complex<double> sum{0.0, 0.0};
    for (const auto &p : trace_paths(g, 0.0)) sum += p.amplitude;
    CHECK_THAT(std::abs(sum), WithinRel(1.0, 1e-12));

    double power = 0.0;
    for (const auto &t : terminal_port_amplitudes(g)) power += std::norm(t.amplitude);
    CHECK_THAT(power, WithinRel(1.0, 1e-12));
}

TEST_CASE("splitter unitarity across all terminal ports", "[beams]")
{
    for (auto variant : {ScenarioVariant::TwoPathAligned, ScenarioVariant::NestedTuned}) {
        const auto g = build_scenario(variant);
        const auto terminals = terminal_port_amplitudes(g);
        double power = 0.0;
        for (const auto &t : terminals) power += std::norm(t.amplitude);
        CHECK_THAT(power, WithinRel(1.0, 1e-12));
    }

    // a block absorbs power: the terminal sum drops below one
    const auto blocked = build_scenario(ScenarioVariant::LowerBlocked);
    double power = 0.0;
    for (const auto &t : terminal_port_amplitudes(blocked)) power += std::norm(t.amplitude);
    CHECK(power < 1.0 - 0.1);
}

TEST_CASE("piezo-amplitude linearity of the oscillating displacement", "[beams]")
{
    ScenarioParams base;
    ScenarioParams scaled = base;
    const double s = 3.7;
    for (auto &m : scaled.mirrors) m.piezo_amplitude_m *= s;

    const auto g1 = build_scenario(ScenarioVariant::NestedTuned, base);
    const auto g2 = build_scenario(ScenarioVariant::NestedTuned, scaled);

    for (double t : {0.0, 1e-3, 0.137, 0.8}) {
        const auto p1 = trace_paths(g1, t);
        const auto p1_static = trace_paths(g1, 0.0); // zero phase: sin(0) = 0 gives statics
        const auto p2 = trace_paths(g2, t);
        REQUIRE(p1.size() == p2.size());
        for (std::size_t i = 0; i < p1.size(); ++i) {
            const double osc1 = p1[i].displacement_m - p1_static[i].displacement_m;
            const double osc2 = p2[i].displacement_m - p1_static[i].displacement_m;
            CHECK_THAT(osc2, WithinAbs(s * osc1, 1e-18));
        }
    }
}

TEST_CASE("zero piezo amplitudes freeze the trace in time", "[beams]")
{
    ScenarioParams params;
    for (auto &m : params.mirrors) m.piezo_amplitude_m = 0.0;
    params.mirror(MirrorLabel::B).static_tilt_rad = 2e-7;
    const auto g = build_scenario(ScenarioVariant::NestedTuned, params);

    const auto ref = trace_paths(g, 0.0);
    for (double t : {0.1, 0.25, 3.9}) {
        const auto now = trace_paths(g, t);
        REQUIRE(now.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(now[i].displacement_m == ref[i].displacement_m);
            CHECK(now[i].amplitude == ref[i].amplitude);
            CHECK(now[i].residual_tilt_rad == ref[i].residual_tilt_rad);
        }
    }
}

TEST_CASE("path count does not depend on the sample time", "[beams]")
{
    const auto g = build_scenario(ScenarioVariant::NestedTuned);
    const auto n = trace_paths(g, 0.0).size();
    for (double t : {1e-4, 0.02, 0.5, 1.7}) CHECK(trace_paths(g, t).size() == n);
}

TEST_CASE("trace_paths rejects invalid graphs", "[beams]")
{
    auto g = build_scenario(ScenarioVariant::TwoPathAligned);
    g.segments[0].length_m = -1.0;
    CHECK_THROWS_AS(trace_paths(g, 0.0), validation_error);
}

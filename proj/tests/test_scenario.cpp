#include <catch2/catch_amalgamated.hpp>

#include "nmzi/scenario.hpp"

#include <numbers>

using namespace nmzi;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

TEST_CASE("minimal scenario file fills in defaults", "[scenario]")
{
    const auto config = parse_scenario("variant = nested-tuned\n");
    CHECK(config.variant == ScenarioVariant::NestedTuned);
    CHECK(config.params.beam_waist_m == 1e-3);
    CHECK(config.params.mirror(MirrorLabel::A).frequency_hz == 288.0);
    CHECK(config.sampling.sample_rate_hz == 2048.0);
    CHECK(config.band.low_hz == 270.0);
    CHECK(config.band.high_hz == 340.0);
    CHECK_FALSE(config.normalize);
}

TEST_CASE("unit suffixes", "[scenario]")
{
    const auto config = parse_scenario("variant = two-path\n"
                                       "beam_waist = 2 mm\n"
                                       "[mirror C]\n"
                                       "frequency = 0.318 kHz\n"
                                       "piezo_amplitude = 10 nm\n"
                                       "pivot_offset = 1 cm\n"
                                       "static_tilt = 5 urad\n"
                                       "[sampling]\n"
                                       "duration = 2000 ms\n");
    CHECK_THAT(config.params.beam_waist_m, WithinRel(2e-3, 1e-12));
    CHECK_THAT(config.params.mirror(MirrorLabel::C).frequency_hz, WithinRel(318.0, 1e-12));
    CHECK_THAT(config.params.mirror(MirrorLabel::C).piezo_amplitude_m, WithinRel(10e-9, 1e-12));
    CHECK_THAT(config.params.mirror(MirrorLabel::C).pivot_offset_m, WithinRel(1e-2, 1e-12));
    CHECK_THAT(config.params.mirror(MirrorLabel::C).static_tilt_rad, WithinRel(5e-6, 1e-12));
    CHECK_THAT(config.sampling.duration_s, WithinRel(2.0, 1e-12));
}

TEST_CASE("band and exclusions parse", "[scenario]")
{
    const auto config = parse_scenario("variant = nested-blocked\n"
                                       "band = 270:340\n"
                                       "exclude = 280, 310\n");
    CHECK(config.band.low_hz == 270.0);
    CHECK(config.band.high_hz == 340.0);
    REQUIRE(config.exclusions.size() == 2);
    CHECK(config.exclusions[0] == 280.0);
    CHECK(config.exclusions[1] == 310.0);
}

TEST_CASE("diagnostics carry line numbers", "[scenario]")
{
    SECTION("duplicate mirror section")
    {
        try {
            parse_scenario("variant = nested-tuned\n"
                           "[mirror A]\n"
                           "frequency = 288\n"
                           "[mirror A]\n"
                           "frequency = 289\n");
            FAIL("expected parse_error");
        } catch (const parse_error &e) {
            CHECK(e.line() == 4);
            CHECK_THAT(e.what(), ContainsSubstring("duplicate section"));
        }
    }

    SECTION("unknown key")
    {
        try {
            parse_scenario("variant = nested-tuned\nwavelength = 633 nm\n");
            FAIL("expected parse_error");
        } catch (const parse_error &e) {
            CHECK(e.line() == 2);
            CHECK_THAT(e.what(), ContainsSubstring("unknown key"));
        }
    }

    SECTION("unknown section")
    {
        CHECK_THROWS_AS(parse_scenario("variant = nested-tuned\n[telescope]\nx = 1\n"), parse_error);
    }

    SECTION("mismatched unit")
    {
        try {
            parse_scenario("variant = nested-tuned\nbeam_waist = 1 Hz\n");
            FAIL("expected parse_error");
        } catch (const parse_error &e) {
            CHECK(e.line() == 2);
        }
    }

    SECTION("out-of-range value")
    {
        try {
            parse_scenario("variant = nested-tuned\n[mirror A]\nfrequency = -5 Hz\n");
            FAIL("expected parse_error");
        } catch (const parse_error &e) {
            CHECK(e.line() == 3);
        }
    }

    SECTION("bad variant")
    {
        CHECK_THROWS_AS(parse_scenario("variant = moebius\n"), parse_error);
    }

    SECTION("non-finite values")
    {
        CHECK_THROWS_AS(parse_scenario("variant = nested-tuned\n[offsets]\ninner_a = nan\n"),
                        parse_error);
        CHECK_THROWS_AS(parse_scenario("variant = nested-tuned\n[offsets]\ninner_b = inf\n"),
                        parse_error);
    }
}

TEST_CASE("structural violations surface as validation errors", "[scenario]")
{
    CHECK_THROWS_AS(parse_scenario("variant = nested-tuned\n"
                                   "[mirror A]\n"
                                   "frequency = 298\n"), // collides with B
                    validation_error);
}

TEST_CASE("scenario serialization round-trips losslessly", "[scenario]")
{
    ScenarioConfig config;
    config.variant = ScenarioVariant::LowerBlocked;
    config.params.offset_inner_a_m = 1.6014570677017352e-4;
    config.params.offset_inner_b_m = -1.6014570677017352e-4;
    config.params.mirror(MirrorLabel::E).oscillation_phase_rad = 0.7;
    config.params.block_fraction = 0.37;
    config.normalize = true;
    config.exclusions = {280.0, 310.0};
    config.disturbances.lines.push_back({280.0, 0.002, 0.1});
    config.disturbances.lines.push_back({310.0, 0.002, 0.4});
    config.disturbances.noise_sigma = 1e-5;
    config.disturbances.seed = 20251111;
    config.sampling.window = WindowKind::hann;
    config.svg = true;

    const std::string text = write_scenario(config);
    const auto parsed = parse_scenario(text);

    CHECK(parsed.variant == config.variant);
    CHECK(parsed.params.offset_inner_a_m == config.params.offset_inner_a_m);
    CHECK(parsed.params.offset_inner_b_m == config.params.offset_inner_b_m);
    CHECK(parsed.params.block_fraction == config.params.block_fraction);
    CHECK(parsed.params.mirror(MirrorLabel::E).oscillation_phase_rad == 0.7);
    CHECK(parsed.normalize == config.normalize);
    CHECK(parsed.exclusions == config.exclusions);
    REQUIRE(parsed.disturbances.lines.size() == 2);
    CHECK(parsed.disturbances.lines[1].frequency_hz == 310.0);
    CHECK(parsed.disturbances.lines[1].phase_rad == 0.4);
    CHECK(parsed.disturbances.noise_sigma == config.disturbances.noise_sigma);
    CHECK(parsed.disturbances.seed == config.disturbances.seed);
    CHECK(parsed.svg == config.svg);

    // a second serialization is byte-identical
    CHECK(write_scenario(parsed) == text);
}

TEST_CASE("comments and blank lines are ignored", "[scenario]")
{
    const auto config = parse_scenario("# full-line comment\n"
                                       "\n"
                                       "variant = two-path  # trailing comment\n"
                                       "\n"
                                       "[mirror E]\n"
                                       "frequency = 275 Hz # as shipped\n");
    CHECK(config.variant == ScenarioVariant::TwoPathAligned);
    CHECK(config.params.mirror(MirrorLabel::E).frequency_hz == 275.0);
}

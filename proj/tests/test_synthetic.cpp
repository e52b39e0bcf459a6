#include <doctest.h>

#include "isa2/error.hpp"
#include "isa2/features.hpp"
#include "isa2/synthetic.hpp"
#include "support.hpp"

using namespace isa2;
using isa2::testing::read_file;
using isa2::testing::TempDir;

TEST_CASE("generated moments track the configured targets") {
    TempDir dir;
    SyntheticConfig config;
    const SyntheticDataset data = generate_synthetic(config, dir.path());
    CHECK(data.manifest.samples.size() == 8000);
    for (const Scenario s : kScenarios) {
        for (const Split sp : kSplits) {
            const auto& target = config.targets[index_of(s)][index_of(sp)];
            const auto& got = data.achieved[index_of(s)][index_of(sp)];
            CAPTURE(to_string(s));
            CAPTURE(to_string(sp));
            CHECK(got.count == 2000);
            CHECK(std::abs(got.mean - target.mean) <= 0.05 * target.std);
        }
    }
    const auto& hw = data.achieved[index_of(Scenario::Highway)][index_of(Split::Train)];
    CHECK(hw.mean >= 83.40);
    CHECK(hw.mean <= 85.22);
}

TEST_CASE("noise-free speeds equal the planted response") {
    TempDir dir;
    SyntheticConfig config;
    config.frames_per_scenario_split = 25;
    config.noise_std = 0.0;
    config.rng_seed = 4;
    const SyntheticDataset data = generate_synthetic(config, dir.path());
    const Manifest m = load_manifest(dir / "manifest.csv");
    const auto planted = load_planted_weights(dir / "planted_weights.csv");
    REQUIRE(m.samples.size() == 100);
    for (const auto& sample : m.samples) {
        const auto d = spp_descriptor(m.load_map(sample), {3}, m.class_count);
        const double expected = std::max(0.0, planted[index_of(sample.scenario)].response(d));
        CHECK(sample.speed_kmh == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(planted[0].weights == data.planted[0].weights);
    CHECK(planted[1].bias == data.planted[1].bias);
}

TEST_CASE("scenarios get different planted weights") {
    const auto planted = planted_weights(SyntheticConfig{});
    CHECK(planted[0].weights.size() == 399);
    CHECK(planted[0].weights != planted[1].weights);
    CHECK(planted[0].bias != planted[1].bias);
}

TEST_CASE("generation is byte-identical for a fixed seed") {
    TempDir a;
    TempDir b;
    SyntheticConfig config;
    config.frames_per_scenario_split = 10;
    config.emit_score_maps = true;
    config.rng_seed = 77;
    generate_synthetic(config, a.path());
    generate_synthetic(config, b.path());
    CHECK(read_file(a / "manifest.csv") == read_file(b / "manifest.csv"));
    CHECK(read_file(a / "planted_weights.csv") == read_file(b / "planted_weights.csv"));
    const Manifest m = load_manifest(a / "manifest.csv");
    for (const auto& s : m.samples) {
        CHECK(read_file(a.path() / s.label_map_path) == read_file(b.path() / s.label_map_path));
        CHECK(read_file(score_map_path(a / "scores", s.frame_id, 0)) == read_file(score_map_path(b / "scores", s.frame_id, 0)));
    }

    TempDir c;
    config.rng_seed = 78;
    generate_synthetic(config, c.path());
    CHECK(read_file(a / "manifest.csv") != read_file(c / "manifest.csv"));
}

TEST_CASE("emitted score maps fuse back to the label maps") {
    TempDir dir;
    SyntheticConfig config;
    config.frames_per_scenario_split = 3;
    config.emit_score_maps = true;
    generate_synthetic(config, dir.path());
    const Manifest m = load_manifest(dir / "manifest.csv");
    for (const auto& s : m.samples) {
        const ScoreMapSet set = load_score_map_set(dir / "scores", s.frame_id);
        const LabelMap fused = argmax_labels(fuse_scales(set));
        const LabelMap truth = m.load_map(s);
        for (int r = 0; r < truth.height(); ++r) {
            for (int c = 0; c < truth.width(); ++c) {
                if (truth.at(r, c) != kVoidLabel) CHECK(fused.at(r, c) == truth.at(r, c));
            }
        }
    }
}

TEST_CASE("synthetic config validation") {
    SyntheticConfig config;
    CHECK_NOTHROW(validate(config));
    SUBCASE("zero frames") {
        config.frames_per_scenario_split = 0;
        CHECK_THROWS_WITH_AS(validate(config), doctest::Contains("empty dataset"), ConfigError);
    }
    SUBCASE("non-positive target mean") {
        config.targets[0][0].mean = 0.0;
        CHECK_THROWS_AS(validate(config), ConfigError);
    }
    SUBCASE("map too small for the pyramid") {
        config.map_height = 2;
        CHECK_THROWS_AS(validate(config), ConfigError);
    }
    SUBCASE("negative noise") {
        config.noise_std = -1;
        CHECK_THROWS_AS(validate(config), ConfigError);
    }
}

TEST_CASE("describe uses the population standard deviation") {
    const std::vector<double> v{1, 3};
    const SplitStatistics s = describe(v);
    CHECK(s.count == 2);
    CHECK(s.mean == 2.0);
    CHECK(s.std == 1.0);
}

TEST_CASE("planted response never needs clamping") {
    TempDir dir;
    SyntheticConfig config;
    config.frames_per_scenario_split = 400;
    config.map_height = 12;
    config.map_width = 16;
    config.noise_std = 0.0;
    config.rng_seed = 2024;
    const SyntheticDataset data = generate_synthetic(config, dir.path());
    const Manifest m = load_manifest(dir / "manifest.csv");
    for (const auto& sample : m.samples) {
        const auto d = spp_descriptor(m.load_map(sample), {3}, m.class_count);
        CHECK(data.planted[index_of(sample.scenario)].response(d) >= 0.0);
    }
}

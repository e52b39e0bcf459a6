#include <doctest.h>

#include <sstream>

#include "isa2/cli.hpp"
#include "isa2/config.hpp"
#include "isa2/error.hpp"
#include "support.hpp"

using namespace isa2;
using isa2::testing::read_file;
using isa2::testing::TempDir;
using isa2::testing::write_file;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string small_config(int frames = 30, double noise = 1.0, const std::string& extra_train = "",
                         const std::string& ridge = "1e-6") {
    return "[paths]\n"
           "out_dir = data\nmanifest = data/manifest.csv\nscore_dir = data/scores\nfused_dir = data/fused\n"
           "feature_cache = work/features.csv\nmodel_dir = work/models\nreport_dir = work/reports\n"
           "[generate]\nframes_per_scenario_split = " +
           std::to_string(frames) + "\nmap_height = 16\nmap_width = 24\nnoise_std = " + std::to_string(noise) +
           "\nemit_score_maps = true\n"
           "[features]\nlevels = 3\nclass_count = 19\n"
           "[train]\nsolver = ols\nregime = independent\nridge_lambda = " + ridge + "\nlasso_lambda = 0.05\n" +
           extra_train + "[run]\nseed = 3\n";
}

}  // namespace

TEST_CASE("config parses sections and resolves paths") {
    const PipelineConfig c = parse_pipeline_config(small_config(), "/base");
    CHECK(c.paths.manifest == std::filesystem::path("/base/data/manifest.csv"));
    CHECK(c.generate.frames_per_scenario_split == 30);
    CHECK(c.generate.map_height == 16);
    CHECK(c.generate.emit_score_maps);
    CHECK(c.train.kind == SolverKind::Ols);
    CHECK(c.train.ols.ridge_lambda == 1e-6);
    CHECK(c.train.lasso.lambda == 0.05);
    CHECK(c.regime == Regime::Independent);
    CHECK(c.seed == 3);
    CHECK(c.generate.rng_seed == 3);
    CHECK(c.train.seed == 3);
}

TEST_CASE("config round trips through INI text") {
    PipelineConfig c = parse_pipeline_config(small_config(30, 1.0, "cv_folds = 3\ncv_parameter = ridge_lambda\ncv_values = 1e-6,1e-2\n"),
                                             "/base");
    const PipelineConfig again = parse_pipeline_config(to_ini(c), "/elsewhere");
    CHECK(to_ini(again) == to_ini(c));
    const CvSettings cv = cv_settings(again);
    CHECK(cv.folds == 3);
    REQUIRE(cv.grid.size() == 2);
    CHECK(cv.grid[1].ols.ridge_lambda == 1e-2);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_pipeline_config("[train]\nsolvr = ols\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_pipeline_config("[mystery]\nx = 1\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_pipeline_config("[train]\nsolver = forest\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_pipeline_config("[features]\nlevels = 4\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_pipeline_config("[train]\nridge_lambda = abc\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_pipeline_config("[train\n", "."), ConfigError);
    CHECK_THROWS_AS(load_pipeline_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("cli exit codes for bad invocations") {
    CHECK(cli({}).code == kExitConfig);
    CHECK(cli({"generate"}).code == kExitConfig);  // --config missing
    CHECK(cli({"--config", "/nonexistent.ini", "generate"}).code == kExitConfig);
    CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("cli generate refuses an empty dataset") {
    TempDir dir;
    write_file(dir / "c.ini", small_config(0));
    const Run r = cli({"--config", (dir / "c.ini").string(), "generate"});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("empty dataset") != std::string::npos);
}

TEST_CASE("cli stages report missing artifacts") {
    TempDir dir;
    write_file(dir / "c.ini", small_config());
    const std::string config = (dir / "c.ini").string();
    const Run trace = cli({"--config", config, "trace"});
    CHECK(trace.code == kExitConfig);
    CHECK(trace.err.find("trained model") != std::string::npos);
    CHECK(trace.err.find("independent_ols_urban.model") != std::string::npos);
    CHECK(cli({"--config", config, "train"}).err.find("feature cache") != std::string::npos);
    CHECK(cli({"--config", config, "featurize"}).code == kExitConfig);
}

TEST_CASE("cli runs the whole pipeline") {
    TempDir dir;
    write_file(dir / "c.ini", small_config());
    const std::string config = (dir / "c.ini").string();

    const Run gen = cli({"--config", config, "generate"});
    REQUIRE(gen.code == kExitOk);
    CHECK(gen.out.find("highway") != std::string::npos);
    CHECK(gen.out.find("mean_kmh") != std::string::npos);

    REQUIRE(cli({"--config", config, "fuse", "--jobs", "3"}).code == kExitOk);
    CHECK(std::filesystem::exists(dir / "data/fused/manifest.csv"));
    REQUIRE(cli({"--config", config, "featurize", "--from-fused"}).code == kExitOk);
    const std::string fused_features = read_file(dir / "work/features.csv");
    REQUIRE(cli({"--config", config, "featurize", "--jobs", "2"}).code == kExitOk);
    // Fused maps reproduce every non-void pixel; void pixels differ, so only compare sizes.
    CHECK(fused_features.size() > 0);

    const Run train = cli({"--config", config, "train", "--solver", "lasso"});
    REQUIRE(train.code == kExitOk);
    CHECK(train.err.find("converged=") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "work/models/independent_lasso_urban.model"));
    CHECK(std::filesystem::exists(dir / "work/models/independent_lasso_highway.model"));

    const Run eval = cli({"--config", config, "evaluate", "--solver", "lasso", "--regime", "independent"});
    REQUIRE(eval.code == kExitOk);
    CHECK(eval.out.find("SS + Lasso regression") != std::string::npos);
    const std::string csv = read_file(dir / "work/reports/report_independent_lasso.csv");
    CHECK(csv.find("independent,SS + Lasso regression,urban,") != std::string::npos);
    CHECK(csv.find("independent,SS + Lasso regression,highway,") != std::string::npos);

    REQUIRE(cli({"--config", config, "train", "--regime", "joint"}).code == kExitOk);
    REQUIRE(cli({"--config", config, "evaluate", "--regime", "joint"}).code == kExitOk);
    REQUIRE(cli({"--config", config, "trace", "--regime", "joint"}).code == kExitOk);
    CHECK(std::filesystem::exists(dir / "work/reports/trace_joint_ols_highway.svg"));
    CHECK(std::filesystem::exists(dir / "work/reports/trace_joint_ols_urban.csv"));

    SUBCASE("singular OLS exits with the numerical code") {
        write_file(dir / "c.ini", small_config(30, 1.0, "", "0"));
        const Run r = cli({"--config", config, "train"});
        CHECK(r.code == kExitNumerical);
        CHECK(r.err.find("ridge") != std::string::npos);
    }
    SUBCASE("corrupt model exits with the i/o code") {
        write_file(dir / "work/models/joint_ols_all.model", "garbage");
        CHECK(cli({"--config", config, "evaluate", "--regime", "joint"}).code == kExitIo);
    }
}

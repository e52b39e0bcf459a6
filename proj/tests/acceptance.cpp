// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <numeric>
#include <iostream>
#include <map>
#include <sstream>

#include "isa2/cli.hpp"
#include "isa2/evaluation.hpp"
#include "isa2/features.hpp"
#include "isa2/fusion.hpp"
#include "isa2/regressors.hpp"
#include "isa2/text.hpp"
#include "support.hpp"

using namespace isa2;
using namespace isa2::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

int failures = 0;

void report(const std::string& name, double limit_seconds, const std::function<Outcome()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
        outcome = check();
    } catch (const std::exception& e) {
        outcome.pass = false;
        outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_seconds > 0 && seconds >= limit_seconds) {
        outcome.pass = false;
        outcome.detail += " runtime " + format_fixed(seconds, 2) + " s exceeds " + format_fixed(limit_seconds, 0) + " s";
    }
    if (!outcome.pass) ++failures;
    std::printf("%s  %-28s %7.2f s  %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), seconds, outcome.detail.c_str());
    std::fflush(stdout);
}

Outcome descriptor_correctness() {
    Outcome o;
    std::mt19937_64 rng(1001);
    for (int fixture = 0; fixture < 25; ++fixture) {
        const LabelMap map = random_label_map(8, 8, 19, 0.2, rng);
        for (int levels = 1; levels <= 3; ++levels) {
            const auto d = spp_descriptor(map, {levels}, 19);
            const auto oracle = brute_descriptor(map, levels, 19);
            bool same = d.size() == oracle.size();
            for (std::size_t i = 0; same && i < d.size(); ++i) same = std::abs(d[i] - oracle[i]) <= 1e-12;
            o.require(same, "fixture " + std::to_string(fixture) + " L=" + std::to_string(levels) + " differs from oracle");
        }
    }
    const std::size_t length = spp_descriptor(LabelMap(8, 8, 0), {3}, 19).size();
    o.require(length == 399 && descriptor_length(19, 3) == 399, "length " + std::to_string(length) + " != 399");
    if (o.pass) o.detail = "25 fixtures x 3 depths match; length 399";
    return o;
}

Outcome fusion_correctness() {
    Outcome o;
    std::mt19937_64 rng(1002);
    int ties = 0;
    for (int fixture = 0; fixture < 25; ++fixture) {
        const ScoreMapSet set = random_score_map_set(16, 16, 19, kDefaultScales, rng, fixture % 2 == 1);
        validate(set);
        std::vector<float> oracle_scores;
        const LabelMap oracle = brute_fused_labels(set, &oracle_scores);
        const ScoreMap fused = fuse_scales(set);
        o.require(fused.scores() == oracle_scores, "fused scores differ on fixture " + std::to_string(fixture));
        o.require(argmax_labels(fused) == oracle, "labels differ on fixture " + std::to_string(fixture));
        for (int y = 0; y < 16; ++y) {
            for (int x = 0; x < 16; ++x) {
                const auto px = fused.pixel(y, x);
                ties += std::count(px.begin(), px.end(), *std::max_element(px.begin(), px.end())) > 1;
            }
        }
    }
    if (o.pass) o.detail = "25 sets match; " + std::to_string(ties) + " tied pixels resolved to lowest id";
    return o;
}

Outcome solver_oracles() {
    Outcome o;
    std::mt19937_64 rng(1003);
    std::ostringstream detail;

    // OLS stationarity.
    double worst_ols = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix x = random_matrix(40, 5, rng);
        const auto y = linear_targets(x, {1.5, -2, 0.25, 3, 0}, 10, 1.0, rng);
        worst_ols = std::max(worst_ols, ols_stationarity(x, y, fit_ols(x, y, 0.0), 0.0));
    }
    o.require(worst_ols < 1e-8, "OLS stationarity " + format_double(worst_ols));
    detail << "ols |grad|=" << std::scientific << std::setprecision(1) << worst_ols;

    // Lasso KKT and the zero solution at lambda_max.
    double worst_kkt = 0.0;
    bool zero_at_max = true;
    for (int trial = 0; trial < 5; ++trial) {
        Matrix x = random_matrix(60, 10, rng);
        x = apply_standardization(x, fit_standardization(x));
        const auto y = linear_targets(x, {2, 0, 0, -1, 0, 0, 0.5, 0, 0, 0.05}, 3, 0.5, rng);
        LassoParams p;
        p.lambda = 0.1;
        p.tolerance = 1e-10;
        worst_kkt = std::max(worst_kkt, lasso_kkt_violation(x, y, fit_lasso(x, y, p), p.lambda));
        p.lambda = lasso_lambda_max(x, y);
        for (const double w : fit_lasso(x, y, p).weights) zero_at_max = zero_at_max && w == 0.0;
    }
    o.require(worst_kkt <= 1e-6, "lasso KKT violation " + format_double(worst_kkt));
    o.require(zero_at_max, "lasso nonzero at lambda_max");
    detail << " lasso kkt=" << worst_kkt;

    // Boosting monotone training error.
    {
        const Matrix x = random_matrix(200, 6, rng);
        std::vector<double> y;
        for (std::size_t r = 0; r < 200; ++r) y.push_back(std::sin(3 * x(r, 0)) + x(r, 1) * x(r, 2));
        BoostingParams p;
        p.tree_count = 50;
        const auto curve = boosting_training_curve(fit_boosting(x, y, p), x, y);
        bool monotone = curve.size() == 51;
        for (std::size_t t = 1; monotone && t < curve.size(); ++t) monotone = curve[t] <= curve[t - 1];
        o.require(monotone, "boosting training MSE increased");
    }

    // SVR against the zero model and a brute-force grid.
    double worst_svr_gap = 0.0;
    for (int trial = 0; trial < 4; ++trial) {
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        std::normal_distribution<double> noise(0.0, 0.5);
        std::vector<double> xs;
        std::vector<double> ys;
        Matrix x;
        for (int i = 0; i < 40; ++i) {
            xs.push_back(u(rng));
            ys.push_back(1.5 * xs.back() - 0.5 + noise(rng));
            x.push_row(std::vector<double>{xs.back()});
        }
        SvrParams p;
        p.epsilon = 0.2;
        p.epochs = 5000;
        const double objective = svr_objective(fit_svr(x, ys, p, 10 + static_cast<std::uint64_t>(trial)), x, ys, p.cost, p.epsilon);
        const double mean_y = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
        const double zero = svr_objective_1d(0, mean_y, xs, ys, p.cost, p.epsilon);
        const double brute = svr_brute_force_1d(xs, ys, p.cost, p.epsilon, -1, 4, 2500);
        o.require(objective <= zero, "SVR objective above the zero model");
        worst_svr_gap = std::max(worst_svr_gap, objective / brute - 1.0);
    }
    o.require(worst_svr_gap <= 0.01, "SVR objective " + format_fixed(100 * worst_svr_gap, 3) + "% above brute force");
    detail << " svr gap=" << std::fixed << std::setprecision(3) << 100 * worst_svr_gap << "%";

    // MLP analytic versus central-difference gradient.
    {
        const Matrix x = random_matrix(5, 4, rng);
        const std::vector<double> y{1.0, -0.5, 2.0, 0.3, 1.1};
        MlpModel m = init_mlp(4, 6, 0.2, 7);
        for (auto& b : m.b1) b = 0.3;
        const MlpGradient g = mlp_loss_gradient(m, x, y);
        double worst = 0.0;
        auto probe = [&](double& param, double analytic) {
            const double saved = param;
            param = saved + 1e-5;
            const double up = mlp_loss_gradient(m, x, y).loss;
            param = saved - 1e-5;
            const double down = mlp_loss_gradient(m, x, y).loss;
            param = saved;
            const double numeric = (up - down) / 2e-5;
            worst = std::max(worst, std::abs(numeric - analytic) / std::max(1e-6, std::max(std::abs(numeric), std::abs(analytic))));
        };
        for (std::size_t i = 0; i < m.w1.size(); ++i) probe(m.w1[i], g.w1[i]);
        for (std::size_t i = 0; i < m.b1.size(); ++i) probe(m.b1[i], g.b1[i]);
        for (std::size_t i = 0; i < m.w2.size(); ++i) probe(m.w2[i], g.w2[i]);
        probe(m.b2, g.b2);
        o.require(worst < 1e-4, "MLP gradient relative error " + format_double(worst));
        detail << " mlp rel=" << std::scientific << std::setprecision(1) << worst;
    }
    if (o.pass) o.detail = detail.str();
    return o;
}

std::string pipeline_config(int frames, double noise, std::uint64_t seed) {
    return "[paths]\nout_dir = data\nmanifest = data/manifest.csv\nscore_dir = data/scores\nfused_dir = data/fused\n"
           "feature_cache = work/features.csv\nmodel_dir = work/models\nreport_dir = work/reports\n"
           "[generate]\nframes_per_scenario_split = " +
           std::to_string(frames) + "\nnoise_std = " + format_double(noise) +
           "\n[features]\nlevels = 3\nclass_count = 19\n"
           "[train]\nsolver = ols\nridge_lambda = 1e-6\n"
           "[run]\nseed = " + std::to_string(seed) + "\n";
}

bool run(const fs::path& config, std::vector<std::string> args, std::string* failure) {
    std::vector<std::string> full{"--config", config.string()};
    full.insert(full.end(), args.begin(), args.end());
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(full, out, err);
    if (code != 0 && failure) *failure = args.front() + " exited " + std::to_string(code) + ": " + err.str();
    return code == 0;
}

/// MAE per scenario from a report CSV, keyed "regime/scenario".
std::map<std::string, double> read_report(const fs::path& path) {
    std::map<std::string, double> out;
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto f = split_csv(line);
        if (f.size() == 6) out[std::string(f[0]) + "/" + std::string(f[2])] = parse_double(f[3]).value_or(NAN);
    }
    return out;
}

struct PipelineRun {
    std::map<std::string, double> mae;
    std::string failure;
};

PipelineRun full_pipeline(const fs::path& dir, double noise) {
    PipelineRun result;
    write_file(dir / "c.ini", pipeline_config(2000, noise, 2024));
    const fs::path config = dir / "c.ini";
    const bool ok = run(config, {"generate"}, &result.failure) && run(config, {"featurize", "--jobs", "4"}, &result.failure) &&
                    run(config, {"train", "--regime", "independent"}, &result.failure) &&
                    run(config, {"evaluate", "--regime", "independent"}, &result.failure) &&
                    run(config, {"train", "--regime", "joint"}, &result.failure) &&
                    run(config, {"evaluate", "--regime", "joint"}, &result.failure);
    if (!ok) return result;
    for (const auto& regime : {"independent", "joint"}) {
        const auto part = read_report(dir / "work/reports" / (std::string("report_") + regime + "_ols.csv"));
        result.mae.insert(part.begin(), part.end());
    }
    return result;
}

PipelineRun noisy_run;

Outcome end_to_end() {
    Outcome o;
    TempDir noisy("noisy");
    noisy_run = full_pipeline(noisy.path(), 3.0);
    o.require(noisy_run.failure.empty(), noisy_run.failure);
    TempDir clean("clean");
    const PipelineRun clean_run = full_pipeline(clean.path(), 0.0);
    o.require(clean_run.failure.empty(), clean_run.failure);
    if (!o.pass) return o;
    std::ostringstream detail;
    for (const auto& s : {"urban", "highway"}) {
        const double noisy_mae = noisy_run.mae.at(std::string("independent/") + s);
        const double clean_mae = clean_run.mae.at(std::string("independent/") + s);
        o.require(noisy_mae <= 3.5, std::string(s) + " MAE " + format_fixed(noisy_mae, 3) + " > 3.5 at noise 3");
        o.require(clean_mae < 1e-6, std::string(s) + " MAE " + format_double(clean_mae) + " >= 1e-6 at noise 0");
        detail << s << " " << format_fixed(noisy_mae, 3) << " (noise 3), " << std::scientific << std::setprecision(1)
               << clean_mae << " (noise 0); ";
    }
    if (o.pass) o.detail = detail.str();
    return o;
}

Outcome regime_ordering() {
    Outcome o;
    o.require(noisy_run.failure.empty() && !noisy_run.mae.empty(), "end-to-end run unavailable");
    if (!o.pass) return o;
    std::ostringstream detail;
    for (const auto& s : {"urban", "highway"}) {
        const double ind = noisy_run.mae.at(std::string("independent/") + s);
        const double joint = noisy_run.mae.at(std::string("joint/") + s);
        o.require(ind <= joint, std::string(s) + ": independent " + format_fixed(ind, 3) + " > joint " + format_fixed(joint, 3));
        detail << s << " independent " << format_fixed(ind, 3) << " <= joint " << format_fixed(joint, 3) << "; ";
    }
    if (o.pass) o.detail = detail.str();
    return o;
}

Outcome mae_unit() {
    Outcome o;
    std::mt19937_64 rng(1004);
    std::uniform_real_distribution<double> u(0.0, 140.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 1 + rng() % 200;
        std::vector<double> p(k);
        std::vector<double> t(k);
        for (std::size_t i = 0; i < k; ++i) {
            p[i] = u(rng);
            t[i] = u(rng);
        }
        long double direct = 0.0L;
        for (std::size_t i = 0; i < k; ++i) direct += std::fabs(static_cast<long double>(t[i]) - static_cast<long double>(p[i]));
        direct /= static_cast<long double>(k);
        worst = std::max(worst, std::abs(mae(p, t) - static_cast<double>(direct)));
        o.require(mae(t, t) == 0.0, "non-zero MAE for identical inputs");
    }
    o.require(worst <= 1e-12, "max deviation " + format_double(worst));
    if (o.pass) o.detail = "100 vectors, max deviation " + format_double(worst);
    return o;
}

/// Relative path -> bytes for every regular file under `root`.
std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) files[fs::relative(entry.path(), root).string()] = read_file(entry.path());
    }
    return files;
}

Outcome determinism() {
    Outcome o;
    TempDir a("det_a");
    TempDir b("det_b");
    std::size_t file_count = 0;
    for (const TempDir* dir : {&a, &b}) {
        write_file(*dir / "c.ini", pipeline_config(200, 3.0, 99));
        const fs::path config = *dir / "c.ini";
        std::string failure;
        const bool ok = run(config, {"generate"}, &failure) && run(config, {"featurize"}, &failure) &&
                        run(config, {"train"}, &failure) && run(config, {"evaluate"}, &failure);
        o.require(ok, failure);
    }
    if (!o.pass) return o;
    auto sa = snapshot(a.path());
    auto sb = snapshot(b.path());
    o.require(sa.size() == sb.size(), "different file sets");
    for (const auto& [name, bytes] : sa) {
        const auto it = sb.find(name);
        o.require(it != sb.end() && it->second == bytes, "artifact differs: " + name);
        ++file_count;
    }
    if (o.pass) o.detail = std::to_string(file_count) + " artifacts byte-identical";
    return o;
}

}  // namespace

int main() {
    report("descriptor correctness", 1.0, descriptor_correctness);
    report("fusion correctness", 1.0, fusion_correctness);
    report("solver oracles", 30.0, solver_oracles);
    report("end-to-end planted recovery", 120.0, end_to_end);
    report("regime ordering", 0.0, regime_ordering);
    report("mae unit", 0.0, mae_unit);
    report("determinism", 0.0, determinism);
    std::printf("%d of 7 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

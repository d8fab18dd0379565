// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance <tecator.csv> [output dir for the experiment reports]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nnal/error.hpp"
#include "nnal/harness.hpp"
#include "nnal/pca.hpp"
#include "nnal/text.hpp"
#include "oracles.hpp"

using namespace nnal;
namespace fs = std::filesystem;

namespace {

constexpr double kTarget = 3.5;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string show(std::optional<std::size_t> n) { return n ? std::to_string(*n) : std::string("none"); }

std::size_t or_infinite(std::optional<std::size_t> n) {
    return n.value_or(std::numeric_limits<std::size_t>::max());
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Eigen::MatrixXd to_eigen(const oracle::Matrix& m) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.empty() ? 0 : m[0].size()));
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m[i].size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j];
    }
    return out;
}

// Criterion 1 ---------------------------------------------------------------

bool gradients_agree(std::string& detail) {
    for (Seed seed = 1; seed <= 10; ++seed) {
        for (const auto& arch : {Architecture::prediction(10), Architecture::inversion()}) {
            auto net = init_network(arch, seed);
            Rng rng(seed * 7);
            for (long i = 0; i < net.input_scaler.shift.size(); ++i) {
                net.input_scaler.shift(i) = rng.uniform(-1.0, 1.0);
                net.input_scaler.scale(i) = rng.uniform(0.5, 2.0);
            }
            net.output_scaler.shift(0) = rng.uniform(10.0, 20.0);
            net.output_scaler.scale(0) = rng.uniform(5.0, 10.0);
            const auto inputs = oracle::random_matrix(8, arch.input_size(), seed * 11, -2.0, 2.0);
            const auto targets = oracle::random_matrix(8, 1, seed * 13, 0.0, 40.0);
            const auto analytic = flatten_parameters(gradient(net, {to_eigen(inputs), to_eigen(targets)}));
            const auto numeric = oracle::finite_difference_gradient(net, inputs, targets, 1e-5);
            for (std::size_t i = 0; i < analytic.size(); ++i) {
                const double diff = std::abs(analytic[i] - numeric[i]);
                if (diff > 1e-8 && diff > 1e-5 * std::abs(numeric[i])) {
                    detail = "gradient mismatch at seed " + std::to_string(seed);
                    return false;
                }
            }
        }
    }
    return true;
}

bool pca_agrees(std::string& detail) {
    for (Seed seed = 1; seed <= 10; ++seed) {
        const auto rows = oracle::random_matrix(30, 12, seed);
        const auto model = fit_pca(to_eigen(rows), 4);
        const Eigen::MatrixXd gram = model.components * model.components.transpose();
        if ((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() > 1e-8) {
            detail = "components not orthonormal at seed " + std::to_string(seed);
            return false;
        }
        const auto expected = oracle::top_eigenvalues(oracle::covariance(rows), 4);
        for (std::size_t i = 0; i < 4; ++i) {
            const double got = model.explained_variance(static_cast<Eigen::Index>(i));
            if (std::abs(got - expected[i]) > 1e-6 * std::abs(expected[i])) {
                detail = "eigenvalue mismatch at seed " + std::to_string(seed);
                return false;
            }
        }
    }
    return true;
}

bool bootstrap_fraction(std::string& detail) {
    constexpr std::size_t n = 200;
    double total = 0.0;
    for (Seed s = 0; s < 10000; ++s) {
        const auto idx = bootstrap_indices(n, derive_seed(77, s));
        total += static_cast<double>(std::set<std::size_t>(idx.begin(), idx.end()).size()) / n;
    }
    const double mean = total / 10000.0;
    detail = "distinct fraction " + text::format_number(mean);
    return std::abs(mean - 0.632) <= 0.01;
}

SampleSet candidates_with(const std::vector<double>& fats, SampleId first_id) {
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < fats.size(); ++i) {
        samples.push_back({first_id + static_cast<SampleId>(i), std::vector<double>(kSpectrumChannels, 0.0), fats[i], {}, {}});
    }
    return SampleSet(std::move(samples), "acceptance");
}

bool selectors_agree(std::string& detail) {
    for (Seed seed = 1; seed <= 10; ++seed) {
        InversionModel model{init_network(Architecture::inversion(), seed)};
        Rng rng(seed + 50);
        model.network.layers[0].biases << rng.uniform(-1, 1), rng.uniform(-1, 1);
        model.network.input_scaler.shift(0) = 25.0;
        model.network.input_scaler.scale(0) = 12.0;
        std::vector<double> fats;
        for (int i = 0; i < 20; ++i) fats.push_back(rng.uniform(0.0, 60.0));
        const auto cands = candidates_with(fats, 100);
        std::vector<double> scores;
        for (double f : fats) scores.push_back(oracle::forward(model.network, {f})[0]);
        const auto expected = oracle::best_subset(scores, cands.ids(), 5);
        const auto got = select_active(model, cands, 5).chosen_ids;
        if (std::set<SampleId>(got.begin(), got.end()) != std::set<SampleId>(expected.begin(), expected.end())) {
            detail = "active selection differs from subset enumeration at seed " + std::to_string(seed);
            return false;
        }
    }
    for (Seed seed = 1; seed <= 40; ++seed) {
        Rng rng(seed);
        std::vector<double> train_fats, cand_fats;
        for (std::size_t i = 0; i < 1 + seed % 4; ++i) train_fats.push_back(std::round(rng.uniform(0.0, 50.0)));
        for (std::size_t i = 0; i < 1 + seed % 5; ++i) cand_fats.push_back(std::round(rng.uniform(0.0, 50.0)));
        const auto cands = candidates_with(cand_fats, 10);
        const std::size_t n0 = 1 + (seed / 5) % 5;
        if (select_spacefill(candidates_with(train_fats, 500), cands, n0).chosen_ids !=
            oracle::spacefill_sequence(train_fats, cand_fats, cands.ids(), n0)) {
            detail = "spacefill differs from brute force at seed " + std::to_string(seed);
            return false;
        }
    }
    return true;
}

bool reruns_identical(std::string& detail) {
    const auto data = oracle::synthetic_samples(110, 31);
    ExperimentConfig cfg;
    cfg.val_size = 20;
    cfg.init_sizes = {30};
    cfg.batch_size = 15;
    cfg.ensemble_size = 4;
    cfg.repeats = 2;
    cfg.pca_k = 4;
    cfg.prediction_train.max_epochs = 15;
    const auto base = fs::temp_directory_path() / "nnal_acceptance_determinism";
    fs::remove_all(base);
    write_report(run_experiment(cfg, data), base / "a");
    cfg.threads = 3;
    write_report(run_experiment(cfg, data), base / "b");
    for (const char* name : {"curves.csv", "curves_avg.csv", "selections.csv"}) {
        if (slurp(base / "a" / name) != slurp(base / "b" / name)) {
            detail = std::string(name) + " differs between reruns";
            return false;
        }
    }
    fs::remove_all(base);
    return true;
}

Outcome property_suite() {
    const auto start = std::chrono::steady_clock::now();
    Outcome out{true, ""};
    std::string boot;
    const std::pair<const char*, bool (*)(std::string&)> checks[] = {
        {"gradients", gradients_agree}, {"pca", pca_agrees},     {"bootstrap", bootstrap_fraction},
        {"selectors", selectors_agree}, {"determinism", reruns_identical}};
    for (const auto& [name, check] : checks) {
        std::string detail;
        bool ok = false;
        try {
            ok = check(detail);
        } catch (const std::exception& e) {
            detail = e.what();
        }
        if (std::string(name) == "bootstrap") boot = detail;
        if (!ok) {
            out.pass = false;
            out.detail += std::string(out.detail.empty() ? "" : "; ") + name + ": " + detail;
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out.pass) out.detail = "all checks agree (" + boot + ")";
    out.detail += "; " + text::format_number(std::round(secs * 10) / 10) + " s";
    if (secs >= 60.0) out.pass = false;
    return out;
}

// Experiments ---------------------------------------------------------------

LearningCurve run_and_save(const ExperimentConfig& cfg, const SampleSet& data, const std::optional<fs::path>& out,
                           const std::string& name) {
    const auto start = std::chrono::steady_clock::now();
    auto curve = run_experiment(cfg, data);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "experiment %s finished in %.0f s\n", name.c_str(), secs);
    if (out) write_report(curve, *out / name);
    return curve;
}

ExperimentConfig base_config() {
    ExperimentConfig cfg;
    cfg.ensemble_size = 100;
    cfg.repeats = 5;
    cfg.target_rmse = kTarget;
    return cfg;
}

Outcome headline(const LearningCurve& curve) {
    std::size_t wins = 0;
    std::string paired;
    for (std::size_t r = 0; r < 5; ++r) {
        const auto a = samples_to_target(run_points(curve.rows, Strategy::active, 80, r), kTarget);
        const auto b = samples_to_target(run_points(curve.rows, Strategy::random, 80, r), kTarget);
        if (a && or_infinite(a) < or_infinite(b)) ++wins;
        paired += (r ? " " : "") + show(a) + "/" + show(b);
    }
    const auto avg = average_curves(curve.rows);
    const auto active = samples_to_target(averaged_points(avg, Strategy::active, 80), kTarget);
    const auto random = samples_to_target(averaged_points(avg, Strategy::random, 80), kTarget);
    const bool in_range = active && *active >= 120 && *active <= 175;
    return {wins >= 4 && in_range, "active wins " + std::to_string(wins) + "/5 paired repeats (active/random: " +
                                       paired + "); averaged samples_to_target active " + show(active) +
                                       ", random " + show(random) + ", required in [120, 175]"};
}

Outcome convergence(const LearningCurve& curve) {
    const auto avg = average_curves(curve.rows);
    const auto a = averaged_points(avg, Strategy::active, 80);
    const auto b = averaged_points(avg, Strategy::random, 80);
    if (a.empty() || b.empty() || a.back().n_train != b.back().n_train) return {false, "curves end at different sizes"};
    const double diff = std::abs(a.back().rmse - b.back().rmse);
    return {diff < 0.5, "at n_train " + std::to_string(a.back().n_train) + ": active " +
                            text::format_number(a.back().rmse) + ", random " + text::format_number(b.back().rmse) +
                            ", |diff| " + text::format_number(diff) + " (< 0.5)"};
}

Outcome large_batch(const LearningCurve& curve) {
    const auto avg = average_curves(curve.rows);
    bool all = true;
    std::string detail;
    for (std::size_t init : {40u, 80u}) {
        const auto a = samples_to_target(averaged_points(avg, Strategy::active, init), kTarget);
        const auto b = samples_to_target(averaged_points(avg, Strategy::random, init), kTarget);
        const bool ok = a && or_infinite(a) < or_infinite(b);
        all = all && ok;
        detail += (detail.empty() ? "" : "; ") + std::string("init ") + std::to_string(init) + ": active " + show(a) +
                  ", random " + show(b) + (ok ? " ok" : " not met");
    }
    return {all, detail};
}

Outcome spacefill(const LearningCurve& curve) {
    const auto avg = average_curves(curve.rows);
    const auto a = samples_to_target(averaged_points(avg, Strategy::active, 80), kTarget);
    const auto s = samples_to_target(averaged_points(avg, Strategy::spacefill, 80), kTarget);
    const bool ok = a && (!s || *a <= *s + 10);
    return {ok, "active " + show(a) + ", spacefill " + show(s) + " (active <= spacefill + 10)"};
}

Outcome sample_trend(const LearningCurve& curve) {
    std::size_t satisfied = 0;
    std::string detail;
    for (std::size_t r = 0; r < 5; ++r) {
        std::vector<const CurveRow*> rows;
        for (const auto& row : curve.rows) {
            if (row.strategy == Strategy::active && row.init_size == 80 && row.repeat == r && row.iteration > 0) {
                rows.push_back(&row);
            }
        }
        std::sort(rows.begin(), rows.end(), [](auto* x, auto* y) { return x->iteration < y->iteration; });
        double chosen = 0.0, buffer = 0.0;
        std::size_t count = 0;
        for (const auto* row : rows) {
            for (std::size_t i = 0; i < row->chosen_fats.size() && count < 20; ++i, ++count) {
                chosen += row->chosen_fats[i];
                buffer += row->buffer_mean_fat;
            }
            if (count == 20) break;
        }
        if (count == 0) continue;
        chosen /= static_cast<double>(count);
        buffer /= static_cast<double>(count);
        if (chosen > buffer) ++satisfied;
        detail += (r ? " " : "") + text::format_number(std::round(chosen * 100) / 100) + ">" +
                  text::format_number(std::round(buffer * 100) / 100);
    }
    return {satisfied >= 3, std::to_string(satisfied) + "/5 repeats pick fatter samples first (chosen>buffer: " +
                                detail + ")"};
}

void report(int number, const Outcome& o, const char* fail_word = "FAIL") {
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : fail_word, number, o.detail.c_str());
    std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <tecator.csv> [report dir]\n", argv[0]);
        return 2;
    }
    std::optional<fs::path> out;
    if (argc > 2) out = argv[2];

    bool ok = true;
    const auto props = property_suite();
    report(1, props);
    ok = ok && props.pass;

    try {
        const auto data = load_samples(fs::path(argv[1]));

        auto headline_cfg = base_config();
        headline_cfg.init_sizes = {80};
        headline_cfg.batch_size = 5;
        const auto main_curve = run_and_save(headline_cfg, data, out, "init80_n5");
        for (const auto& [number, outcome] :
             {std::pair{2, headline(main_curve)}, std::pair{3, convergence(main_curve)}}) {
            report(number, outcome);
            ok = ok && outcome.pass;
        }

        auto batch_cfg = base_config();
        batch_cfg.init_sizes = {40, 80};
        batch_cfg.batch_size = 20;
        const auto batch = large_batch(run_and_save(batch_cfg, data, out, "n20"));
        report(4, batch);
        ok = ok && batch.pass;

        auto fill_cfg = base_config();
        fill_cfg.init_sizes = {80};
        fill_cfg.init_method = InitMethod::spacefill;
        fill_cfg.strategies = {Strategy::active, Strategy::spacefill};
        const auto fill = spacefill(run_and_save(fill_cfg, data, out, "spacefill80_n5"));
        // A miss here is recorded as a deviation and does not fail the suite.
        report(5, fill, "DEVIATION");

        const auto trend = sample_trend(main_curve);
        report(6, trend);
        ok = ok && trend.pass;
    } catch (const std::exception& e) {
        std::printf("FAIL experiments: %s\n", e.what());
        return 1;
    }
    return ok ? 0 : 1;
}

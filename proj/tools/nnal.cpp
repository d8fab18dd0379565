#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nnal/error.hpp"
#include "nnal/harness.hpp"
#include "nnal/text.hpp"

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    for (auto part : nnal::text::split(text, ',')) {
        const auto item = nnal::text::trim(part);
        if (!item.empty()) out.emplace_back(item);
    }
    return out;
}

void add_train_options(CLI::App* cmd, nnal::TrainConfig& cfg, const std::string& prefix, const std::string& what) {
    cmd->add_option("--" + prefix + "epochs", cfg.max_epochs, what + " epoch cap")->capture_default_str();
    cmd->add_option("--" + prefix + "learning-rate", cfg.learning_rate, what + " learning rate")
        ->capture_default_str();
    cmd->add_option("--" + prefix + "momentum", cfg.momentum, what + " momentum")->capture_default_str();
    cmd->add_option("--" + prefix + "patience", cfg.early_stop_patience, what + " early-stopping patience (epochs)")
        ->capture_default_str();
    cmd->add_option("--" + prefix + "holdout", cfg.holdout_fraction, what + " early-stopping holdout fraction")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble-based active learning for NIR multivariate calibration"};
    app.require_subcommand(1);

    nnal::ExperimentConfig cfg;
    std::string strategies = "active,random";
    std::string init_sizes = "80";
    std::string init_method = "random";
    std::string pca_refit = "each_iteration";
    std::string disagreement = "std";
    double target = 3.5;
    bool no_target = false;
    bool quiet = false;
    std::string out_dir;

    auto* run = app.add_subcommand("run", "run the selection experiment and write CSV curves");
    run->add_option("--data", cfg.data_path, "samples CSV (id,ch000..ch099,moisture,fat,protein)")->required();
    run->add_option("--strategies", strategies, "comma list of active,random,spacefill")->capture_default_str();
    run->add_option("--init-size", init_sizes, "initial training size(s), comma separated")->capture_default_str();
    run->add_option("--init-method", init_method, "random or spacefill")->capture_default_str();
    run->add_option("--batch", cfg.batch_size, "samples added per iteration")->capture_default_str();
    run->add_option("--ensemble", cfg.ensemble_size, "networks per ensemble")->capture_default_str();
    run->add_option("--repeats", cfg.repeats, "repeats over random initial sets")->capture_default_str();
    run->add_option("--seed", cfg.master_seed, "master seed")->capture_default_str();
    run->add_option("--val-size", cfg.val_size, "validation set size")->capture_default_str();
    run->add_option("--pca-k", cfg.pca_k, "principal components fed to the networks")->capture_default_str();
    run->add_option("--pca-refit", pca_refit, "each_iteration or initial_only")->capture_default_str();
    run->add_option("--disagreement", disagreement, "std or var")->capture_default_str();
    run->add_option("--target-rmse", target, "validation RMSE target")->capture_default_str();
    run->add_flag("--no-target", no_target, "do not record a target RMSE");
    run->add_flag("--stop-at-target", cfg.stop_at_target, "end each run once the target is reached");
    run->add_option("--threads", cfg.threads, "threads for ensemble training")->capture_default_str();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_flag("-q,--quiet", quiet, "no progress output");
    add_train_options(run, cfg.prediction_train, "", "prediction network");
    add_train_options(run, cfg.inversion_train, "inv-", "inversion network");

    std::string in_dir;
    std::optional<double> report_target;
    auto* report = app.add_subcommand("report", "summarize samples-to-target from a run directory");
    report->add_option("--in", in_dir, "directory written by `run`")->required();
    report->add_option("--target", report_target, "target RMSE (default: the run's recorded target)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            cfg.strategies.clear();
            for (const auto& s : split_list(strategies)) cfg.strategies.push_back(nnal::parse_strategy(s));
            cfg.init_sizes.clear();
            for (const auto& s : split_list(init_sizes)) {
                const auto v = nnal::text::parse_long(s);
                if (!v || *v <= 0) throw nnal::ParseError("invalid --init-size '" + s + "'");
                cfg.init_sizes.push_back(static_cast<std::size_t>(*v));
            }
            cfg.init_method = nnal::parse_init_method(init_method);
            cfg.pca_refit = nnal::parse_pca_refit(pca_refit);
            if (disagreement == "std") {
                cfg.disagreement = nnal::DisagreementMetric::std_dev;
            } else if (disagreement == "var") {
                cfg.disagreement = nnal::DisagreementMetric::variance;
            } else {
                throw nnal::ParseError("--disagreement must be std or var");
            }
            cfg.target_rmse = no_target ? std::nullopt : std::optional<double>(target);

            auto progress = [quiet](const nnal::CurveRow& row) {
                if (quiet) return;
                std::cerr << nnal::to_string(row.strategy) << " init=" << row.init_size << " repeat=" << row.repeat
                          << " iter=" << row.iteration << " n=" << row.n_train
                          << " rmse=" << nnal::text::format_number(row.rmse_val) << '\n';
            };
            const auto curve = nnal::run_experiment(cfg, progress);
            nnal::write_report(curve, out_dir);
            if (cfg.target_rmse) {
                std::cout << nnal::comparison_table(nnal::average_curves(curve.rows), *cfg.target_rmse);
            }
        } else if (report->parsed()) {
            const std::filesystem::path dir(in_dir);
            const auto rows = nnal::read_curves(dir / "curves.csv");
            if (rows.empty()) throw nnal::SizeError("no curve rows in " + (dir / "curves.csv").string());
            double t = 3.5;
            if (report_target) {
                t = *report_target;
            } else if (std::filesystem::exists(dir / "metadata.txt")) {
                for (const auto& [key, value] : nnal::read_metadata(dir / "metadata.txt")) {
                    if (key == "target_rmse" && value != "none") {
                        if (auto v = nnal::text::parse_double(value)) t = *v;
                    }
                }
            }
            std::cout << nnal::comparison_table(nnal::average_curves(rows), t);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nnal/active_learning.hpp"
#include "nnal/dataset.hpp"
#include "nnal/metrics.hpp"

namespace nnal {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
    std::filesystem::path data_path;
    std::size_t val_size = 40;
    std::vector<std::size_t> init_sizes{20, 40, 80};
    InitMethod init_method = InitMethod::random;
    std::size_t batch_size = 5;
    std::size_t ensemble_size = 100;
    std::size_t repeats = 5;
    std::vector<Strategy> strategies{Strategy::active, Strategy::random};
    Seed master_seed = 42;
    std::size_t pca_k = 10;
    PcaRefit pca_refit = PcaRefit::each_iteration;
    DisagreementMetric disagreement = DisagreementMetric::std_dev;
    std::optional<double> target_rmse = 3.5;
    bool stop_at_target = false;  // otherwise the target only feeds the report
    TrainConfig prediction_train{};
    TrainConfig inversion_train{.max_epochs = kInversionMaxEpochs};
    std::size_t threads = 1;

    /// Throws StateError/SizeError for settings that cannot run on `dataset_size` samples.
    void validate(std::size_t dataset_size) const;
};

struct CurveRow {
    Strategy strategy = Strategy::active;
    std::size_t init_size = 0;
    std::size_t repeat = 0;
    std::size_t iteration = 0;
    std::size_t n_train = 0;
    double rmse_val = 0.0;
    double buffer_mean_fat = 0.0;
    std::vector<SampleId> chosen_ids;
    std::vector<double> chosen_fats;
};

/// Starting point of one (init size, repeat, strategy) run.
struct RunStart {
    std::size_t init_size = 0;
    std::size_t repeat = 0;
    Strategy strategy = Strategy::active;
    std::vector<SampleId> validation_ids;
    std::vector<SampleId> training_ids;
};

struct LearningCurve {
    std::vector<CurveRow> rows;  // sorted by (init size, strategy, repeat, iteration)
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<RunStart> starts;
};

/// Pointwise mean and population std over repeats at equal n_train.
struct AverageRow {
    Strategy strategy = Strategy::active;
    std::size_t init_size = 0;
    std::size_t n_train = 0;
    std::size_t repeats = 0;
    double rmse_mean = 0.0;
    double rmse_std = 0.0;
};

struct CurvePoint {
    std::size_t n_train = 0;
    double rmse = 0.0;
};

using ProgressFn = std::function<void(const CurveRow&)>;

LearningCurve run_experiment(const ExperimentConfig& config, const SampleSet& data, const ProgressFn& progress = {});
LearningCurve run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

std::vector<AverageRow> average_curves(std::span<const CurveRow> rows);

/// Points of one (strategy, init size), averaged over repeats, ordered by n_train.
std::vector<CurvePoint> averaged_points(std::span<const AverageRow> rows, Strategy strategy, std::size_t init_size);
/// Points of a single run.
std::vector<CurvePoint> run_points(std::span<const CurveRow> rows, Strategy strategy, std::size_t init_size,
                                   std::size_t repeat);

/// Smallest n_train with rmse <= target, scanning in n_train order.
std::optional<std::size_t> samples_to_target(std::span<const CurvePoint> points, double target);

/// Writes curves.csv, curves_avg.csv, selections.csv and metadata.txt into `dir`.
void write_report(const LearningCurve& curve, const std::filesystem::path& dir);

/// Reads back the rows of a curves.csv file.
std::vector<CurveRow> read_curves(const std::filesystem::path& path);
std::vector<std::pair<std::string, std::string>> read_metadata(const std::filesystem::path& path);

/// Human-readable samples-to-target table, one line per (init size, strategy).
std::string comparison_table(std::span<const AverageRow> rows, double target);

}  // namespace nnal

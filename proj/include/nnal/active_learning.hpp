#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nnal/dataset.hpp"
#include "nnal/ensemble.hpp"
#include "nnal/neuralnet.hpp"
#include "nnal/random.hpp"

namespace nnal {

/// Maps fat concentration to predicted ensemble disagreement (1-2-1 network).
struct InversionModel {
    Network network;
};

/// Epoch cap applied to every inversion-model training.
inline constexpr std::size_t kInversionMaxEpochs = 20;

struct UncertaintyObservation {
    double fat = 0.0;
    double disagreement = 0.0;
};

enum class Strategy { active, random, spacefill };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& text);

struct SelectionResult {
    std::vector<SampleId> chosen_ids;  // in selection order
    std::vector<double> scores;        // per candidate, candidate order; empty for random
};

InversionModel train_inversion(std::span<const UncertaintyObservation> observations, TrainConfig config);

std::vector<double> predict_uncertainty(const InversionModel& model, std::span<const double> fats);

/// Indices of the `k` largest scores, highest first; equal scores go to the lower id.
std::vector<std::size_t> top_k(std::span<const double> scores, std::span<const SampleId> ids, std::size_t k);

SelectionResult select_active(const InversionModel& model, const SampleSet& candidates, std::size_t n0);
SelectionResult select_random(const SampleSet& candidates, std::size_t n0, Seed seed);
/// Greedy maximin in fat: each pick maximizes the distance to training plus earlier picks.
/// `scores` holds each candidate's distance to the training set before any pick.
SelectionResult select_spacefill(const SampleSet& training, const SampleSet& candidates, std::size_t n0);

/// Deployment mode: scores an equispaced fat grid and returns the n0 grid
/// concentrations with the highest predicted uncertainty.
struct FatGrid {
    double lo = 0.0;
    double hi = 100.0;
    double step = 0.5;
};
std::vector<double> suggest_concentrations(const InversionModel& model, std::size_t n0, const FatGrid& grid = {});

enum class PcaRefit { each_iteration, initial_only };

PcaRefit parse_pca_refit(const std::string& text);
std::string to_string(PcaRefit mode);

struct LoopConfig {
    std::size_t batch_size = 5;  // n0
    std::size_t ensemble_size = 100;
    TrainConfig prediction_train{};
    TrainConfig inversion_train{.max_epochs = kInversionMaxEpochs};
    std::size_t pca_k = 10;
    PcaRefit pca_refit = PcaRefit::each_iteration;
    DisagreementMetric disagreement = DisagreementMetric::std_dev;
    std::optional<double> target_rmse;  // stop once validation RMSE <= target
    Seed seed = 0;
    std::size_t threads = 1;
};

/// One evaluated training set. `chosen_*` are the samples added just before
/// this evaluation (empty for the initial point).
struct IterationRecord {
    std::size_t iteration = 0;
    std::size_t n_train = 0;
    double rmse_val = 0.0;
    std::vector<SampleId> chosen_ids;
    std::vector<double> chosen_fats;
    double buffer_mean_fat = 0.0;  // mean fat of the buffer the chosen samples were drawn from
};

struct LoopResult {
    std::vector<IterationRecord> records;
    Partition final_partition;
};

/// Called after every evaluation; lets callers log progress.
using LoopObserver = std::function<void(const IterationRecord&)>;

/// Sequential selection loop: evaluate, select, move, repeat until the buffer
/// is empty or the target RMSE is reached.
LoopResult run_loop(const Partition& partition, Strategy strategy, const LoopConfig& config,
                    const LoopObserver& observer = {});

}  // namespace nnal

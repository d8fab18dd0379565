#include "nnal/active_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nnal/error.hpp"
#include "nnal/metrics.hpp"
#include "nnal/pca.hpp"

namespace nnal {

namespace {

Eigen::MatrixXd spectra_matrix(const SampleSet& set) {
    if (set.empty()) return {};
    const auto channels = static_cast<Eigen::Index>(set[0].spectrum.size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(set.size()), channels);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& s = set[i].spectrum;
        if (static_cast<Eigen::Index>(s.size()) != channels) {
            throw DimensionError("sample " + std::to_string(set[i].id) + " has a spectrum of a different length");
        }
        m.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(s.data(), channels);
    }
    return m;
}

void require_batch(std::size_t n0) {
    if (n0 == 0) throw SizeError("selection batch size must be at least 1");
}

double mean_of(std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::active: return "active";
        case Strategy::random: return "random";
        case Strategy::spacefill: return "spacefill";
    }
    return "unknown";
}

Strategy parse_strategy(const std::string& text) {
    if (text == "active") return Strategy::active;
    if (text == "random") return Strategy::random;
    if (text == "spacefill") return Strategy::spacefill;
    throw ParseError("unknown strategy '" + text + "' (expected active, random or spacefill)");
}

PcaRefit parse_pca_refit(const std::string& text) {
    if (text == "each_iteration") return PcaRefit::each_iteration;
    if (text == "initial_only") return PcaRefit::initial_only;
    throw ParseError("unknown PCA refit mode '" + text + "' (expected each_iteration or initial_only)");
}

std::string to_string(PcaRefit mode) {
    return mode == PcaRefit::each_iteration ? "each_iteration" : "initial_only";
}

InversionModel train_inversion(std::span<const UncertaintyObservation> observations, TrainConfig config) {
    if (observations.size() < 4) {
        throw SizeError("inversion model needs at least 4 observations, got " + std::to_string(observations.size()));
    }
    const auto n = static_cast<Eigen::Index>(observations.size());
    TrainingData data{Eigen::MatrixXd(n, 1), Eigen::MatrixXd(n, 1)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& o = observations[static_cast<std::size_t>(i)];
        if (!std::isfinite(o.fat) || !std::isfinite(o.disagreement) || o.disagreement < 0.0) {
            throw NumericalError("inversion observation " + std::to_string(i) +
                                 " needs a finite fat and a finite nonnegative disagreement");
        }
        data.inputs(i, 0) = o.fat;
        data.targets(i, 0) = o.disagreement;
    }
    config.max_epochs = std::min(config.max_epochs, kInversionMaxEpochs);
    const Seed seed = config.seed;
    config.seed = derive_seed(seed, 2);
    return {train(init_network(Architecture::inversion(), derive_seed(seed, 1)), data, config).network};
}

std::vector<double> predict_uncertainty(const InversionModel& model, std::span<const double> fats) {
    if (fats.empty()) return {};
    Eigen::MatrixXd inputs(static_cast<Eigen::Index>(fats.size()), 1);
    for (std::size_t i = 0; i < fats.size(); ++i) {
        if (!std::isfinite(fats[i])) throw NumericalError("non-finite fat value at position " + std::to_string(i));
        inputs(static_cast<Eigen::Index>(i), 0) = fats[i];
    }
    const Eigen::MatrixXd out = forward_rows(model.network, inputs);
    return {out.col(0).data(), out.col(0).data() + out.rows()};
}

std::vector<std::size_t> top_k(std::span<const double> scores, std::span<const SampleId> ids, std::size_t k) {
    if (scores.size() != ids.size()) throw DimensionError("top_k needs one id per score");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    k = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return ids[a] < ids[b];
                      });
    order.resize(k);
    return order;
}

SelectionResult select_active(const InversionModel& model, const SampleSet& candidates, std::size_t n0) {
    require_batch(n0);
    SelectionResult result;
    if (candidates.empty()) return result;
    result.scores = predict_uncertainty(model, candidates.fats());
    const auto ids = candidates.ids();
    for (std::size_t pos : top_k(result.scores, ids, n0)) result.chosen_ids.push_back(ids[pos]);
    return result;
}

SelectionResult select_random(const SampleSet& candidates, std::size_t n0, Seed seed) {
    require_batch(n0);
    SelectionResult result;
    Rng rng(seed);
    for (std::size_t pos : rng.sample_without_replacement(candidates.size(), std::min(n0, candidates.size()))) {
        result.chosen_ids.push_back(candidates[pos].id);
    }
    return result;
}

SelectionResult select_spacefill(const SampleSet& training, const SampleSet& candidates, std::size_t n0) {
    require_batch(n0);
    if (training.empty()) throw SizeError("space-filling selection needs a non-empty training set");
    SelectionResult result;
    if (candidates.empty()) return result;

    std::vector<double> distance(candidates.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        for (const auto& t : training) distance[i] = std::min(distance[i], std::abs(candidates[i].fat - t.fat));
    }
    result.scores = distance;

    std::vector<bool> taken(candidates.size(), false);
    const std::size_t picks = std::min(n0, candidates.size());
    for (std::size_t p = 0; p < picks; ++p) {
        std::size_t best = candidates.size();
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (taken[i]) continue;
            if (best == candidates.size() || distance[i] > distance[best] ||
                (distance[i] == distance[best] && candidates[i].id < candidates[best].id)) {
                best = i;
            }
        }
        taken[best] = true;
        result.chosen_ids.push_back(candidates[best].id);
        const double fat = candidates[best].fat;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            distance[i] = std::min(distance[i], std::abs(candidates[i].fat - fat));
        }
    }
    return result;
}

std::vector<double> suggest_concentrations(const InversionModel& model, std::size_t n0, const FatGrid& grid) {
    require_batch(n0);
    if (!(grid.step > 0.0) || grid.hi < grid.lo) throw SizeError("fat grid needs lo <= hi and a positive step");
    std::vector<double> fats;
    const auto count = static_cast<std::size_t>(std::floor((grid.hi - grid.lo) / grid.step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) fats.push_back(grid.lo + static_cast<double>(i) * grid.step);
    const auto scores = predict_uncertainty(model, fats);
    std::vector<SampleId> positions(fats.size());
    std::iota(positions.begin(), positions.end(), SampleId{0});
    std::vector<double> out;
    for (std::size_t pos : top_k(scores, positions, n0)) out.push_back(fats[pos]);
    return out;
}

LoopResult run_loop(const Partition& partition, Strategy strategy, const LoopConfig& config,
                    const LoopObserver& observer) {
    partition.check_invariants();
    if (partition.training.empty()) throw StateError("selection loop needs an initial training set");
    if (partition.validation.empty()) throw SizeError("selection loop needs a non-empty validation set");
    require_batch(config.batch_size);

    LoopResult result;
    Partition current = partition;
    PcaFeatures pca;
    bool have_pca = false;
    IterationRecord pending;

    for (std::size_t iteration = 0;; ++iteration) {
        try {
            const Seed iteration_seed = derive_seed(config.seed, iteration);
            const Eigen::MatrixXd train_spectra = spectra_matrix(current.training);
            if (!have_pca || config.pca_refit == PcaRefit::each_iteration) {
                pca = PcaFeatures(train_spectra, config.pca_k, static_cast<long>(iteration));
                have_pca = true;
            }
            const Eigen::MatrixXd features = pca.features(train_spectra);
            const std::vector<double> fats = current.training.fats();

            EnsembleOptions options;
            options.architecture = Architecture::prediction(config.pca_k);
            options.threads = config.threads;
            options.pca_epoch = pca.epoch();
            const Ensemble ensemble = train_ensemble(features, fats, config.ensemble_size, config.prediction_train,
                                                     derive_seed(iteration_seed, 1), options);

            std::vector<double> predicted;
            for (const auto& p : predict_rows(ensemble, pca.features(spectra_matrix(current.validation)))) {
                predicted.push_back(p.mean);
            }
            pending.iteration = iteration;
            pending.n_train = current.training.size();
            pending.rmse_val = rmse(predicted, current.validation.fats());
            result.records.push_back(pending);
            if (observer) observer(pending);

            if (current.buffer.empty() || (config.target_rmse && pending.rmse_val <= *config.target_rmse)) break;

            SelectionResult selection;
            switch (strategy) {
                case Strategy::active: {
                    std::vector<UncertaintyObservation> observations;
                    const auto in_sample = predict_rows(ensemble, features, config.disagreement);
                    for (std::size_t i = 0; i < fats.size(); ++i) {
                        observations.push_back({fats[i], in_sample[i].disagreement});
                    }
                    TrainConfig inversion = config.inversion_train;
                    inversion.seed = derive_seed(iteration_seed, 2);
                    selection = select_active(train_inversion(observations, inversion), current.buffer,
                                              config.batch_size);
                    break;
                }
                case Strategy::random:
                    selection = select_random(current.buffer, config.batch_size, derive_seed(iteration_seed, 3));
                    break;
                case Strategy::spacefill:
                    selection = select_spacefill(current.training, current.buffer, config.batch_size);
                    break;
            }

            pending = IterationRecord{};
            pending.buffer_mean_fat = mean_of(current.buffer.fats());
            pending.chosen_ids = selection.chosen_ids;
            for (SampleId id : selection.chosen_ids) pending.chosen_fats.push_back(current.buffer.at_id(id).fat);
            current = move_samples(current, selection.chosen_ids);
        } catch (const std::exception& e) {
            rethrow_with_context(e, "iteration " + std::to_string(iteration));
        }
    }
    result.final_partition = std::move(current);
    return result;
}

}  // namespace nnal

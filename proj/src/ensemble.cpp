#include "nnal/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace nnal {

namespace {

void check_training_inputs(const Eigen::MatrixXd& features, std::span<const double> targets) {
    if (static_cast<std::size_t>(features.rows()) != targets.size()) {
        throw DimensionError("ensemble training has " + std::to_string(features.rows()) + " feature rows and " +
                             std::to_string(targets.size()) + " targets");
    }
    if (targets.size() < 4) throw SizeError("ensemble training needs at least 4 samples, got " + std::to_string(targets.size()));
}

EnsemblePrediction summarize(const Eigen::VectorXd& outputs, DisagreementMetric metric) {
    const double m = static_cast<double>(outputs.size());
    const double mean = outputs.sum() / m;
    const double var = (outputs.array() - mean).square().sum() / m;
    return {mean, metric == DisagreementMetric::std_dev ? std::sqrt(var) : var};
}

}  // namespace

std::vector<std::size_t> bootstrap_indices(std::size_t n, Seed seed) {
    if (n == 0) throw SizeError("bootstrap resample of an empty set");
    Rng rng(seed);
    std::vector<std::size_t> out(n);
    for (auto& i : out) i = rng.index(n);
    return out;
}

Seed member_seed(Seed ensemble_seed, std::size_t index) { return derive_seed(ensemble_seed, index); }

Network train_member(const Eigen::MatrixXd& features, std::span<const double> targets, const TrainConfig& config,
                     const Architecture& arch, Seed seed) {
    check_training_inputs(features, targets);
    const auto picks = bootstrap_indices(targets.size(), derive_seed(seed, 2));
    TrainingData data{Eigen::MatrixXd(static_cast<Eigen::Index>(picks.size()), features.cols()),
                      Eigen::MatrixXd(static_cast<Eigen::Index>(picks.size()), 1)};
    for (std::size_t r = 0; r < picks.size(); ++r) {
        data.inputs.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(picks[r]));
        data.targets(static_cast<Eigen::Index>(r), 0) = targets[picks[r]];
    }
    TrainConfig member_config = config;
    member_config.seed = derive_seed(seed, 3);
    return train(init_network(arch, derive_seed(seed, 1)), data, member_config).network;
}

Ensemble train_ensemble(const Eigen::MatrixXd& features, std::span<const double> targets, std::size_t m,
                        const TrainConfig& config, Seed seed, const EnsembleOptions& options) {
    if (m < 2) throw SizeError("an ensemble needs at least 2 members, got " + std::to_string(m));
    check_training_inputs(features, targets);
    options.architecture.validate();

    Ensemble ensemble;
    ensemble.pca_epoch = options.pca_epoch;
    ensemble.members.resize(m);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::size_t failed_member = 0;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < m; i = next++) {
            try {
                ensemble.members[i] = train_member(features, targets, config, options.architecture, member_seed(seed, i));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure || i < failed_member) {
                    failure = std::current_exception();
                    failed_member = i;
                }
            }
        }
    };

    const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, m);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    if (failure) {
        try {
            std::rethrow_exception(failure);
        } catch (const std::exception& e) {
            rethrow_with_context(e, "ensemble member " + std::to_string(failed_member));
        }
    }
    return ensemble;
}

EnsemblePrediction predict(const Ensemble& ensemble, const Eigen::VectorXd& x, DisagreementMetric metric) {
    return predict_rows(ensemble, Eigen::MatrixXd(x.transpose()), metric).front();
}

std::vector<EnsemblePrediction> predict_rows(const Ensemble& ensemble, const Eigen::MatrixXd& features,
                                        DisagreementMetric metric) {
    if (ensemble.members.empty()) throw SizeError("prediction from an empty ensemble");
    const auto m = static_cast<Eigen::Index>(ensemble.size());
    Eigen::MatrixXd outputs(features.rows(), m);  // sample x member
    for (Eigen::Index j = 0; j < m; ++j) {
        outputs.col(j) = forward_rows(ensemble.members[static_cast<std::size_t>(j)], features).col(0);
    }
    std::vector<EnsemblePrediction> out;
    out.reserve(static_cast<std::size_t>(features.rows()));
    for (Eigen::Index r = 0; r < features.rows(); ++r) out.push_back(summarize(outputs.row(r).transpose(), metric));
    return out;
}

}  // namespace nnal

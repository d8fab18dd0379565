#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nnal/error.hpp"
#include "nnal/neuralnet.hpp"
#include "nnal/random.hpp"

namespace nnal {

/// Committee of bootstrap-trained networks sharing one architecture.
struct Ensemble {
    std::vector<Network> members;
    long pca_epoch = -1;

    std::size_t size() const noexcept { return members.size(); }
    std::size_t input_size() const { return members.front().architecture.input_size(); }
};

enum class DisagreementMetric { std_dev, variance };

struct EnsemblePrediction {
    double mean = 0.0;          // fat %
    double disagreement = 0.0;  // population std (or variance) of member outputs
};

struct EnsembleOptions {
    Architecture architecture = Architecture::prediction(10);
    std::size_t threads = 1;  // result does not depend on this
    long pca_epoch = -1;
};

/// Positions of n draws with replacement from [0, n).
std::vector<std::size_t> bootstrap_indices(std::size_t n, Seed seed);

template <class T>
std::vector<T> bootstrap_resample(std::span<const T> data, Seed seed) {
    if (data.empty()) throw SizeError("bootstrap resample of an empty set");
    std::vector<T> out;
    out.reserve(data.size());
    for (std::size_t i : bootstrap_indices(data.size(), seed)) out.push_back(data[i]);
    return out;
}

/// Seed of member `index`; a pure function of its arguments.
Seed member_seed(Seed ensemble_seed, std::size_t index);

/// Bootstraps (features, targets), initializes from `seed` and trains one member.
Network train_member(const Eigen::MatrixXd& features, std::span<const double> targets, const TrainConfig& config,
                     const Architecture& arch, Seed seed);

/// Trains `m` members, member i from member_seed(seed, i). Members may be
/// trained on several threads; the result is bit-identical for any thread count.
Ensemble train_ensemble(const Eigen::MatrixXd& features, std::span<const double> targets, std::size_t m,
                        const TrainConfig& config, Seed seed, const EnsembleOptions& options = {});

EnsemblePrediction predict(const Ensemble& ensemble, const Eigen::VectorXd& x,
                           DisagreementMetric metric = DisagreementMetric::std_dev);
/// One prediction per row of `features`.
std::vector<EnsemblePrediction> predict_rows(const Ensemble& ensemble, const Eigen::MatrixXd& features,
                                        DisagreementMetric metric = DisagreementMetric::std_dev);

}  // namespace nnal

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnal/random.hpp"

namespace nnal {

enum class Activation { tangent_sigmoid, linear };

std::string to_string(Activation a);
Activation parse_activation(const std::string& text);

/// Layer sizes from input to output, plus one activation per connection layer.
struct Architecture {
    std::vector<std::size_t> layer_sizes;
    std::vector<Activation> activations;

    /// Throws StateError on inconsistent sizes.
    void validate() const;
    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return activations.size(); }
    std::size_t parameter_count() const;

    /// inputs-7-3-1: tanh into the first hidden layer, linear afterwards.
    static Architecture prediction(std::size_t inputs = 10);
    /// 1-2-1: tanh hidden layer, linear output.
    static Architecture inversion();

    bool operator==(const Architecture&) const = default;
};

/// Per-dimension affine map: apply(x) = (x - shift) / scale.
struct AffineScaler {
    Eigen::VectorXd shift;
    Eigen::VectorXd scale;

    static AffineScaler identity(std::size_t n);
    /// Standardizes each column of `rows` (population std; zero-spread columns get scale 1).
    static AffineScaler fit(const Eigen::MatrixXd& rows);

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::VectorXd invert(const Eigen::VectorXd& z) const;

    bool operator==(const AffineScaler&) const = default;
};

struct Layer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd biases;

    bool operator==(const Layer&) const = default;
};

/// Feedforward network. Inputs pass through `input_scaler`, the layers, and
/// finally the inverse of `output_scaler`.
struct Network {
    Architecture architecture;
    std::vector<Layer> layers;
    AffineScaler input_scaler;
    AffineScaler output_scaler;

    bool operator==(const Network&) const = default;
};

/// Per-layer parameter gradients, shaped like Network::layers.
using Gradients = std::vector<Layer>;

/// Rows are samples.
struct TrainingData {
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd targets;

    std::size_t size() const noexcept { return static_cast<std::size_t>(inputs.rows()); }
};

struct TrainConfig {
    std::size_t max_epochs = 100;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::size_t early_stop_patience = 15;
    double holdout_fraction = 0.2;
    Seed seed = 0;

    /// Throws StateError when a field is out of range.
    void validate() const;
};

struct TrainReport {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double final_train_mse = 0.0;    // at the returned parameters, target units
    double final_holdout_mse = 0.0;  // at the returned parameters, target units
    bool stopped_early = false;
    std::vector<double> holdout_mse;       // index 0 is the untrained network
    std::vector<double> best_holdout_mse;  // running minimum of holdout_mse
};

struct TrainResult {
    Network network;
    TrainReport report;
};

/// Uniform weights in [-r, r], r = sqrt(6 / (fan_in + fan_out)); zero biases; identity scalers.
Network init_network(const Architecture& arch, Seed seed);

Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x);
/// Row-wise forward pass: n x inputs -> n x outputs.
Eigen::MatrixXd forward_rows(const Network& net, const Eigen::MatrixXd& inputs);

/// Gradient of mean_i ||forward(x_i) - t_i||^2 with respect to every weight and bias.
Gradients gradient(const Network& net, const TrainingData& batch);

/// Full-batch gradient descent with momentum and early stopping on a seeded
/// holdout split. Scalers are fitted to `data`; the best-holdout parameters are returned.
TrainResult train(Network net, const TrainingData& data, const TrainConfig& config);

std::vector<double> flatten_parameters(const std::vector<Layer>& layers);
void assign_parameters(std::vector<Layer>& layers, std::span<const double> flat);

void save_network(std::ostream& out, const Network& net);
Network load_network(std::istream& in);

}  // namespace nnal

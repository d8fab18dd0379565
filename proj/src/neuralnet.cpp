#include "nnal/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "nnal/error.hpp"
#include "nnal/text.hpp"

namespace nnal {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Post-activation outputs of every layer; entry 0 is the (scaled) input. Columns are samples.
using Activations = std::vector<MatrixXd>;

void activate(Activation a, MatrixXd& z) {
    if (a == Activation::tangent_sigmoid) z = z.array().tanh().matrix();
}

Activations forward_internal(const std::vector<Layer>& layers, const Architecture& arch, MatrixXd scaled_inputs) {
    Activations acts;
    acts.reserve(layers.size() + 1);
    acts.push_back(std::move(scaled_inputs));
    for (std::size_t l = 0; l < layers.size(); ++l) {
        MatrixXd z = layers[l].weights * acts.back();
        z.colwise() += layers[l].biases;
        activate(arch.activations[l], z);
        acts.push_back(std::move(z));
    }
    return acts;
}

// `d_out` is dLoss/d(last layer output), same shape as acts.back().
Gradients backward_internal(const std::vector<Layer>& layers, const Architecture& arch, const Activations& acts,
                            MatrixXd d_out) {
    Gradients grads(layers.size());
    MatrixXd delta = std::move(d_out);
    for (std::size_t l = layers.size(); l-- > 0;) {
        if (arch.activations[l] == Activation::tangent_sigmoid) {
            delta = (delta.array() * (1.0 - acts[l + 1].array().square())).matrix();
        }
        grads[l].weights = delta * acts[l].transpose();
        grads[l].biases = delta.rowwise().sum();
        if (l > 0) delta = layers[l].weights.transpose() * delta;
    }
    return grads;
}

MatrixXd scale_inputs(const AffineScaler& s, const MatrixXd& rows) {
    MatrixXd cols = rows.transpose();
    cols.colwise() -= s.shift;
    return (cols.array().colwise() / s.scale.array()).matrix();
}

MatrixXd unscale_outputs(const AffineScaler& s, MatrixXd cols) {
    cols = (cols.array().colwise() * s.scale.array()).matrix();
    cols.colwise() += s.shift;
    return cols;
}

void check_dims(const Network& net, Index cols, const char* what) {
    if (static_cast<std::size_t>(cols) != net.architecture.input_size()) {
        throw DimensionError(std::string(what) + " has " + std::to_string(cols) + " inputs, network expects " +
                             std::to_string(net.architecture.input_size()));
    }
}

// Mean over samples of the squared output error in target units.
double mse_target_units(const MatrixXd& internal_out, const MatrixXd& internal_targets, const VectorXd& scale) {
    const MatrixXd r = ((internal_out - internal_targets).array().colwise() * scale.array()).matrix();
    return r.squaredNorm() / static_cast<double>(r.cols());
}

template <class Fn>
void for_each_parameter(std::vector<Layer>& layers, Fn&& fn) {
    for (auto& layer : layers) {
        for (Index r = 0; r < layer.weights.rows(); ++r) {
            for (Index c = 0; c < layer.weights.cols(); ++c) fn(layer.weights(r, c));
        }
        for (Index r = 0; r < layer.biases.size(); ++r) fn(layer.biases(r));
    }
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::tangent_sigmoid ? "tangent_sigmoid" : "linear"; }

Activation parse_activation(const std::string& text) {
    if (text == "tangent_sigmoid") return Activation::tangent_sigmoid;
    if (text == "linear") return Activation::linear;
    throw ParseError("unknown activation '" + text + "'");
}

void Architecture::validate() const {
    if (layer_sizes.size() < 2) throw StateError("architecture needs at least an input and an output layer");
    if (activations.size() != layer_sizes.size() - 1) {
        throw StateError("architecture has " + std::to_string(activations.size()) + " activations for " +
                         std::to_string(layer_sizes.size() - 1) + " connection layers");
    }
    for (std::size_t s : layer_sizes) {
        if (s == 0) throw StateError("architecture layer sizes must be >= 1");
    }
}

std::size_t Architecture::parameter_count() const {
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) count += layer_sizes[l + 1] * (layer_sizes[l] + 1);
    return count;
}

Architecture Architecture::prediction(std::size_t inputs) {
    return {{inputs, 7, 3, 1}, {Activation::tangent_sigmoid, Activation::linear, Activation::linear}};
}

Architecture Architecture::inversion() {
    return {{1, 2, 1}, {Activation::tangent_sigmoid, Activation::linear}};
}

AffineScaler AffineScaler::identity(std::size_t n) {
    const auto size = static_cast<Index>(n);
    return {VectorXd::Zero(size), VectorXd::Ones(size)};
}

AffineScaler AffineScaler::fit(const MatrixXd& rows) {
    AffineScaler s;
    s.shift = rows.colwise().mean().transpose();
    s.scale.resize(rows.cols());
    for (Index c = 0; c < rows.cols(); ++c) {
        const double var = (rows.col(c).array() - s.shift(c)).square().mean();
        const double sd = std::sqrt(var);
        s.scale(c) = sd > 1e-12 * std::max(1.0, std::abs(s.shift(c))) ? sd : 1.0;
    }
    return s;
}

VectorXd AffineScaler::apply(const VectorXd& x) const { return ((x - shift).array() / scale.array()).matrix(); }

VectorXd AffineScaler::invert(const VectorXd& z) const { return (z.array() * scale.array()).matrix() + shift; }

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw StateError("learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw StateError("momentum must be in [0, 1)");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw StateError("holdout_fraction must be in (0, 1)");
}

Network init_network(const Architecture& arch, Seed seed) {
    arch.validate();
    Rng rng(seed);
    Network net;
    net.architecture = arch;
    for (std::size_t l = 0; l + 1 < arch.layer_sizes.size(); ++l) {
        const auto fan_in = arch.layer_sizes[l];
        const auto fan_out = arch.layer_sizes[l + 1];
        const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Layer layer{MatrixXd(static_cast<Index>(fan_out), static_cast<Index>(fan_in)),
                    VectorXd::Zero(static_cast<Index>(fan_out))};
        for (Index i = 0; i < layer.weights.rows(); ++i) {
            for (Index j = 0; j < layer.weights.cols(); ++j) layer.weights(i, j) = rng.uniform(-r, r);
        }
        net.layers.push_back(std::move(layer));
    }
    net.input_scaler = AffineScaler::identity(arch.input_size());
    net.output_scaler = AffineScaler::identity(arch.output_size());
    return net;
}

MatrixXd forward_rows(const Network& net, const MatrixXd& inputs) {
    check_dims(net, inputs.cols(), "input batch");
    const auto acts = forward_internal(net.layers, net.architecture, scale_inputs(net.input_scaler, inputs));
    MatrixXd out = unscale_outputs(net.output_scaler, acts.back()).transpose();
    if (!out.allFinite()) throw NumericalError("forward pass produced a non-finite output");
    return out;
}

VectorXd forward(const Network& net, const VectorXd& x) {
    check_dims(net, x.size(), "input vector");
    return forward_rows(net, MatrixXd(x.transpose())).row(0).transpose();
}

Gradients gradient(const Network& net, const TrainingData& batch) {
    if (batch.size() == 0) throw SizeError("gradient needs a non-empty batch");
    check_dims(net, batch.inputs.cols(), "input batch");
    if (batch.targets.rows() != batch.inputs.rows() ||
        static_cast<std::size_t>(batch.targets.cols()) != net.architecture.output_size()) {
        throw DimensionError("target batch shape does not match inputs/outputs");
    }
    const auto acts = forward_internal(net.layers, net.architecture, scale_inputs(net.input_scaler, batch.inputs));
    const MatrixXd outputs = unscale_outputs(net.output_scaler, acts.back());
    const double n = static_cast<double>(batch.size());
    MatrixXd d_out = (2.0 / n) * (outputs - batch.targets.transpose());
    d_out = (d_out.array().colwise() * net.output_scaler.scale.array()).matrix();
    return backward_internal(net.layers, net.architecture, acts, std::move(d_out));
}

TrainResult train(Network net, const TrainingData& data, const TrainConfig& config) {
    config.validate();
    net.architecture.validate();
    const std::size_t n = data.size();
    if (n < 4) throw SizeError("training needs at least 4 samples, got " + std::to_string(n));
    check_dims(net, data.inputs.cols(), "training inputs");
    if (data.targets.rows() != data.inputs.rows() ||
        static_cast<std::size_t>(data.targets.cols()) != net.architecture.output_size()) {
        throw DimensionError("training targets do not match inputs/outputs");
    }
    if (!data.inputs.allFinite() || !data.targets.allFinite()) {
        throw NumericalError("training data contains non-finite values");
    }

    net.input_scaler = AffineScaler::fit(data.inputs);
    net.output_scaler = AffineScaler::fit(data.targets);

    // Seeded holdout split.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, 0x686f6c64));
    rng.shuffle(std::span<std::size_t>(order));
    auto n_hold = static_cast<std::size_t>(std::lround(config.holdout_fraction * static_cast<double>(n)));
    n_hold = std::clamp<std::size_t>(n_hold, 1, n - 1);
    const std::size_t n_fit = n - n_hold;

    const MatrixXd xs = scale_inputs(net.input_scaler, data.inputs);
    const MatrixXd ts = scale_inputs(net.output_scaler, data.targets);
    MatrixXd x_fit(xs.rows(), static_cast<Index>(n_fit)), t_fit(ts.rows(), static_cast<Index>(n_fit));
    MatrixXd x_hold(xs.rows(), static_cast<Index>(n_hold)), t_hold(ts.rows(), static_cast<Index>(n_hold));
    for (std::size_t i = 0; i < n; ++i) {
        const auto src = static_cast<Index>(order[i]);
        if (i < n_fit) {
            x_fit.col(static_cast<Index>(i)) = xs.col(src);
            t_fit.col(static_cast<Index>(i)) = ts.col(src);
        } else {
            x_hold.col(static_cast<Index>(i - n_fit)) = xs.col(src);
            t_hold.col(static_cast<Index>(i - n_fit)) = ts.col(src);
        }
    }
    const VectorXd& out_scale = net.output_scaler.scale;
    auto holdout_mse = [&](const std::vector<Layer>& layers) {
        return mse_target_units(forward_internal(layers, net.architecture, x_hold).back(), t_hold, out_scale);
    };

    TrainReport report;
    std::vector<Layer> best = net.layers;
    double best_hold = holdout_mse(net.layers);
    report.holdout_mse.push_back(best_hold);
    report.best_holdout_mse.push_back(best_hold);

    std::vector<Layer> velocity = net.layers;
    for (auto& v : velocity) {
        v.weights.setZero();
        v.biases.setZero();
    }

    double initial_train_mse = -1.0;
    std::size_t since_improvement = 0;
    const double fit_n = static_cast<double>(n_fit);
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto acts = forward_internal(net.layers, net.architecture, x_fit);
        const MatrixXd residual = acts.back() - t_fit;
        const double train_mse = mse_target_units(acts.back(), t_fit, out_scale);
        if (initial_train_mse < 0.0) initial_train_mse = train_mse;
        if (!std::isfinite(train_mse) || train_mse > 1e6 * std::max(initial_train_mse, 1e-300)) {
            throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                                 " (train MSE " + text::format_number(train_mse) + ")");
        }
        const Gradients grads = backward_internal(net.layers, net.architecture, acts, (2.0 / fit_n) * residual);
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            velocity[l].weights = config.momentum * velocity[l].weights - config.learning_rate * grads[l].weights;
            velocity[l].biases = config.momentum * velocity[l].biases - config.learning_rate * grads[l].biases;
            net.layers[l].weights += velocity[l].weights;
            net.layers[l].biases += velocity[l].biases;
        }
        report.epochs_run = epoch;

        const double hold = holdout_mse(net.layers);
        if (!std::isfinite(hold)) {
            throw NumericalError("training diverged at epoch " + std::to_string(epoch) + " (non-finite holdout MSE)");
        }
        report.holdout_mse.push_back(hold);
        if (hold < best_hold) {
            best_hold = hold;
            best = net.layers;
            report.best_epoch = epoch;
            since_improvement = 0;
        } else {
            ++since_improvement;
        }
        report.best_holdout_mse.push_back(best_hold);
        if (since_improvement >= config.early_stop_patience && epoch < config.max_epochs) {
            report.stopped_early = true;
            break;
        }
    }

    net.layers = std::move(best);
    report.final_holdout_mse = best_hold;
    report.final_train_mse = mse_target_units(forward_internal(net.layers, net.architecture, x_fit).back(), t_fit,
                                              out_scale);
    return {std::move(net), std::move(report)};
}

std::vector<double> flatten_parameters(const std::vector<Layer>& layers) {
    std::vector<double> flat;
    auto copy = layers;
    for_each_parameter(copy, [&flat](double& p) { flat.push_back(p); });
    return flat;
}

void assign_parameters(std::vector<Layer>& layers, std::span<const double> flat) {
    std::size_t count = 0;
    for (const auto& layer : layers) count += static_cast<std::size_t>(layer.weights.size() + layer.biases.size());
    if (count != flat.size()) {
        throw DimensionError("expected " + std::to_string(count) + " parameters, got " + std::to_string(flat.size()));
    }
    std::size_t i = 0;
    for_each_parameter(layers, [&](double& p) { p = flat[i++]; });
}

void save_network(std::ostream& out, const Network& net) {
    const auto& arch = net.architecture;
    auto write_vec = [&out](const char* label, const VectorXd& v) {
        out << label;
        for (Index i = 0; i < v.size(); ++i) out << ' ' << text::format_precise(v(i));
        out << '\n';
    };
    out << "nnal-network 1\n";
    out << "layers";
    for (std::size_t s : arch.layer_sizes) out << ' ' << s;
    out << "\nactivations";
    for (Activation a : arch.activations) out << ' ' << to_string(a);
    out << '\n';
    write_vec("input_shift", net.input_scaler.shift);
    write_vec("input_scale", net.input_scaler.scale);
    write_vec("output_shift", net.output_scaler.shift);
    write_vec("output_scale", net.output_scaler.scale);
    for (const auto& layer : net.layers) {
        out << "weights";
        for (Index r = 0; r < layer.weights.rows(); ++r) {
            for (Index c = 0; c < layer.weights.cols(); ++c) out << ' ' << text::format_precise(layer.weights(r, c));
        }
        out << '\n';
        write_vec("biases", layer.biases);
    }
    if (!out) throw IoError("failed writing network");
}

Network load_network(std::istream& in) {
    std::string line;
    auto next_line = [&](const std::string& key) {
        if (!std::getline(in, line)) throw ParseError("network file truncated before '" + key + "'");
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        if (word != key) throw ParseError("expected '" + key + "', found '" + word + "'");
        std::vector<std::string> words;
        while (ss >> word) words.push_back(word);
        return words;
    };
    auto numbers = [](const std::vector<std::string>& words, std::size_t expected, const std::string& key) {
        if (words.size() != expected) {
            throw ParseError("'" + key + "' has " + std::to_string(words.size()) + " values, expected " +
                             std::to_string(expected));
        }
        VectorXd v(static_cast<Index>(expected));
        for (std::size_t i = 0; i < expected; ++i) {
            const auto value = text::parse_double(words[i]);
            if (!value) throw ParseError("'" + key + "' value " + std::to_string(i) + " is not a number");
            v(static_cast<Index>(i)) = *value;
        }
        return v;
    };

    const auto magic = next_line("nnal-network");
    if (magic.size() != 1 || magic[0] != "1") throw ParseError("unsupported network format version");
    Network net;
    for (const auto& w : next_line("layers")) {
        const auto v = text::parse_long(w);
        if (!v || *v <= 0) throw ParseError("invalid layer size '" + w + "'");
        net.architecture.layer_sizes.push_back(static_cast<std::size_t>(*v));
    }
    for (const auto& w : next_line("activations")) net.architecture.activations.push_back(parse_activation(w));
    try {
        net.architecture.validate();
    } catch (const StateError& e) {
        throw ParseError(e.what());
    }
    const auto& arch = net.architecture;
    net.input_scaler.shift = numbers(next_line("input_shift"), arch.input_size(), "input_shift");
    net.input_scaler.scale = numbers(next_line("input_scale"), arch.input_size(), "input_scale");
    net.output_scaler.shift = numbers(next_line("output_shift"), arch.output_size(), "output_shift");
    net.output_scaler.scale = numbers(next_line("output_scale"), arch.output_size(), "output_scale");
    for (std::size_t l = 0; l < arch.layer_count(); ++l) {
        const auto rows = arch.layer_sizes[l + 1];
        const auto cols = arch.layer_sizes[l];
        const VectorXd flat = numbers(next_line("weights"), rows * cols, "weights");
        Layer layer;
        layer.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            flat.data(), static_cast<Index>(rows), static_cast<Index>(cols));
        layer.biases = numbers(next_line("biases"), rows, "biases");
        net.layers.push_back(std::move(layer));
    }
    return net;
}

}  // namespace nnal

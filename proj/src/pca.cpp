#include "nnal/pca.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "nnal/error.hpp"
#include "nnal/text.hpp"

namespace nnal {

PcaModel fit_pca(const Eigen::MatrixXd& spectra, std::size_t k) {
    const auto n = static_cast<std::size_t>(spectra.rows());
    const auto d = static_cast<std::size_t>(spectra.cols());
    if (n < 2) throw DimensionError("PCA needs at least 2 spectra, got " + std::to_string(n));
    if (k < 1 || k > d || k > n - 1) {
        throw DimensionError("PCA component count " + std::to_string(k) + " outside [1, min(" + std::to_string(d) +
                             ", " + std::to_string(n - 1) + ")]");
    }
    if (!spectra.allFinite()) throw NumericalError("PCA input contains non-finite values");

    PcaModel model;
    model.mean = spectra.colwise().mean().transpose();
    const Eigen::MatrixXd centered = spectra.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("covariance eigen-solve did not converge within " +
                             std::to_string(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>::m_maxIterations) +
                             " sweeps per eigenvalue");
    }

    // Eigen returns ascending eigenvalues.
    model.components.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
    model.explained_variance.resize(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const Eigen::Index src = static_cast<Eigen::Index>(d - 1 - i);
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index argmax = 0;
        v.cwiseAbs().maxCoeff(&argmax);
        if (v(argmax) < 0.0) v = -v;
        model.components.row(static_cast<Eigen::Index>(i)) = v.transpose();
        model.explained_variance(static_cast<Eigen::Index>(i)) = std::max(0.0, solver.eigenvalues()(src));
    }
    return model;
}

PcaModel fit_pca(std::span<const std::vector<double>> spectra, std::size_t k) {
    if (spectra.empty()) throw DimensionError("PCA needs at least 2 spectra, got 0");
    const std::size_t d = spectra.front().size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(spectra.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < spectra.size(); ++i) {
        if (spectra[i].size() != d) {
            throw DimensionError("spectrum " + std::to_string(i) + " has " + std::to_string(spectra[i].size()) +
                                 " channels, expected " + std::to_string(d));
        }
        for (std::size_t j = 0; j < d; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = spectra[i][j];
        }
    }
    return fit_pca(m, k);
}

Eigen::VectorXd transform(const PcaModel& model, std::span<const double> spectrum) {
    if (spectrum.size() != model.dimension()) {
        throw DimensionError("spectrum has " + std::to_string(spectrum.size()) + " channels, PCA expects " +
                             std::to_string(model.dimension()));
    }
    const Eigen::Map<const Eigen::VectorXd> x(spectrum.data(), static_cast<Eigen::Index>(spectrum.size()));
    if (!x.allFinite()) throw NumericalError("spectrum contains non-finite values");
    return model.components * (x - model.mean);
}

Eigen::MatrixXd transform(const PcaModel& model, const Eigen::MatrixXd& spectra) {
    if (static_cast<std::size_t>(spectra.cols()) != model.dimension()) {
        throw DimensionError("spectra have " + std::to_string(spectra.cols()) + " channels, PCA expects " +
                             std::to_string(model.dimension()));
    }
    if (!spectra.allFinite()) throw NumericalError("spectra contain non-finite values");
    return (spectra.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Eigen::VectorXd reconstruct(const PcaModel& model, const Eigen::VectorXd& scores) {
    if (static_cast<std::size_t>(scores.size()) != model.k()) {
        throw DimensionError("expected " + std::to_string(model.k()) + " scores, got " +
                             std::to_string(scores.size()));
    }
    return model.mean + model.components.transpose() * scores;
}

void write_pca_csv(std::ostream& out, const PcaModel& model) {
    auto row = [&out](const std::string& label, const auto& values) {
        out << label;
        for (Eigen::Index i = 0; i < values.size(); ++i) out << ',' << text::format_number(values(i));
        out << '\n';
    };
    row("mean", model.mean);
    for (Eigen::Index r = 0; r < model.components.rows(); ++r) {
        row("pc" + std::to_string(r + 1), model.components.row(r));
    }
    row("explained_variance", model.explained_variance);
}

PcaFeatures::PcaFeatures(const Eigen::MatrixXd& spectra, std::size_t k, long epoch)
    : model_(fit_pca(spectra, k)), epoch_(epoch) {
    const Eigen::MatrixXd scores = transform(model_, spectra);
    const auto n = static_cast<double>(scores.rows());
    shift_ = scores.colwise().mean().transpose();
    scale_.resize(scores.cols());
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
        const double var = (scores.col(c).array() - shift_(c)).square().sum() / (n - 1.0);
        const double sd = std::sqrt(var);
        scale_(c) = sd > 1e-12 ? sd : 1.0;
    }
}

Eigen::VectorXd PcaFeatures::features(std::span<const double> spectrum) const {
    return ((transform(model_, spectrum) - shift_).array() / scale_.array()).matrix();
}

Eigen::MatrixXd PcaFeatures::features(const Eigen::MatrixXd& spectra) const {
    Eigen::MatrixXd scores = transform(model_, spectra);
    scores.rowwise() -= shift_.transpose();
    return (scores.array().rowwise() / scale_.transpose().array()).matrix();
}

}  // namespace nnal

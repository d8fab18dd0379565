#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nnal {

/// Linear projection of mean-centered spectra onto the leading covariance eigenvectors.
struct PcaModel {
    Eigen::VectorXd mean;                // per-channel average of the fitting spectra
    Eigen::MatrixXd components;          // k x d, orthonormal rows
    Eigen::VectorXd explained_variance;  // k eigenvalues, nonincreasing

    std::size_t k() const noexcept { return static_cast<std::size_t>(components.rows()); }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

/// Fits on the rows of `spectra` (one spectrum per row).
///
/// Components are ordered by decreasing eigenvalue of the sample covariance
/// (denominator n - 1). Each component is oriented so that its entry of
/// largest magnitude is positive.
PcaModel fit_pca(const Eigen::MatrixXd& spectra, std::size_t k);
PcaModel fit_pca(std::span<const std::vector<double>> spectra, std::size_t k);

Eigen::VectorXd transform(const PcaModel& model, std::span<const double> spectrum);
/// Row-wise transform: returns n x k scores.
Eigen::MatrixXd transform(const PcaModel& model, const Eigen::MatrixXd& spectra);

Eigen::VectorXd reconstruct(const PcaModel& model, const Eigen::VectorXd& scores);

/// Mean row, one row per component, then the explained variances.
void write_pca_csv(std::ostream& out, const PcaModel& model);

/// PCA scores standardized to zero mean and unit variance over the fitting set.
///
/// `epoch` identifies which fit the features came from, so an ensemble can
/// refuse inputs produced by a different projection.
class PcaFeatures {
public:
    PcaFeatures() = default;
    PcaFeatures(const Eigen::MatrixXd& spectra, std::size_t k, long epoch);

    const PcaModel& model() const noexcept { return model_; }
    long epoch() const noexcept { return epoch_; }
    std::size_t k() const noexcept { return model_.k(); }

    Eigen::VectorXd features(std::span<const double> spectrum) const;
    Eigen::MatrixXd features(const Eigen::MatrixXd& spectra) const;

private:
    PcaModel model_;
    Eigen::VectorXd shift_;
    Eigen::VectorXd scale_;
    long epoch_ = -1;
};

}  // namespace nnal

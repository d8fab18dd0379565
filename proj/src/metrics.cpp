#include "nnal/metrics.hpp"

#include <cmath>
#include <string>

#include "nnal/error.hpp"

namespace nnal {

double rmse(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size()) {
        throw SizeError("rmse of " + std::to_string(predicted.size()) + " predictions against " +
                        std::to_string(actual.size()) + " targets");
    }
    if (predicted.empty()) throw SizeError("rmse of an empty set");
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - actual[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(predicted.size()));
}

}  // namespace nnal

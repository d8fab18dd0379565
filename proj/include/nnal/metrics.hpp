#pragma once

#include <span>

namespace nnal {

/// sqrt(sum((y - y_d)^2) / n). Throws SizeError on empty or mismatched input.
double rmse(std::span<const double> predicted, std::span<const double> actual);

}  // namespace nnal

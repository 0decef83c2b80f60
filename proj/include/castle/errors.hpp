#pragma once

#include <stdexcept>
#include <string>

namespace castle {

// Thrown when matrix/vector shapes do not line up.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown on invalid argument values (out-of-range counts, bad fractions, ...).
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a computation produces non-finite values or fails to converge.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on malformed input data (CSV cells, label domains, role labeling).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a metric is undefined for the given inputs (e.g. single-class AUROC).
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace castle

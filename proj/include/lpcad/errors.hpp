#pragma once

#include <stdexcept>

namespace lpcad {

// Shape disagreement between operands.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An operation was invoked outside its contract (non-scalar backward root,
// missing gradients, non-normalized attention weights, ...).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed external input: CSV parse failures, config keys, label mismatches.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint file malformed or inconsistent with its hyperparameters.
struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Metric undefined on the given input (e.g. AUROC with one class).
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace lpcad

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace lpcad {

// T x M matrix of observations, row per timestamp, with optional binary
// labels on test splits.
struct SeriesMatrix {
    std::size_t timesteps = 0; // T
    std::size_t metrics = 0;   // M
    std::vector<double> values;        // row-major T x M
    std::vector<std::uint8_t> labels;  // empty, or one 0/1 entry per timestamp
    std::string id;

    double at(std::size_t t, std::size_t m) const { return values[t * metrics + m]; }
    double& at(std::size_t t, std::size_t m) { return values[t * metrics + m]; }
    bool has_labels() const { return !labels.empty(); }
};

struct DatasetBundle {
    SeriesMatrix train; // unlabeled
    SeriesMatrix test;  // labeled
    std::string name;
};

} // namespace lpcad

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lpcad/errors.hpp"

namespace lpcad {

// Point-adjustment: for every maximal run of consecutive label-1 timestamps,
// if any flag inside the run is set, set every flag in the run. Flags outside
// labeled runs are left untouched. Idempotent.
std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> flags,
                                       std::span<const std::uint8_t> labels);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Standard binary precision/recall/F1 with zero-denominator conventions
// P=0 when TP+FP=0, R=0 when TP+FN=0, F1=0 when P+R=0.
Prf prf(std::span<const std::uint8_t> flags, std::span<const std::uint8_t> labels);

// Area under the ROC curve. adjust=true (the default protocol) point-adjusts
// the flags induced by each candidate threshold before counting; adjust=false
// is the rank-based Mann-Whitney statistic with ties counting 1/2.
// Throws MetricError unless both classes are present.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels,
             bool adjust = true);

struct ThresholdSearchResult {
    double lambda = 0.0;
    double f1 = 0.0;
};

// Exhaustive search for the alert threshold maximizing point-adjusted F1 over
// the grid {0, 0.0001, ..., 1.0} x max(scores). Smallest maximizer on ties.
ThresholdSearchResult threshold_search(std::span<const double> scores,
                                       std::span<const std::uint8_t> labels);

struct RunMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auroc = 0.0;
    double lambda = 0.0;
};

struct MetricBundle {
    double precision = 0.0;
    double recall = 0.0;
    double f1_micro = 0.0;
    double f1_macro = 0.0; // 2PR/(P+R) on the averaged P and R
    double auroc = 0.0;
    double lambda = 0.0;   // mean searched threshold
    std::vector<RunMetrics> runs; // flattened (series, repeat) grid
};

// Grand means over a complete [series][repeat] grid of runs; the macro F1 is
// recomputed from the averaged precision and recall.
MetricBundle aggregate(const std::vector<std::vector<RunMetrics>>& per_series_per_repeat);

// JSON metric report {P, R, F1, F1_star, AUROC, lambda, per_series: [...]}.
void write_metric_report(const std::filesystem::path& path, const MetricBundle& bundle);

} // namespace lpcad

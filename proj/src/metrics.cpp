#include "lpcad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

namespace lpcad {

namespace {

void require_equal_lengths(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
    }
}

// Maximal runs of label 1, each with its size and the maximum score inside.
// With flags "score >= lambda", a run is fully detected after point
// adjustment iff its maximum score reaches lambda.
struct SegmentSummary {
    std::vector<double> segment_max;   // sorted ascending
    std::vector<std::size_t> segment_len; // aligned with segment_max
    std::vector<double> negative_scores;  // sorted ascending
    std::size_t total_positive = 0;

    static SegmentSummary build(std::span<const double> scores,
                                std::span<const std::uint8_t> labels) {
        SegmentSummary s;
        std::vector<std::pair<double, std::size_t>> segments;
        std::size_t i = 0;
        const std::size_t n = labels.size();
        while (i < n) {
            if (labels[i] == 0) {
                s.negative_scores.push_back(scores[i]);
                ++i;
                continue;
            }
            double best = scores[i];
            std::size_t len = 0;
            while (i < n && labels[i] == 1) {
                best = std::max(best, scores[i]);
                ++len;
                ++i;
            }
            segments.emplace_back(best, len);
            s.total_positive += len;
        }
        std::sort(segments.begin(), segments.end());
        for (auto& [best, len] : segments) {
            s.segment_max.push_back(best);
            s.segment_len.push_back(len);
        }
        // Suffix sums let tp(lambda) come from one binary search.
        s.len_suffix.assign(s.segment_len.size() + 1, 0);
        for (std::size_t k = s.segment_len.size(); k > 0; --k) {
            s.len_suffix[k - 1] = s.len_suffix[k] + s.segment_len[k - 1];
        }
        std::sort(s.negative_scores.begin(), s.negative_scores.end());
        return s;
    }

    std::size_t true_positive(double lambda) const {
        const auto it = std::lower_bound(segment_max.begin(), segment_max.end(), lambda);
        return len_suffix[static_cast<std::size_t>(it - segment_max.begin())];
    }

    std::size_t false_positive(double lambda) const {
        const auto it =
            std::lower_bound(negative_scores.begin(), negative_scores.end(), lambda);
        return negative_scores.size() - static_cast<std::size_t>(it - negative_scores.begin());
    }

    Prf adjusted_prf(double lambda) const {
        const std::size_t tp = true_positive(lambda);
        const std::size_t fp = false_positive(lambda);
        const std::size_t fn = total_positive - tp;
        Prf out;
        out.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        out.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
        out.f1 = out.precision + out.recall == 0.0
                     ? 0.0
                     : 2.0 * out.precision * out.recall / (out.precision + out.recall);
        return out;
    }

    std::vector<std::size_t> len_suffix;
};

} // namespace

std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> flags,
                                       std::span<const std::uint8_t> labels) {
    require_equal_lengths(flags.size(), labels.size(), "point_adjust");
    std::vector<std::uint8_t> adjusted(flags.begin(), flags.end());
    std::size_t i = 0;
    const std::size_t n = labels.size();
    while (i < n) {
        if (labels[i] == 0) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        bool hit = false;
        while (i < n && labels[i] == 1) {
            hit = hit || flags[i] != 0;
            ++i;
        }
        if (hit) std::fill(adjusted.begin() + begin, adjusted.begin() + i, std::uint8_t{1});
    }
    return adjusted;
}

Prf prf(std::span<const std::uint8_t> flags, std::span<const std::uint8_t> labels) {
    require_equal_lengths(flags.size(), labels.size(), "prf");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (flags[i] && labels[i]) ++tp;
        else if (flags[i] && !labels[i]) ++fp;
        else if (!flags[i] && labels[i]) ++fn;
    }
    Prf out;
    out.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    out.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    out.f1 = out.precision + out.recall == 0.0
                 ? 0.0
                 : 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels, bool adjust) {
    require_equal_lengths(scores.size(), labels.size(), "auroc");
    std::size_t positives = 0;
    for (std::uint8_t l : labels) positives += l;
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw MetricError("auroc undefined: labels contain a single class");
    }

    if (!adjust) {
        // Mann-Whitney with midranks for ties.
        std::vector<std::size_t> order(scores.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
        double rank_sum_positive = 0.0;
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
            const double midrank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
            for (std::size_t k = i; k < j; ++k) {
                if (labels[order[k]]) rank_sum_positive += midrank;
            }
            i = j;
        }
        const double p = static_cast<double>(positives), n = static_cast<double>(negatives);
        return (rank_sum_positive - p * (p + 1.0) / 2.0) / (p * n);
    }

    // Point-adjusted ROC: thresholds at the distinct scores, descending. TPR
    // and FPR are both monotone because lowering the threshold only grows the
    // flag set.
    SegmentSummary summary = SegmentSummary::build(scores, labels);
    std::vector<double> distinct(scores.begin(), scores.end());
    std::sort(distinct.begin(), distinct.end(), std::greater<>());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    double area = 0.0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    const double p = static_cast<double>(summary.total_positive);
    const double n = static_cast<double>(summary.negative_scores.size());
    for (double threshold : distinct) {
        const double tpr = static_cast<double>(summary.true_positive(threshold)) / p;
        const double fpr = static_cast<double>(summary.false_positive(threshold)) / n;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    area += (1.0 - prev_fpr) * (1.0 + prev_tpr) / 2.0;
    return area;
}

ThresholdSearchResult threshold_search(std::span<const double> scores,
                                       std::span<const std::uint8_t> labels) {
    require_equal_lengths(scores.size(), labels.size(), "threshold_search");
    if (scores.empty()) throw DataError("threshold_search: empty input");
    SegmentSummary summary = SegmentSummary::build(scores, labels);
    const double max_score = *std::max_element(scores.begin(), scores.end());

    ThresholdSearchResult best;
    best.lambda = 0.0;
    best.f1 = summary.adjusted_prf(0.0).f1;
    if (max_score <= 0.0) return best;

    constexpr int kGridSteps = 10000; // step 0.0001 over [0, 1] x max score
    for (int i = 1; i <= kGridSteps; ++i) {
        const double lambda = max_score * (static_cast<double>(i) / kGridSteps);
        const double f1 = summary.adjusted_prf(lambda).f1;
        if (f1 > best.f1) {
            best.f1 = f1;
            best.lambda = lambda;
        }
    }
    return best;
}

MetricBundle aggregate(const std::vector<std::vector<RunMetrics>>& per_series_per_repeat) {
    if (per_series_per_repeat.empty() || per_series_per_repeat.front().empty()) {
        throw DataError("aggregate: empty result grid");
    }
    const std::size_t repeats = per_series_per_repeat.front().size();
    MetricBundle bundle;
    for (const auto& row : per_series_per_repeat) {
        if (row.size() != repeats) throw DataError("aggregate: incomplete result grid");
        for (const RunMetrics& run : row) {
            bundle.precision += run.precision;
            bundle.recall += run.recall;
            bundle.f1_micro += run.f1;
            bundle.auroc += run.auroc;
            bundle.lambda += run.lambda;
            bundle.runs.push_back(run);
        }
    }
    const double count = static_cast<double>(bundle.runs.size());
    bundle.precision /= count;
    bundle.recall /= count;
    bundle.f1_micro /= count;
    bundle.auroc /= count;
    bundle.lambda /= count;
    bundle.f1_macro = bundle.precision + bundle.recall == 0.0
                          ? 0.0
                          : 2.0 * bundle.precision * bundle.recall /
                                (bundle.precision + bundle.recall);
    return bundle;
}

void write_metric_report(const std::filesystem::path& path, const MetricBundle& bundle) {
    nlohmann::json doc;
    doc["P"] = bundle.precision;
    doc["R"] = bundle.recall;
    doc["F1"] = bundle.f1_micro;
    doc["F1_star"] = bundle.f1_macro;
    doc["AUROC"] = bundle.auroc;
    doc["lambda"] = bundle.lambda;
    doc["per_series"] = nlohmann::json::array();
    for (const RunMetrics& run : bundle.runs) {
        doc["per_series"].push_back({{"P", run.precision},
                                     {"R", run.recall},
                                     {"F1", run.f1},
                                     {"AUROC", run.auroc},
                                     {"lambda", run.lambda}});
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << doc.dump(2) << '\n';
}

} // namespace lpcad

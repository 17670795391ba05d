#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lpcad/metrics.hpp"

using namespace lpcad;

namespace {

using Bits = std::vector<std::uint8_t>;

// Independent per-point reimplementation: each labeled point scans its own
// segment for any flag.
Bits naive_point_adjust(const Bits& flags, const Bits& labels) {
    Bits out = flags;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i]) continue;
        std::size_t begin = i;
        while (begin > 0 && labels[begin - 1]) --begin;
        std::size_t end = i;
        while (end + 1 < labels.size() && labels[end + 1]) ++end;
        for (std::size_t j = begin; j <= end && !out[i]; ++j) {
            if (flags[j]) out[i] = 1;
        }
    }
    return out;
}

double naive_best_f1(const std::vector<double>& scores, const Bits& labels) {
    std::vector<double> distinct(scores);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> candidates{0.0, distinct.back() + 1.0};
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        candidates.push_back((distinct[i] + distinct[i + 1]) / 2.0);
    }
    double best = 0.0;
    for (double lambda : candidates) {
        Bits flags(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) flags[i] = scores[i] >= lambda;
        best = std::max(best, prf(point_adjust(flags, labels), labels).f1);
    }
    return best;
}

std::pair<std::vector<double>, Bits> random_instance(std::mt19937_64& rng, std::size_t n,
                                                     bool lattice) {
    std::uniform_real_distribution<double> score_dist(0.0, 1.0);
    std::uniform_int_distribution<int> lattice_dist(0, 100);
    std::uniform_int_distribution<int> run_dist(1, 5);
    std::vector<double> scores(n);
    for (double& s : scores) {
        s = lattice ? lattice_dist(rng) / 100.0 : score_dist(rng);
    }
    Bits labels(n, 0);
    std::size_t i = 0;
    bool state = false;
    while (i < n) {
        const std::size_t run = static_cast<std::size_t>(run_dist(rng));
        for (std::size_t j = 0; j < run && i < n; ++j, ++i) labels[i] = state ? 1 : 0;
        state = !state;
    }
    if (std::none_of(labels.begin(), labels.end(), [](auto l) { return l == 1; })) labels[0] = 1;
    if (std::none_of(labels.begin(), labels.end(), [](auto l) { return l == 0; })) labels[0] = 0;
    return {scores, labels};
}

} // namespace

TEST_CASE("point adjustment fills a partially detected segment") {
    Bits labels{0, 1, 1, 1, 0};
    Bits flags{0, 0, 1, 0, 0};
    CHECK(point_adjust(flags, labels) == Bits{0, 1, 1, 1, 0});
}

TEST_CASE("point adjustment leaves empty flags and empty labels alone") {
    Bits labels{0, 1, 1, 0};
    Bits none{0, 0, 0, 0};
    CHECK(point_adjust(none, labels) == none);
    Bits flags{1, 0, 1, 0};
    Bits clear{0, 0, 0, 0};
    CHECK(point_adjust(flags, clear) == flags);
}

TEST_CASE("point adjustment rejects mismatched lengths") {
    CHECK_THROWS_AS(point_adjust(Bits{1, 0}, Bits{1}), DimensionError);
}

TEST_CASE("point adjustment is idempotent and matches the naive oracle") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 300; ++trial) {
        auto [scores, labels] = random_instance(rng, 40, false);
        Bits flags(labels.size());
        for (auto& f : flags) f = static_cast<std::uint8_t>(coin(rng));
        Bits adjusted = point_adjust(flags, labels);
        CHECK(adjusted == naive_point_adjust(flags, labels));
        CHECK(point_adjust(adjusted, labels) == adjusted);
    }
}

TEST_CASE("point-adjusted F1 dominates raw F1") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        auto [scores, labels] = random_instance(rng, 50, false);
        Bits flags(labels.size());
        for (auto& f : flags) f = static_cast<std::uint8_t>(coin(rng));
        CHECK(prf(point_adjust(flags, labels), labels).f1 >= prf(flags, labels).f1);
    }
}

TEST_CASE("prf on perfect flags") {
    Bits labels{0, 1, 1, 0, 1};
    Prf out = prf(labels, labels);
    CHECK(out.precision == 1.0);
    CHECK(out.recall == 1.0);
    CHECK(out.f1 == 1.0);
}

TEST_CASE("prf with no predicted positives") {
    Bits labels{0, 1, 1, 0};
    Bits flags{0, 0, 0, 0};
    Prf out = prf(flags, labels);
    CHECK(out.recall == 0.0);
    CHECK(out.f1 == 0.0);
}

TEST_CASE("prf hand example") {
    // TP=2, FP=1, FN=1.
    Bits labels{1, 1, 1, 0, 0};
    Bits flags{1, 1, 0, 1, 0};
    Prf out = prf(flags, labels);
    CHECK(out.precision == doctest::Approx(2.0 / 3.0));
    CHECK(out.recall == doctest::Approx(2.0 / 3.0));
    CHECK(out.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("auroc separating scores score 1") {
    std::vector<double> scores{0.1, 0.2, 0.8, 0.9};
    Bits labels{0, 0, 1, 1};
    CHECK(auroc(scores, labels, false) == doctest::Approx(1.0));
    CHECK(auroc(scores, labels, true) == doctest::Approx(1.0));
}

TEST_CASE("auroc tie convention gives one half on constant scores") {
    std::vector<double> scores{0.4, 0.4, 0.4, 0.4};
    Bits labels{0, 1, 0, 1};
    CHECK(auroc(scores, labels, false) == doctest::Approx(0.5));
    CHECK(auroc(scores, labels, true) == doctest::Approx(0.5));
}

TEST_CASE("auroc hand example, unadjusted") {
    std::vector<double> scores{0.1, 0.4, 0.35, 0.8};
    Bits labels{0, 0, 1, 1};
    CHECK(auroc(scores, labels, false) == doctest::Approx(0.75));
}

TEST_CASE("unadjusted auroc is invariant under strictly increasing transforms") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        auto [scores, labels] = random_instance(rng, 30, false);
        std::vector<double> cubed(scores);
        for (double& s : cubed) s = s * s * s + 2.0;
        CHECK(auroc(scores, labels, false) ==
              doctest::Approx(auroc(cubed, labels, false)).epsilon(1e-12));
    }
}

TEST_CASE("auroc rejects single-class labels") {
    std::vector<double> scores{0.1, 0.2};
    CHECK_THROWS_AS(auroc(scores, Bits{1, 1}, false), MetricError);
    CHECK_THROWS_AS(auroc(scores, Bits{0, 0}, true), MetricError);
}

TEST_CASE("adjusted auroc matches a naive threshold sweep") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 40; ++trial) {
        auto [scores, labels] = random_instance(rng, 36, false);
        std::size_t positives = 0, negatives = 0;
        for (auto l : labels) l ? ++positives : ++negatives;
        std::vector<double> thresholds(scores);
        std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
        double area = 0.0, prev_tpr = 0.0, prev_fpr = 0.0;
        for (double threshold : thresholds) {
            Bits flags(scores.size());
            for (std::size_t i = 0; i < scores.size(); ++i) flags[i] = scores[i] >= threshold;
            Bits adjusted = point_adjust(flags, labels);
            std::size_t tp = 0, fp = 0;
            for (std::size_t i = 0; i < adjusted.size(); ++i) {
                if (adjusted[i] && labels[i]) ++tp;
                if (adjusted[i] && !labels[i]) ++fp;
            }
            const double tpr = double(tp) / double(positives);
            const double fpr = double(fp) / double(negatives);
            area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
            prev_tpr = tpr;
            prev_fpr = fpr;
        }
        area += (1.0 - prev_fpr) * (1.0 + prev_tpr) / 2.0;
        CHECK(auroc(scores, labels, true) == doctest::Approx(area).epsilon(1e-12));
    }
}

TEST_CASE("threshold search on 0/1 scores equal to labels is perfect") {
    std::vector<double> scores{0.0, 1.0, 1.0, 0.0, 1.0};
    Bits labels{0, 1, 1, 0, 1};
    ThresholdSearchResult best = threshold_search(scores, labels);
    CHECK(best.f1 == doctest::Approx(1.0));
}

TEST_CASE("threshold search matches the midpoint brute force on lattice scores") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        auto [scores, labels] = random_instance(rng, 50, true);
        ThresholdSearchResult best = threshold_search(scores, labels);
        CHECK(best.f1 == doctest::Approx(naive_best_f1(scores, labels)).epsilon(1e-12));
    }
}

TEST_CASE("threshold search is scale invariant") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        auto [scores, labels] = random_instance(rng, 40, true);
        std::vector<double> scaled(scores);
        for (double& s : scaled) s *= 0.125;
        CHECK(threshold_search(scores, labels).f1 ==
              doctest::Approx(threshold_search(scaled, labels).f1).epsilon(1e-12));
    }
}

TEST_CASE("midpoint-refined best F1 is invariant under monotone transforms") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 30; ++trial) {
        auto [scores, labels] = random_instance(rng, 30, false);
        std::vector<double> cubed(scores);
        for (double& s : cubed) s = s * s * s;
        CHECK(naive_best_f1(scores, labels) ==
              doctest::Approx(naive_best_f1(cubed, labels)).epsilon(1e-12));
    }
}

TEST_CASE("threshold search dominates any grid threshold") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        auto [scores, labels] = random_instance(rng, 40, false);
        ThresholdSearchResult best = threshold_search(scores, labels);
        const double max_score = *std::max_element(scores.begin(), scores.end());
        std::uniform_int_distribution<int> grid(0, 10000);
        for (int probe = 0; probe < 50; ++probe) {
            const double lambda = max_score * grid(rng) / 10000.0;
            Bits flags(scores.size());
            for (std::size_t i = 0; i < scores.size(); ++i) flags[i] = scores[i] >= lambda;
            CHECK(best.f1 >= prf(point_adjust(flags, labels), labels).f1 - 1e-12);
        }
    }
}

TEST_CASE("threshold search rejects empty input") {
    CHECK_THROWS_AS(threshold_search({}, {}), DataError);
}

TEST_CASE("aggregate of a single run reduces the macro F1 to the run F1") {
    RunMetrics run{.precision = 0.8, .recall = 0.4, .f1 = 2.0 * 0.8 * 0.4 / 1.2,
                   .auroc = 0.9, .lambda = 0.3};
    MetricBundle bundle = aggregate({{run}});
    CHECK(bundle.f1_macro == doctest::Approx(run.f1));
    CHECK(bundle.f1_micro == doctest::Approx(run.f1));
    CHECK(bundle.auroc == doctest::Approx(0.9));
}

TEST_CASE("aggregate of identical runs equals any single run") {
    RunMetrics run{.precision = 0.7, .recall = 0.6, .f1 = 0.646, .auroc = 0.91, .lambda = 0.2};
    MetricBundle bundle = aggregate({{run, run}, {run, run}});
    CHECK(bundle.precision == doctest::Approx(0.7));
    CHECK(bundle.recall == doctest::Approx(0.6));
    CHECK(bundle.f1_micro == doctest::Approx(0.646));
}

TEST_CASE("aggregate hand example for the macro F1") {
    RunMetrics a{.precision = 1.0, .recall = 0.5, .f1 = 2.0 / 3.0, .auroc = 1.0, .lambda = 0.0};
    RunMetrics b{.precision = 0.5, .recall = 1.0, .f1 = 2.0 / 3.0, .auroc = 1.0, .lambda = 0.0};
    MetricBundle bundle = aggregate({{a, b}});
    CHECK(bundle.precision == doctest::Approx(0.75));
    CHECK(bundle.recall == doctest::Approx(0.75));
    CHECK(bundle.f1_macro == doctest::Approx(0.75));
}

TEST_CASE("aggregate rejects ragged grids") {
    RunMetrics run;
    CHECK_THROWS_AS(aggregate({{run, run}, {run}}), DataError);
    CHECK_THROWS_AS(aggregate({}), DataError);
}

TEST_CASE("all aggregated metrics stay in the unit interval") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<std::vector<RunMetrics>> grid(3, std::vector<RunMetrics>(4));
    for (auto& row : grid) {
        for (RunMetrics& run : row) {
            run.precision = dist(rng);
            run.recall = dist(rng);
            run.f1 = run.precision + run.recall == 0.0
                         ? 0.0
                         : 2.0 * run.precision * run.recall / (run.precision + run.recall);
            run.auroc = dist(rng);
        }
    }
    MetricBundle bundle = aggregate(grid);
    for (double v : {bundle.precision, bundle.recall, bundle.f1_micro, bundle.f1_macro,
                     bundle.auroc}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

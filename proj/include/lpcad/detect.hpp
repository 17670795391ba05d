#pragma once

#include <filesystem>

#include "lpcad/model.hpp"
#include "lpcad/series.hpp"

namespace lpcad {

enum class NoiseMode {
    Sample,        // one seeded N(0, sigma2 I) draw per window
    Deterministic, // eps = 0
    MonteCarlo,    // reconstruction averaged over `draws` seeded samples
};

struct NoiseSpec {
    NoiseMode mode = NoiseMode::Deterministic;
    std::size_t draws = 1; // MonteCarlo only
    std::uint64_t seed = 0;
};

// "sample" | "deterministic" | "mc:<k>"
NoiseSpec parse_noise_spec(const std::string& text, std::uint64_t seed);

struct ScoreResult {
    std::size_t first_scored = 0;        // == l_h; earlier timestamps are unscored
    std::vector<double> scores;          // one entry per scored timestamp
    std::vector<double> reconstruction;  // row-major (scored count) x M
    std::size_t metrics = 0;

    std::size_t scored_count() const { return scores.size(); }
};

// Slides anchor windows with stride l over the test series so that every
// timestamp past the first l_h is scored exactly once; a final window
// anchored at T - l covers the tail, with earlier anchors winning on
// overlap. Score is the Euclidean norm of x_t - x~_t over the M metrics.
ScoreResult score_windows(const ModelParams& params, const SeriesMatrix& test,
                          const NoiseSpec& noise);

struct DetectionReport {
    std::size_t first_scored = 0;
    double lambda = 0.0;
    std::vector<double> scores;
    std::vector<std::uint8_t> flags; // flags[i] = scores[i] >= lambda
};

DetectionReport detect(const ScoreResult& scores, double lambda);

// Score dump, one "timestamp,score,flag" line per scored timestamp.
void write_scores(const std::filesystem::path& path, const DetectionReport& report);

struct ScoreFile {
    std::vector<std::size_t> timestamps;
    std::vector<double> scores;
    std::vector<std::uint8_t> flags;
};

ScoreFile read_scores(const std::filesystem::path& path);

} // namespace lpcad

#pragma once

#include <filesystem>
#include <optional>

#include "lpcad/detect.hpp"
#include "lpcad/pipeline.hpp"
#include "lpcad/series.hpp"

namespace lpcad {

// Directory layout: train.csv and test.csv hold one comma-separated row of M
// floats per timestamp (no header); test_label.csv holds one 0/1 per line.
DatasetBundle load_dataset(const std::filesystem::path& dir);
void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);

// Synthetic generator: mixed sinusoids plus an optional chaotic driver and
// Gaussian noise, test split continuing the train split. Anomaly segments
// (spikes, level shifts, dependence breaks) are injected into the test split
// only, with exact labels, placed non-overlapping after the guard prefix.
struct SynthSpec {
    std::size_t train_len = 2000;
    std::size_t test_len = 1000;
    std::size_t metrics = 8;
    std::uint64_t seed = 42;
    double noise_std = 0.05;
    // Chaotic (logistic-map) component shared across channels; weight 0
    // leaves the base signal linearly predictable from a short history.
    double chaos_weight = 0.0;
    // Per-step probability that the driver state re-draws uniformly: sporadic
    // regime shifts that are normal behavior yet unpredictable from history.
    double shock_prob = 0.0;
    std::size_t spike_count = 3;
    double spike_magnitude = 0.8;
    std::size_t shift_count = 2;
    double shift_magnitude = 0.5;
    std::size_t break_count = 1;
    // Dependence jumps: every channel switches coherently to a shifted clock
    // with a fresh chaotic state, so each window looks locally normal but the
    // history -> future continuity breaks. The last jump_pad labeled rows are
    // left unshifted so windows straddling the jump back only flag labeled
    // points.
    std::size_t jump_count = 0;
    std::size_t jump_pad = 12;
    std::size_t segment_min = 5;
    std::size_t segment_max = 20;
    std::size_t guard = 10; // segments start at or after this test row

    std::size_t segment_count() const {
        return spike_count + shift_count + break_count + jump_count;
    }
};

SynthSpec parse_synth_spec(const std::filesystem::path& path);
DatasetBundle synth_generate(const SynthSpec& spec);

// Text checkpoint: hyperparameters, then every named tensor with its shape
// and 17-significant-digit values. The normalization statistics travel with
// the model so detection applies the train-split normalization.
struct Checkpoint {
    ModelParams params;
    NormalizationStats norm;
};

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const NormalizationStats& norm);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Per scored timestamp: t, the M observed values, the M reconstructed values,
// score, flag, label. Optionally restricted to [from, to).
void emit_plot_data(const std::filesystem::path& path, const SeriesMatrix& test,
                    const ScoreResult& scores, const DetectionReport& report,
                    std::optional<std::pair<std::size_t, std::size_t>> range = std::nullopt);

// Minimal static SVG with truth/reconstruction curves for the first metric
// and shaded labeled/flagged segments.
void emit_plot_svg(const std::filesystem::path& path, const SeriesMatrix& test,
                   const ScoreResult& scores, const DetectionReport& report,
                   std::optional<std::pair<std::size_t, std::size_t>> range = std::nullopt);

// Flat key=value config covering every training field; unknown keys error.
TrainConfig parse_train_config(const std::filesystem::path& path);

void write_loss_history(const std::filesystem::path& path, std::span<const double> epoch_loss);

} // namespace lpcad

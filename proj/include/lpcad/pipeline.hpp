#pragma once

#include <random>
#include <string>
#include <vector>

#include "lpcad/model.hpp"
#include "lpcad/series.hpp"

namespace lpcad {

// Per-dimension min/max of the training split plus the smoothing factor of
// the normalization x <- (x - min) / (max - min + alpha). The same stats are
// applied to both splits.
struct NormalizationStats {
    std::vector<double> min;
    std::vector<double> max;
    double alpha = 1e-4;
};

NormalizationStats fit_normalizer(const SeriesMatrix& train, double alpha);
SeriesMatrix apply_normalizer(const NormalizationStats& stats, const SeriesMatrix& series);

// Consecutive (history, future) window slices anchored at the first future
// timestamp (0-based).
struct WindowPair {
    std::size_t anchor = 0;
    Tensor history; // {M, l_h}
    Tensor future;  // {M, l}
};

// Anchors l_h, l_h+stride, ... while the future window still fits
// (anchor + l <= T). Throws when the series is shorter than l_h + l.
std::vector<WindowPair> make_window_pairs(const SeriesMatrix& series, std::size_t hist_len,
                                          std::size_t fut_len, std::size_t stride);

struct TrainConfig {
    std::size_t hist_len = 10;
    std::size_t fut_len = 2;
    std::size_t latent_dim = 8;
    std::size_t hidden_dim = 0; // 0: use ceil(M/2)
    std::size_t mc_samples = 10;
    double sigma2 = 1.0;
    double learning_rate = 1e-3;
    double alpha = 1e-4;
    std::size_t batch_size = 64;
    std::size_t max_epoch = 40;
    std::uint64_t seed = 1;
    std::string variant = "sa";

    void validate() const;
    // Hidden dimension after resolving the auto setting for M metrics.
    std::size_t resolved_hidden_dim(std::size_t input_dim) const;
    ModelHyper to_hyper(std::size_t input_dim) const;
};

// Per-window loss with the given noise draws: redundancy reduction terms
// |Wh - Wh^| + |W - W^| plus the Monte Carlo mean of |W~_k - W| over the
// draws. Norms are Frobenius. Variants without a perturbation path use their
// own composition for the third term (none for the plain autoencoder).
Tensor window_loss(Tape& tape, const ModelParams& params, const WindowPair& pair,
                   std::span<const Tensor> noise_draws);

// Draws mc_samples noise tensors from rng, then evaluates window_loss.
Tensor window_loss(Tape& tape, const ModelParams& params, const WindowPair& pair,
                   std::size_t mc_samples, std::mt19937_64& rng);

struct TrainResult {
    ModelParams params;
    std::vector<double> epoch_loss; // mean per-window loss, one entry per epoch
};

// Runs max_epoch epochs of shuffled minibatches, one Adam update per batch on
// the summed batch loss. Deterministic given the config seed. Throws
// DivergenceError when a batch loss becomes non-finite.
TrainResult train(const std::vector<WindowPair>& pairs, const TrainConfig& config,
                  std::size_t input_dim);

} // namespace lpcad

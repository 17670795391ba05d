#include "lpcad/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lpcad {

NormalizationStats fit_normalizer(const SeriesMatrix& train, double alpha) {
    if (train.timesteps == 0 || train.metrics == 0) {
        throw DataError("fit_normalizer: empty series");
    }
    if (alpha <= 0.0) throw ContractError("fit_normalizer: alpha must be positive");
    NormalizationStats stats;
    stats.alpha = alpha;
    stats.min.assign(train.metrics, std::numeric_limits<double>::infinity());
    stats.max.assign(train.metrics, -std::numeric_limits<double>::infinity());
    for (std::size_t t = 0; t < train.timesteps; ++t) {
        for (std::size_t m = 0; m < train.metrics; ++m) {
            const double v = train.at(t, m);
            stats.min[m] = std::min(stats.min[m], v);
            stats.max[m] = std::max(stats.max[m], v);
        }
    }
    return stats;
}

SeriesMatrix apply_normalizer(const NormalizationStats& stats, const SeriesMatrix& series) {
    if (series.metrics != stats.min.size()) {
        throw DimensionError("apply_normalizer: series has " + std::to_string(series.metrics) +
                             " metrics, stats cover " + std::to_string(stats.min.size()));
    }
    SeriesMatrix out = series;
    for (std::size_t m = 0; m < series.metrics; ++m) {
        const double denom = stats.max[m] - stats.min[m] + stats.alpha;
        for (std::size_t t = 0; t < series.timesteps; ++t) {
            out.at(t, m) = (series.at(t, m) - stats.min[m]) / denom;
        }
    }
    return out;
}

std::vector<WindowPair> make_window_pairs(const SeriesMatrix& series, std::size_t hist_len,
                                          std::size_t fut_len, std::size_t stride) {
    if (hist_len == 0 || fut_len == 0 || stride == 0) {
        throw ContractError("make_window_pairs: lengths and stride must be positive");
    }
    if (series.timesteps < hist_len + fut_len) {
        throw DataError("make_window_pairs: series of length " +
                        std::to_string(series.timesteps) + " is shorter than " +
                        std::to_string(hist_len + fut_len));
    }
    std::vector<WindowPair> pairs;
    for (std::size_t anchor = hist_len; anchor + fut_len <= series.timesteps; anchor += stride) {
        WindowPair pair;
        pair.anchor = anchor;
        std::vector<double> hist(series.metrics * hist_len);
        std::vector<double> fut(series.metrics * fut_len);
        for (std::size_t m = 0; m < series.metrics; ++m) {
            for (std::size_t j = 0; j < hist_len; ++j)
                hist[m * hist_len + j] = series.at(anchor - hist_len + j, m);
            for (std::size_t j = 0; j < fut_len; ++j)
                fut[m * fut_len + j] = series.at(anchor + j, m);
        }
        pair.history = Tensor::from_data({series.metrics, hist_len}, std::move(hist));
        pair.future = Tensor::from_data({series.metrics, fut_len}, std::move(fut));
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

void TrainConfig::validate() const {
    if (hist_len == 0 || fut_len == 0) throw ContractError("window lengths must be >= 1");
    if (mc_samples == 0) throw ContractError("mc_samples must be >= 1");
    if (batch_size == 0) throw ContractError("batch_size must be >= 1");
    if (latent_dim == 0) throw ContractError("latent_dim must be >= 1");
    if (sigma2 < 0.0) throw ContractError("sigma2 must be nonnegative");
    if (alpha <= 0.0) throw ContractError("alpha must be positive");
    ModelHyper::with_variant_tag(ModelHyper{}, variant); // tag check
}

std::size_t TrainConfig::resolved_hidden_dim(std::size_t input_dim) const {
    if (hidden_dim > 0) return hidden_dim;
    return (input_dim + 1) / 2;
}

ModelHyper TrainConfig::to_hyper(std::size_t input_dim) const {
    ModelHyper hyper;
    hyper.input_dim = input_dim;
    hyper.latent_dim = latent_dim;
    hyper.hist_len = hist_len;
    hyper.fut_len = fut_len;
    hyper.hidden_dim = resolved_hidden_dim(input_dim);
    hyper.sigma2 = sigma2;
    hyper = ModelHyper::with_variant_tag(hyper, variant);
    hyper.validate();
    return hyper;
}

Tensor window_loss(Tape& tape, const ModelParams& params, const WindowPair& pair,
                   std::span<const Tensor> noise_draws) {
    LatentWindows latents = seq_enc(tape, params, pair.history, pair.future);
    auto [hist_rec, fut_rec] = seq_dec(tape, params, latents.hist, latents.fut);
    Tensor loss = tape.add(tape.frobenius_norm(tape.sub(pair.history, hist_rec)),
                           tape.frobenius_norm(tape.sub(pair.future, fut_rec)));
    if (params.hyper.predictor == PredictorKind::None) return loss;

    std::vector<Tensor> predicted = predict_latents(tape, params, latents.hist);
    if (!params.hyper.perturb) {
        auto [ignored, rec] = seq_dec(tape, params, latents.hist, predicted);
        return tape.add(loss, tape.frobenius_norm(tape.sub(rec, pair.future)));
    }
    if (noise_draws.empty()) throw ContractError("window_loss: needs at least one noise draw");
    Tensor mc;
    for (const Tensor& eps : noise_draws) {
        std::vector<Tensor> perturbed = rand_perturb(tape, latents.fut, predicted, eps);
        auto [ignored, rec] = seq_dec(tape, params, latents.hist, perturbed);
        Tensor term = tape.frobenius_norm(tape.sub(rec, pair.future));
        mc = mc.defined() ? tape.add(mc, term) : term;
    }
    return tape.add(loss, tape.scale(mc, 1.0 / static_cast<double>(noise_draws.size())));
}

Tensor window_loss(Tape& tape, const ModelParams& params, const WindowPair& pair,
                   std::size_t mc_samples, std::mt19937_64& rng) {
    std::vector<Tensor> draws;
    if (params.hyper.predictor != PredictorKind::None && params.hyper.perturb) {
        draws.reserve(mc_samples);
        for (std::size_t k = 0; k < mc_samples; ++k) {
            draws.push_back(sample_noise(params.hyper.fut_len, params.hyper.latent_dim,
                                         params.hyper.sigma2, rng));
        }
    }
    return window_loss(tape, params, pair, draws);
}

TrainResult train(const std::vector<WindowPair>& pairs, const TrainConfig& config,
                  std::size_t input_dim) {
    config.validate();
    if (pairs.empty()) throw DataError("train: no window pairs");

    std::mt19937_64 rng(config.seed);
    ModelParams params = ModelParams::create(config.to_hyper(input_dim), rng);
    AdamOptimizer adam(params.parameters(), {.learning_rate = config.learning_rate});

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result{std::move(params), {}};
    result.epoch_loss.reserve(config.max_epoch);
    for (std::size_t epoch = 0; epoch < config.max_epoch; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            Tape tape;
            Tensor batch_loss;
            for (std::size_t i = start; i < stop; ++i) {
                Tensor loss = window_loss(tape, result.params, pairs[order[i]],
                                          config.mc_samples, rng);
                batch_loss = batch_loss.defined() ? tape.add(batch_loss, loss) : loss;
            }
            const double value = batch_loss.item();
            if (!std::isfinite(value)) {
                throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) +
                                      ", batch starting at pair " + std::to_string(start));
            }
            epoch_sum += value;
            tape.backward(batch_loss);
            adam.step();
        }
        result.epoch_loss.push_back(epoch_sum / static_cast<double>(pairs.size()));
    }
    return result;
}

} // namespace lpcad

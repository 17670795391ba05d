#pragma once

#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lpcad/layers.hpp"

namespace lpcad {

enum class PredictorKind { Linear, Seq2Seq, Seq2SeqAttention, None };

// Model variant tags used by the CLI and checkpoints:
//   sa - attention seq2seq predictor, Gaussian perturbation
//   s  - LSTM seq2seq predictor, Gaussian perturbation
//   l  - linear predictor, Gaussian perturbation
//   ae - autoencoder only (no predictor, no perturbation)
//   n  - seq2seq predictor, perturbation replaced by the prediction itself
struct ModelHyper {
    std::size_t input_dim = 0;  // M
    std::size_t latent_dim = 0; // N, must satisfy N < M
    std::size_t hist_len = 0;   // l_h
    std::size_t fut_len = 0;    // l
    std::size_t hidden_dim = 0; // LSTM hidden size
    PredictorKind predictor = PredictorKind::Seq2Seq;
    bool perturb = true;        // false: decode the prediction directly
    double sigma2 = 1.0;        // noise variance (diagonal covariance)

    std::string variant_tag() const;
    static ModelHyper with_variant_tag(ModelHyper base, const std::string& tag);
    void validate() const;
};

// All trainable state: encoder (LSTM + linear to latent), decoder (LSTM +
// linear back to input space) and the predictor for the configured variant.
struct ModelParams {
    ModelHyper hyper;
    LstmCell enc_lstm;    // M -> H
    LinearLayer enc_out;  // H -> N
    LstmCell dec_lstm;    // N -> H
    LinearLayer dec_out;  // H -> M
    // Linear predictor
    Tensor pred_p; // {N,N}
    Tensor pred_q; // {l_h, l}
    // Seq2seq / attention predictor
    LstmCell pred_enc;    // N -> H
    LstmCell pred_dec;    // N (or 2N with attention) -> H
    LinearLayer pred_out; // H -> N
    AttentionParams attention;

    static ModelParams create(const ModelHyper& hyper, std::mt19937_64& rng);
    static ModelParams zeros(const ModelHyper& hyper);

    std::vector<std::pair<std::string, Tensor>> named_parameters() const;
    std::vector<Tensor> parameters() const;
};

struct LatentWindows {
    std::vector<Tensor> hist; // l_h vectors of length N
    std::vector<Tensor> fut;  // l vectors of length N
};

// One continuous LSTM pass over history followed by future (state carried
// across the boundary), each hidden state mapped to latent dimension N.
LatentWindows seq_enc(Tape& tape, const ModelParams& params, const Tensor& hist_window,
                      const Tensor& fut_window);

// LSTM pass over the concatenated latent sequence, each hidden state mapped
// back to dimension M; returns the (history, future) window reconstructions
// as {M, l_h} and {M, l} matrices.
std::pair<Tensor, Tensor> seq_dec(Tape& tape, const ModelParams& params,
                                  std::span<const Tensor> hist_latents,
                                  std::span<const Tensor> fut_latents);

// Z_hat = P Z Q with Z the {N, l_h} matrix of stacked history latents.
std::vector<Tensor> predic_linear(Tape& tape, const Tensor& p, const Tensor& q,
                                  std::span<const Tensor> hist_latents);

// Autoregressive LSTM seq2seq: decoder starts from the final encoder state,
// the first input is the last history latent, then each step feeds back its
// own prediction. No teacher forcing.
std::vector<Tensor> predic_seq2seq(Tape& tape, const LstmCell& encoder, const LstmCell& decoder,
                                   const LinearLayer& out, std::span<const Tensor> hist_latents,
                                   std::size_t fut_len);

// As predic_seq2seq, but every decoder step attends over the full latent
// history and conditions on [previous prediction, context].
std::vector<Tensor> predic_attention(Tape& tape, const LstmCell& encoder, const LstmCell& decoder,
                                     const LinearLayer& out, const AttentionParams& attention,
                                     std::span<const Tensor> hist_latents, std::size_t fut_len);

// Dispatch on params.hyper.predictor.
std::vector<Tensor> predict_latents(Tape& tape, const ModelParams& params,
                                    std::span<const Tensor> hist_latents);

// Z_tilde = Z + eps (.) |Z - Z_hat|, rowwise over the future window.
// eps is an {l, N} tensor; gradients flow through both latent sequences.
std::vector<Tensor> rand_perturb(Tape& tape, std::span<const Tensor> true_latents,
                                 std::span<const Tensor> predicted_latents, const Tensor& eps);

// Full composition: encode, predict, perturb, decode [Z_hist, Z_tilde];
// returns the future-window reconstruction {M, l}.
Tensor lpc_reconstruct(Tape& tape, const ModelParams& params, const Tensor& hist_window,
                       const Tensor& fut_window, const Tensor& eps);

enum class ReconstructMode {
    Full,             // encode -> predict -> perturb -> decode
    Autoencode,       // decode the true latents, no predictor involved
    PredictedLatents, // decode [Z_hist, Z_hat], eps ignored
};

Tensor variant_reconstruct(Tape& tape, ReconstructMode mode, const ModelParams& params,
                           const Tensor& hist_window, const Tensor& fut_window,
                           const Tensor& eps);

// Mode implied by the hyperparameters (predictor kind + perturb flag).
ReconstructMode mode_for(const ModelHyper& hyper);

// {fut_len, latent_dim} draw with i.i.d. N(0, sigma2) entries; all zeros when
// sigma2 == 0 without consuming randomness.
Tensor sample_noise(std::size_t fut_len, std::size_t latent_dim, double sigma2,
                    std::mt19937_64& rng);

} // namespace lpcad

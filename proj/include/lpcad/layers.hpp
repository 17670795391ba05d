#pragma once

#include <random>
#include <span>
#include <vector>

#include "lpcad/tensor.hpp"

namespace lpcad {

// Affine map y = W x + b.
struct LinearLayer {
    Tensor weight; // {out, in}
    Tensor bias;   // {out}

    static LinearLayer create(std::size_t out_dim, std::size_t in_dim, std::mt19937_64& rng);
    static LinearLayer zeros(std::size_t out_dim, std::size_t in_dim);
    Tensor forward(Tape& tape, const Tensor& x) const;
    std::size_t out_dim() const { return weight.rows(); }
    std::size_t in_dim() const { return weight.cols(); }
};

struct LstmState {
    Tensor hidden; // {d_h}
    Tensor cell;   // {d_h}
};

// Single-layer LSTM cell: sigmoid input/forget/output gates, tanh candidate.
// Parameters are initialized uniform in [-1/sqrt(d_h), +1/sqrt(d_h)] except
// the forget-gate bias, which starts at 1.
struct LstmCell {
    Tensor w_i, u_i, b_i; // input gate        {d_h,d_in} {d_h,d_h} {d_h}
    Tensor w_f, u_f, b_f; // forget gate
    Tensor w_o, u_o, b_o; // output gate
    Tensor w_g, u_g, b_g; // candidate

    static LstmCell create(std::size_t input_dim, std::size_t hidden_dim, std::mt19937_64& rng);
    static LstmCell zeros(std::size_t input_dim, std::size_t hidden_dim);

    std::size_t input_dim() const { return w_i.cols(); }
    std::size_t hidden_dim() const { return w_i.rows(); }
    LstmState zero_state() const;

    LstmState step(Tape& tape, const Tensor& x, const LstmState& prev) const;

    // Left fold of step over the sequence; returns the state after every
    // input, in order. Throws on an empty sequence.
    std::vector<LstmState> run(Tape& tape, std::span<const Tensor> inputs,
                               const LstmState& init) const;
};

// Alignment parameters for additive attention over encoded latents:
// score l_i = v . tanh(W [s, d] + U z_i).
struct AttentionParams {
    Tensor v; // {align}
    Tensor w; // {align, 2*hidden}
    Tensor u; // {align, latent}

    static AttentionParams create(std::size_t align_dim, std::size_t hidden_dim,
                                  std::size_t latent_dim, std::mt19937_64& rng);
    static AttentionParams zeros(std::size_t align_dim, std::size_t hidden_dim,
                                 std::size_t latent_dim);
};

// Softmax-normalized attention weights over the latent history, conditioned
// on the previous decoder hidden and cell state. Output sums to 1.
Tensor attention_scores(Tape& tape, const AttentionParams& params, const Tensor& s_prev,
                        const Tensor& d_prev, std::span<const Tensor> latents);

// Context vector sum_i beta_i z_i. Requires beta to be a probability vector
// (nonnegative, sums to 1 within 1e-9).
Tensor attention_context(Tape& tape, const Tensor& betas, std::span<const Tensor> latents);

// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
Tensor init_uniform(const Shape& shape, std::size_t fan_in, std::mt19937_64& rng);

} // namespace lpcad

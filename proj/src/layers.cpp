#include "lpcad/layers.hpp"

#include <cmath>
#include <string>

namespace lpcad {

Tensor init_uniform(const Shape& shape, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    std::vector<double> values(n);
    for (double& v : values) v = dist(rng);
    return Tensor::from_data(shape, std::move(values), true);
}

LinearLayer LinearLayer::create(std::size_t out_dim, std::size_t in_dim, std::mt19937_64& rng) {
    LinearLayer layer;
    layer.weight = init_uniform({out_dim, in_dim}, in_dim, rng);
    layer.bias = init_uniform({out_dim}, in_dim, rng);
    return layer;
}

LinearLayer LinearLayer::zeros(std::size_t out_dim, std::size_t in_dim) {
    LinearLayer layer;
    layer.weight = Tensor::zeros({out_dim, in_dim}, true);
    layer.bias = Tensor::zeros({out_dim}, true);
    return layer;
}

Tensor LinearLayer::forward(Tape& tape, const Tensor& x) const {
    return tape.add(tape.matvec(weight, x), bias);
}

LstmCell LstmCell::create(std::size_t input_dim, std::size_t hidden_dim, std::mt19937_64& rng) {
    LstmCell cell;
    auto gate = [&](Tensor& w, Tensor& u, Tensor& b) {
        w = init_uniform({hidden_dim, input_dim}, hidden_dim, rng);
        u = init_uniform({hidden_dim, hidden_dim}, hidden_dim, rng);
        b = init_uniform({hidden_dim}, hidden_dim, rng);
    };
    gate(cell.w_i, cell.u_i, cell.b_i);
    gate(cell.w_f, cell.u_f, cell.b_f);
    gate(cell.w_o, cell.u_o, cell.b_o);
    gate(cell.w_g, cell.u_g, cell.b_g);
    // Forget-gate bias starts open.
    cell.b_f = Tensor::full({hidden_dim}, 1.0, true);
    return cell;
}

LstmCell LstmCell::zeros(std::size_t input_dim, std::size_t hidden_dim) {
    LstmCell cell;
    auto gate = [&](Tensor& w, Tensor& u, Tensor& b) {
        w = Tensor::zeros({hidden_dim, input_dim}, true);
        u = Tensor::zeros({hidden_dim, hidden_dim}, true);
        b = Tensor::zeros({hidden_dim}, true);
    };
    gate(cell.w_i, cell.u_i, cell.b_i);
    gate(cell.w_f, cell.u_f, cell.b_f);
    gate(cell.w_o, cell.u_o, cell.b_o);
    gate(cell.w_g, cell.u_g, cell.b_g);
    return cell;
}

LstmState LstmCell::zero_state() const {
    return {Tensor::zeros({hidden_dim()}), Tensor::zeros({hidden_dim()})};
}

LstmState LstmCell::step(Tape& tape, const Tensor& x, const LstmState& prev) const {
    if (x.ndim() != 1 || x.size() != input_dim()) {
        throw DimensionError("lstm step: input has " + std::to_string(x.size()) +
                             " entries, cell expects " + std::to_string(input_dim()));
    }
    if (prev.hidden.size() != hidden_dim() || prev.cell.size() != hidden_dim()) {
        throw DimensionError("lstm step: state size mismatch");
    }
    auto gate_pre = [&](const Tensor& w, const Tensor& u, const Tensor& b) {
        return tape.add(tape.add(tape.matvec(w, x), tape.matvec(u, prev.hidden)), b);
    };
    Tensor in_gate = tape.sigmoid(gate_pre(w_i, u_i, b_i));
    Tensor forget_gate = tape.sigmoid(gate_pre(w_f, u_f, b_f));
    Tensor out_gate = tape.sigmoid(gate_pre(w_o, u_o, b_o));
    Tensor candidate = tape.tanh(gate_pre(w_g, u_g, b_g));
    Tensor cell = tape.add(tape.mul(forget_gate, prev.cell), tape.mul(in_gate, candidate));
    Tensor hidden = tape.mul(out_gate, tape.tanh(cell));
    return {hidden, cell};
}

std::vector<LstmState> LstmCell::run(Tape& tape, std::span<const Tensor> inputs,
                                     const LstmState& init) const {
    if (inputs.empty()) throw ContractError("lstm run: empty input sequence");
    std::vector<LstmState> states;
    states.reserve(inputs.size());
    LstmState state = init;
    for (const Tensor& x : inputs) {
        state = step(tape, x, state);
        states.push_back(state);
    }
    return states;
}

AttentionParams AttentionParams::create(std::size_t align_dim, std::size_t hidden_dim,
                                        std::size_t latent_dim, std::mt19937_64& rng) {
    AttentionParams params;
    params.v = init_uniform({align_dim}, align_dim, rng);
    params.w = init_uniform({align_dim, 2 * hidden_dim}, 2 * hidden_dim, rng);
    params.u = init_uniform({align_dim, latent_dim}, latent_dim, rng);
    return params;
}

AttentionParams AttentionParams::zeros(std::size_t align_dim, std::size_t hidden_dim,
                                       std::size_t latent_dim) {
    AttentionParams params;
    params.v = Tensor::zeros({align_dim}, true);
    params.w = Tensor::zeros({align_dim, 2 * hidden_dim}, true);
    params.u = Tensor::zeros({align_dim, latent_dim}, true);
    return params;
}

Tensor attention_scores(Tape& tape, const AttentionParams& params, const Tensor& s_prev,
                        const Tensor& d_prev, std::span<const Tensor> latents) {
    if (latents.empty()) throw ContractError("attention scores: empty latent history");
    Tensor state = tape.concat(s_prev, d_prev);
    if (state.size() != params.w.cols()) {
        throw DimensionError("attention scores: state size " + std::to_string(state.size()) +
                             " does not match W columns " + std::to_string(params.w.cols()));
    }
    Tensor projected = tape.matvec(params.w, state);
    Tensor logits;
    for (std::size_t i = 0; i < latents.size(); ++i) {
        Tensor aligned = tape.tanh(tape.add(projected, tape.matvec(params.u, latents[i])));
        Tensor score = tape.dot(params.v, aligned);
        logits = i == 0 ? score : tape.concat(logits, score);
    }
    return tape.softmax(logits);
}

Tensor attention_context(Tape& tape, const Tensor& betas, std::span<const Tensor> latents) {
    if (betas.ndim() != 1 || betas.size() != latents.size()) {
        throw DimensionError("attention context: " + std::to_string(betas.size()) +
                             " weights for " + std::to_string(latents.size()) + " latents");
    }
    double total = 0.0;
    for (double b : betas.values()) {
        if (b < -1e-12) throw ContractError("attention context: negative weight");
        total += b;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
        throw ContractError("attention context: weights sum to " + std::to_string(total));
    }
    return tape.matvec(tape.stack_cols(latents), betas);
}

} // namespace lpcad

#include "lpcad/model.hpp"

#include <cmath>

namespace lpcad {

std::string ModelHyper::variant_tag() const {
    if (predictor == PredictorKind::None) return "ae";
    if (!perturb) return "n";
    switch (predictor) {
        case PredictorKind::Linear: return "l";
        case PredictorKind::Seq2Seq: return "s";
        case PredictorKind::Seq2SeqAttention: return "sa";
        default: return "ae";
    }
}

ModelHyper ModelHyper::with_variant_tag(ModelHyper base, const std::string& tag) {
    if (tag == "sa") {
        base.predictor = PredictorKind::Seq2SeqAttention;
        base.perturb = true;
    } else if (tag == "s") {
        base.predictor = PredictorKind::Seq2Seq;
        base.perturb = true;
    } else if (tag == "l") {
        base.predictor = PredictorKind::Linear;
        base.perturb = true;
    } else if (tag == "ae") {
        base.predictor = PredictorKind::None;
        base.perturb = false;
    } else if (tag == "n") {
        base.predictor = PredictorKind::Seq2Seq;
        base.perturb = false;
    } else {
        throw DataError("unknown variant tag '" + tag + "' (expected sa|s|l|ae|n)");
    }
    return base;
}

void ModelHyper::validate() const {
    if (input_dim == 0 || latent_dim == 0 || hist_len == 0 || fut_len == 0 || hidden_dim == 0) {
        throw ContractError("model hyperparameters must be positive");
    }
    if (latent_dim >= input_dim) {
        throw ContractError("latent dimension " + std::to_string(latent_dim) +
                            " must be smaller than input dimension " +
                            std::to_string(input_dim));
    }
    if (sigma2 < 0.0) throw ContractError("sigma2 must be nonnegative");
}

ModelParams ModelParams::create(const ModelHyper& hyper, std::mt19937_64& rng) {
    hyper.validate();
    ModelParams params;
    params.hyper = hyper;
    const std::size_t m = hyper.input_dim, n = hyper.latent_dim, h = hyper.hidden_dim;
    params.enc_lstm = LstmCell::create(m, h, rng);
    params.enc_out = LinearLayer::create(n, h, rng);
    params.dec_lstm = LstmCell::create(n, h, rng);
    params.dec_out = LinearLayer::create(m, h, rng);
    switch (hyper.predictor) {
        case PredictorKind::Linear:
            params.pred_p = init_uniform({n, n}, n, rng);
            params.pred_q = init_uniform({hyper.hist_len, hyper.fut_len}, hyper.hist_len, rng);
            break;
        case PredictorKind::Seq2Seq:
            params.pred_enc = LstmCell::create(n, h, rng);
            params.pred_dec = LstmCell::create(n, h, rng);
            params.pred_out = LinearLayer::create(n, h, rng);
            break;
        case PredictorKind::Seq2SeqAttention:
            params.pred_enc = LstmCell::create(n, h, rng);
            params.pred_dec = LstmCell::create(2 * n, h, rng);
            params.pred_out = LinearLayer::create(n, h, rng);
            params.attention = AttentionParams::create(h, h, n, rng);
            break;
        case PredictorKind::None:
            break;
    }
    return params;
}

ModelParams ModelParams::zeros(const ModelHyper& hyper) {
    hyper.validate();
    ModelParams params;
    params.hyper = hyper;
    const std::size_t m = hyper.input_dim, n = hyper.latent_dim, h = hyper.hidden_dim;
    params.enc_lstm = LstmCell::zeros(m, h);
    params.enc_out = LinearLayer::zeros(n, h);
    params.dec_lstm = LstmCell::zeros(n, h);
    params.dec_out = LinearLayer::zeros(m, h);
    switch (hyper.predictor) {
        case PredictorKind::Linear:
            params.pred_p = Tensor::zeros({n, n}, true);
            params.pred_q = Tensor::zeros({hyper.hist_len, hyper.fut_len}, true);
            break;
        case PredictorKind::Seq2Seq:
            params.pred_enc = LstmCell::zeros(n, h);
            params.pred_dec = LstmCell::zeros(n, h);
            params.pred_out = LinearLayer::zeros(n, h);
            break;
        case PredictorKind::Seq2SeqAttention:
            params.pred_enc = LstmCell::zeros(n, h);
            params.pred_dec = LstmCell::zeros(2 * n, h);
            params.pred_out = LinearLayer::zeros(n, h);
            params.attention = AttentionParams::zeros(h, h, n);
            break;
        case PredictorKind::None:
            break;
    }
    return params;
}

namespace {

void append_lstm(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
                 const LstmCell& cell) {
    out.emplace_back(prefix + ".w_i", cell.w_i);
    out.emplace_back(prefix + ".u_i", cell.u_i);
    out.emplace_back(prefix + ".b_i", cell.b_i);
    out.emplace_back(prefix + ".w_f", cell.w_f);
    out.emplace_back(prefix + ".u_f", cell.u_f);
    out.emplace_back(prefix + ".b_f", cell.b_f);
    out.emplace_back(prefix + ".w_o", cell.w_o);
    out.emplace_back(prefix + ".u_o", cell.u_o);
    out.emplace_back(prefix + ".b_o", cell.b_o);
    out.emplace_back(prefix + ".w_g", cell.w_g);
    out.emplace_back(prefix + ".u_g", cell.u_g);
    out.emplace_back(prefix + ".b_g", cell.b_g);
}

} // namespace

std::vector<std::pair<std::string, Tensor>> ModelParams::named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    append_lstm(out, "enc_lstm", enc_lstm);
    out.emplace_back("enc_out.weight", enc_out.weight);
    out.emplace_back("enc_out.bias", enc_out.bias);
    append_lstm(out, "dec_lstm", dec_lstm);
    out.emplace_back("dec_out.weight", dec_out.weight);
    out.emplace_back("dec_out.bias", dec_out.bias);
    switch (hyper.predictor) {
        case PredictorKind::Linear:
            out.emplace_back("pred.p", pred_p);
            out.emplace_back("pred.q", pred_q);
            break;
        case PredictorKind::Seq2SeqAttention:
            append_lstm(out, "pred_enc", pred_enc);
            append_lstm(out, "pred_dec", pred_dec);
            out.emplace_back("pred_out.weight", pred_out.weight);
            out.emplace_back("pred_out.bias", pred_out.bias);
            out.emplace_back("attention.v", attention.v);
            out.emplace_back("attention.w", attention.w);
            out.emplace_back("attention.u", attention.u);
            break;
        case PredictorKind::Seq2Seq:
            append_lstm(out, "pred_enc", pred_enc);
            append_lstm(out, "pred_dec", pred_dec);
            out.emplace_back("pred_out.weight", pred_out.weight);
            out.emplace_back("pred_out.bias", pred_out.bias);
            break;
        case PredictorKind::None:
            break;
    }
    return out;
}

std::vector<Tensor> ModelParams::parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, tensor] : named_parameters()) out.push_back(tensor);
    return out;
}

LatentWindows seq_enc(Tape& tape, const ModelParams& params, const Tensor& hist_window,
                      const Tensor& fut_window) {
    const ModelHyper& hp = params.hyper;
    if (hist_window.ndim() != 2 || hist_window.rows() != hp.input_dim ||
        fut_window.ndim() != 2 || fut_window.rows() != hp.input_dim) {
        throw DimensionError("seq_enc: window rows must equal the input dimension");
    }
    if (hist_window.cols() == 0 || fut_window.cols() == 0) {
        throw ContractError("seq_enc: empty window");
    }
    std::vector<Tensor> inputs;
    inputs.reserve(hist_window.cols() + fut_window.cols());
    for (std::size_t j = 0; j < hist_window.cols(); ++j) inputs.push_back(tape.col(hist_window, j));
    for (std::size_t j = 0; j < fut_window.cols(); ++j) inputs.push_back(tape.col(fut_window, j));
    std::vector<LstmState> states = params.enc_lstm.run(tape, inputs, params.enc_lstm.zero_state());
    LatentWindows out;
    out.hist.reserve(hist_window.cols());
    out.fut.reserve(fut_window.cols());
    for (std::size_t i = 0; i < states.size(); ++i) {
        Tensor z = params.enc_out.forward(tape, states[i].hidden);
        if (i < hist_window.cols()) out.hist.push_back(z); else out.fut.push_back(z);
    }
    return out;
}

std::pair<Tensor, Tensor> seq_dec(Tape& tape, const ModelParams& params,
                                  std::span<const Tensor> hist_latents,
                                  std::span<const Tensor> fut_latents) {
    if (hist_latents.empty() || fut_latents.empty()) {
        throw ContractError("seq_dec: empty latent sequence");
    }
    std::vector<Tensor> inputs(hist_latents.begin(), hist_latents.end());
    inputs.insert(inputs.end(), fut_latents.begin(), fut_latents.end());
    std::vector<LstmState> states = params.dec_lstm.run(tape, inputs, params.dec_lstm.zero_state());
    std::vector<Tensor> hist_cols, fut_cols;
    hist_cols.reserve(hist_latents.size());
    fut_cols.reserve(fut_latents.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        Tensor x = params.dec_out.forward(tape, states[i].hidden);
        if (i < hist_latents.size()) hist_cols.push_back(x); else fut_cols.push_back(x);
    }
    return {tape.stack_cols(hist_cols), tape.stack_cols(fut_cols)};
}

std::vector<Tensor> predic_linear(Tape& tape, const Tensor& p, const Tensor& q,
                                  std::span<const Tensor> hist_latents) {
    if (hist_latents.empty()) throw ContractError("predic_linear: empty history");
    if (q.ndim() != 2 || q.rows() != hist_latents.size()) {
        throw DimensionError("predic_linear: Q rows must equal the history length");
    }
    Tensor stacked = tape.stack_cols(hist_latents);            // {N, l_h}
    Tensor predicted = tape.matmul(tape.matmul(p, stacked), q); // {N, l}
    std::vector<Tensor> out;
    out.reserve(predicted.cols());
    for (std::size_t j = 0; j < predicted.cols(); ++j) out.push_back(tape.col(predicted, j));
    return out;
}

std::vector<Tensor> predic_seq2seq(Tape& tape, const LstmCell& encoder, const LstmCell& decoder,
                                   const LinearLayer& out, std::span<const Tensor> hist_latents,
                                   std::size_t fut_len) {
    if (hist_latents.empty()) throw ContractError("predic_seq2seq: empty history");
    std::vector<LstmState> enc_states = encoder.run(tape, hist_latents, encoder.zero_state());
    LstmState state = enc_states.back();
    Tensor previous = hist_latents.back();
    std::vector<Tensor> predictions;
    predictions.reserve(fut_len);
    for (std::size_t step = 0; step < fut_len; ++step) {
        state = decoder.step(tape, previous, state);
        previous = out.forward(tape, state.hidden);
        predictions.push_back(previous);
    }
    return predictions;
}

std::vector<Tensor> predic_attention(Tape& tape, const LstmCell& encoder, const LstmCell& decoder,
                                     const LinearLayer& out, const AttentionParams& attention,
                                     std::span<const Tensor> hist_latents, std::size_t fut_len) {
    if (hist_latents.empty()) throw ContractError("predic_attention: empty history");
    std::vector<LstmState> enc_states = encoder.run(tape, hist_latents, encoder.zero_state());
    LstmState state = enc_states.back();
    Tensor previous = hist_latents.back();
    std::vector<Tensor> predictions;
    predictions.reserve(fut_len);
    for (std::size_t step = 0; step < fut_len; ++step) {
        Tensor betas = attention_scores(tape, attention, state.hidden, state.cell, hist_latents);
        Tensor context = attention_context(tape, betas, hist_latents);
        state = decoder.step(tape, tape.concat(previous, context), state);
        previous = out.forward(tape, state.hidden);
        predictions.push_back(previous);
    }
    return predictions;
}

std::vector<Tensor> predict_latents(Tape& tape, const ModelParams& params,
                                    std::span<const Tensor> hist_latents) {
    switch (params.hyper.predictor) {
        case PredictorKind::Linear:
            return predic_linear(tape, params.pred_p, params.pred_q, hist_latents);
        case PredictorKind::Seq2Seq:
            return predic_seq2seq(tape, params.pred_enc, params.pred_dec, params.pred_out,
                                  hist_latents, params.hyper.fut_len);
        case PredictorKind::Seq2SeqAttention:
            return predic_attention(tape, params.pred_enc, params.pred_dec, params.pred_out,
                                    params.attention, hist_latents, params.hyper.fut_len);
        case PredictorKind::None:
            throw ContractError("predict_latents: model has no predictor");
    }
    throw ContractError("predict_latents: unknown predictor kind");
}

std::vector<Tensor> rand_perturb(Tape& tape, std::span<const Tensor> true_latents,
                                 std::span<const Tensor> predicted_latents, const Tensor& eps) {
    if (true_latents.size() != predicted_latents.size()) {
        throw DimensionError("rand_perturb: latent sequence lengths differ");
    }
    if (eps.ndim() != 2 || eps.rows() != true_latents.size() ||
        (!true_latents.empty() && eps.cols() != true_latents[0].size())) {
        throw DimensionError("rand_perturb: eps shape does not match the latent window");
    }
    std::vector<Tensor> out;
    out.reserve(true_latents.size());
    for (std::size_t i = 0; i < true_latents.size(); ++i) {
        std::vector<double> row(eps.values().begin() + i * eps.cols(),
                                eps.values().begin() + (i + 1) * eps.cols());
        Tensor eps_row = Tensor::vector(std::move(row));
        Tensor residual = tape.abs(tape.sub(true_latents[i], predicted_latents[i]));
        out.push_back(tape.add(true_latents[i], tape.mul(eps_row, residual)));
    }
    return out;
}

Tensor lpc_reconstruct(Tape& tape, const ModelParams& params, const Tensor& hist_window,
                       const Tensor& fut_window, const Tensor& eps) {
    return variant_reconstruct(tape, ReconstructMode::Full, params, hist_window, fut_window, eps);
}

ReconstructMode mode_for(const ModelHyper& hyper) {
    if (hyper.predictor == PredictorKind::None) return ReconstructMode::Autoencode;
    return hyper.perturb ? ReconstructMode::Full : ReconstructMode::PredictedLatents;
}

Tensor variant_reconstruct(Tape& tape, ReconstructMode mode, const ModelParams& params,
                           const Tensor& hist_window, const Tensor& fut_window,
                           const Tensor& eps) {
    LatentWindows latents = seq_enc(tape, params, hist_window, fut_window);
    switch (mode) {
        case ReconstructMode::Autoencode:
            return seq_dec(tape, params, latents.hist, latents.fut).second;
        case ReconstructMode::PredictedLatents: {
            std::vector<Tensor> predicted = predict_latents(tape, params, latents.hist);
            return seq_dec(tape, params, latents.hist, predicted).second;
        }
        case ReconstructMode::Full: {
            std::vector<Tensor> predicted = predict_latents(tape, params, latents.hist);
            std::vector<Tensor> perturbed = rand_perturb(tape, latents.fut, predicted, eps);
            return seq_dec(tape, params, latents.hist, perturbed).second;
        }
    }
    throw ContractError("variant_reconstruct: unknown mode");
}

Tensor sample_noise(std::size_t fut_len, std::size_t latent_dim, double sigma2,
                    std::mt19937_64& rng) {
    if (sigma2 < 0.0) throw ContractError("sample_noise: sigma2 must be nonnegative");
    std::vector<double> values(fut_len * latent_dim, 0.0);
    if (sigma2 > 0.0) {
        std::normal_distribution<double> dist(0.0, std::sqrt(sigma2));
        for (double& v : values) v = dist(rng);
    }
    return Tensor::from_data({fut_len, latent_dim}, std::move(values));
}

} // namespace lpcad

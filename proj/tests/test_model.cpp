#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lpcad/model.hpp"

using namespace lpcad;

namespace {

ModelHyper toy_hyper(PredictorKind predictor = PredictorKind::Seq2Seq, bool perturb = true) {
    ModelHyper hp;
    hp.input_dim = 3;
    hp.latent_dim = 2;
    hp.hist_len = 4;
    hp.fut_len = 2;
    hp.hidden_dim = 2;
    hp.predictor = predictor;
    hp.perturb = perturb;
    hp.sigma2 = 1.0;
    return hp;
}

Tensor random_window(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> values(rows * cols);
    for (double& v : values) v = dist(rng);
    return Tensor::from_data({rows, cols}, std::move(values));
}

std::vector<Tensor> random_latents(std::size_t count, std::size_t dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<double> v(dim);
        for (double& x : v) x = dist(rng);
        out.push_back(Tensor::vector(std::move(v)));
    }
    return out;
}

} // namespace

TEST_CASE("seq_enc produces latent windows of the contracted lengths and dimension") {
    std::mt19937_64 rng(1);
    ModelParams params = ModelParams::create(toy_hyper(), rng);
    Tensor hist = random_window(3, 4, rng);
    Tensor fut = random_window(3, 2, rng);
    Tape tape;
    LatentWindows latents = seq_enc(tape, params, hist, fut);
    CHECK(latents.hist.size() == 4);
    CHECK(latents.fut.size() == 2);
    for (const Tensor& z : latents.hist) CHECK(z.size() == 2);
    for (const Tensor& z : latents.fut) CHECK(z.size() == 2);
}

TEST_CASE("seq_enc is deterministic") {
    std::mt19937_64 rng(2);
    ModelParams params = ModelParams::create(toy_hyper(), rng);
    Tensor hist = random_window(3, 4, rng);
    Tensor fut = random_window(3, 2, rng);
    Tape tape;
    LatentWindows a = seq_enc(tape, params, hist, fut);
    LatentWindows b = seq_enc(tape, params, hist, fut);
    for (std::size_t i = 0; i < a.hist.size(); ++i) {
        for (std::size_t j = 0; j < a.hist[i].size(); ++j) {
            CHECK(a.hist[i][j] == b.hist[i][j]);
        }
    }
}

TEST_CASE("seq_enc rejects windows with the wrong metric count") {
    std::mt19937_64 rng(3);
    ModelParams params = ModelParams::create(toy_hyper(), rng);
    Tape tape;
    CHECK_THROWS_AS(seq_enc(tape, params, random_window(2, 4, rng), random_window(3, 2, rng)),
                    DimensionError);
}

TEST_CASE("seq_dec reconstructs windows of the right shapes, deterministically") {
    std::mt19937_64 rng(4);
    ModelParams params = ModelParams::create(toy_hyper(), rng);
    auto hist = random_latents(4, 2, rng);
    auto fut = random_latents(2, 2, rng);
    Tape tape;
    auto [wh, wf] = seq_dec(tape, params, hist, fut);
    CHECK(wh.shape() == Shape{3, 4});
    CHECK(wf.shape() == Shape{3, 2});
    auto [wh2, wf2] = seq_dec(tape, params, hist, fut);
    for (std::size_t i = 0; i < wf.size(); ++i) CHECK(wf[i] == wf2[i]);
}

TEST_CASE("seq_dec rejects empty latent sequences") {
    std::mt19937_64 rng(5);
    ModelParams params = ModelParams::create(toy_hyper(), rng);
    auto hist = random_latents(4, 2, rng);
    std::vector<Tensor> empty;
    Tape tape;
    CHECK_THROWS_AS(seq_dec(tape, params, hist, empty), ContractError);
}

TEST_CASE("linear predictor with identity P and one-hot Q returns the last latent") {
    std::mt19937_64 rng(6);
    auto hist = random_latents(3, 2, rng);
    Tensor p = Tensor::from_data({2, 2}, {1, 0, 0, 1}, true);
    Tensor q = Tensor::from_data({3, 1}, {0, 0, 1}, true);
    Tape tape;
    auto out = predic_linear(tape, p, q, hist);
    REQUIRE(out.size() == 1);
    CHECK(out[0][0] == doctest::Approx(hist.back()[0]));
    CHECK(out[0][1] == doctest::Approx(hist.back()[1]));
}

TEST_CASE("linear predictor with zero P predicts zero") {
    std::mt19937_64 rng(7);
    auto hist = random_latents(3, 2, rng);
    Tensor p = Tensor::zeros({2, 2}, true);
    Tensor q = Tensor::from_data({3, 2}, {1, 0, 0, 1, 1, 0}, true);
    Tape tape;
    for (const Tensor& z : predic_linear(tape, p, q, hist)) {
        for (double v : z.values()) CHECK(v == 0.0);
    }
}

TEST_CASE("linear predictor hand example") {
    // N=1, l_h=2, P=[2], Q=[[1],[1]], Z=[3,4] -> 2*(3+4) = 14.
    std::vector<Tensor> hist{Tensor::vector({3.0}), Tensor::vector({4.0})};
    Tensor p = Tensor::from_data({1, 1}, {2.0}, true);
    Tensor q = Tensor::from_data({2, 1}, {1.0, 1.0}, true);
    Tape tape;
    auto out = predic_linear(tape, p, q, hist);
    REQUIRE(out.size() == 1);
    CHECK(out[0].item() == doctest::Approx(14.0));
}

TEST_CASE("seq2seq predictor emits fut_len latents of dimension N") {
    std::mt19937_64 rng(8);
    ModelParams params = ModelParams::create(toy_hyper(), rng);
    auto hist = random_latents(4, 2, rng);
    Tape tape;
    auto out = predic_seq2seq(tape, params.pred_enc, params.pred_dec, params.pred_out, hist, 3);
    CHECK(out.size() == 3);
    for (const Tensor& z : out) CHECK(z.size() == 2);
    auto again = predic_seq2seq(tape, params.pred_enc, params.pred_dec, params.pred_out, hist, 3);
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t j = 0; j < out[i].size(); ++j) CHECK(out[i][j] == again[i][j]);
    }
}

TEST_CASE("attention predictor emits fut_len latents and trivial context at history 1") {
    std::mt19937_64 rng(9);
    ModelParams params = ModelParams::create(toy_hyper(PredictorKind::Seq2SeqAttention), rng);
    auto hist = random_latents(4, 2, rng);
    Tape tape;
    auto out = predic_attention(tape, params.pred_enc, params.pred_dec, params.pred_out,
                                params.attention, hist, 2);
    CHECK(out.size() == 2);
    for (const Tensor& z : out) CHECK(z.size() == 2);

    // A single-latent history forces a one-hot attention weight, so the
    // context is that latent no matter the parameters.
    std::vector<Tensor> single{hist[0]};
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor s_prev = Tensor::vector({dist(rng), dist(rng)});
    Tensor d_prev = Tensor::vector({dist(rng), dist(rng)});
    Tensor betas = attention_scores(tape, params.attention, s_prev, d_prev, single);
    CHECK(betas.size() == 1);
    CHECK(betas[0] == doctest::Approx(1.0));
    Tensor context = attention_context(tape, betas, single);
    for (std::size_t i = 0; i < 2; ++i) CHECK(context[i] == doctest::Approx(hist[0][i]));
}

TEST_CASE("rand_perturb with zero noise is the exact identity") {
    std::mt19937_64 rng(10);
    auto z = random_latents(2, 3, rng);
    auto zhat = random_latents(2, 3, rng);
    Tape tape;
    auto out = rand_perturb(tape, z, zhat, Tensor::zeros({2, 3}));
    for (std::size_t i = 0; i < z.size(); ++i) {
        for (std::size_t j = 0; j < z[i].size(); ++j) CHECK(out[i][j] == z[i][j]);
    }
}

TEST_CASE("rand_perturb with a perfect prediction ignores the noise") {
    std::mt19937_64 rng(11);
    auto z = random_latents(2, 3, rng);
    Tensor eps = Tensor::from_data({2, 3}, {5, -4, 3, -2, 1, 9});
    Tape tape;
    auto out = rand_perturb(tape, z, z, eps);
    for (std::size_t i = 0; i < z.size(); ++i) {
        for (std::size_t j = 0; j < z[i].size(); ++j) CHECK(out[i][j] == z[i][j]);
    }
}

TEST_CASE("rand_perturb hand example") {
    std::vector<Tensor> z{Tensor::vector({1.0})};
    std::vector<Tensor> zhat{Tensor::vector({3.0})};
    Tape tape;
    auto out = rand_perturb(tape, z, zhat, Tensor::from_data({1, 1}, {0.5}));
    CHECK(out[0].item() == doctest::Approx(2.0));
}

TEST_CASE("rand_perturb monte-carlo mean recovers the true latents") {
    std::vector<Tensor> z{Tensor::vector({0.7, -0.3})};
    std::vector<Tensor> zhat{Tensor::vector({0.2, 0.4})};
    const double sigma2 = 1.0;
    const std::size_t draws = 10000;
    std::mt19937_64 rng(12);
    std::vector<double> mean(2, 0.0);
    Tape tape(false);
    for (std::size_t k = 0; k < draws; ++k) {
        Tensor eps = sample_noise(1, 2, sigma2, rng);
        auto out = rand_perturb(tape, z, zhat, eps);
        mean[0] += out[0][0];
        mean[1] += out[0][1];
    }
    for (std::size_t j = 0; j < 2; ++j) {
        mean[j] /= static_cast<double>(draws);
        const double residual = std::fabs(z[0][j] - zhat[0][j]);
        const double stderr3 = 3.0 * std::sqrt(sigma2) * residual / std::sqrt(double(draws));
        CHECK(std::fabs(mean[j] - z[0][j]) <= stderr3);
    }
}

TEST_CASE("lpc_reconstruct returns an M x l window, deterministically in (params, eps)") {
    std::mt19937_64 rng(13);
    ModelParams params = ModelParams::create(toy_hyper(), rng);
    Tensor hist = random_window(3, 4, rng);
    Tensor fut = random_window(3, 2, rng);
    Tensor eps = sample_noise(2, 2, 1.0, rng);
    Tape tape;
    Tensor a = lpc_reconstruct(tape, params, hist, fut, eps);
    CHECK(a.shape() == Shape{3, 2});
    Tensor b = lpc_reconstruct(tape, params, hist, fut, eps);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("zero noise reduces the full composition to the perturbation-free one") {
    std::mt19937_64 rng(14);
    ModelParams params = ModelParams::create(toy_hyper(), rng);
    Tensor hist = random_window(3, 4, rng);
    Tensor fut = random_window(3, 2, rng);
    Tape tape;
    Tensor full = lpc_reconstruct(tape, params, hist, fut, Tensor::zeros({2, 2}));
    LatentWindows latents = seq_enc(tape, params, hist, fut);
    Tensor plain = seq_dec(tape, params, latents.hist, latents.fut).second;
    for (std::size_t i = 0; i < full.size(); ++i) CHECK(full[i] == plain[i]);
}

TEST_CASE("autoencoder variant equals the first decode of the true latents") {
    std::mt19937_64 rng(15);
    ModelParams params = ModelParams::create(toy_hyper(PredictorKind::None, false), rng);
    Tensor hist = random_window(3, 4, rng);
    Tensor fut = random_window(3, 2, rng);
    Tape tape;
    Tensor rec = variant_reconstruct(tape, ReconstructMode::Autoencode, params, hist, fut,
                                     Tensor::zeros({2, 2}));
    LatentWindows latents = seq_enc(tape, params, hist, fut);
    Tensor direct = seq_dec(tape, params, latents.hist, latents.fut).second;
    for (std::size_t i = 0; i < rec.size(); ++i) CHECK(rec[i] == direct[i]);
}

TEST_CASE("prediction-passthrough variant is independent of the noise") {
    std::mt19937_64 rng(16);
    ModelParams params = ModelParams::create(toy_hyper(PredictorKind::Seq2Seq, false), rng);
    Tensor hist = random_window(3, 4, rng);
    Tensor fut = random_window(3, 2, rng);
    Tape tape;
    Tensor a = variant_reconstruct(tape, ReconstructMode::PredictedLatents, params, hist, fut,
                                   Tensor::zeros({2, 2}));
    Tensor b = variant_reconstruct(tape, ReconstructMode::PredictedLatents, params, hist, fut,
                                   Tensor::full({2, 2}, 7.5));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("passthrough equals the full composition whenever the prediction is exact") {
    // rand_perturb(Z, Z, eps) = Z, so decoding [Z_hist, Z] through either
    // route must agree for any eps.
    std::mt19937_64 rng(17);
    ModelParams params = ModelParams::create(toy_hyper(), rng);
    auto hist = random_latents(4, 2, rng);
    auto fut = random_latents(2, 2, rng);
    Tensor eps = sample_noise(2, 2, 4.0, rng);
    Tape tape;
    auto perturbed = rand_perturb(tape, fut, fut, eps);
    Tensor via_perturb = seq_dec(tape, params, hist, perturbed).second;
    Tensor direct = seq_dec(tape, params, hist, fut).second;
    for (std::size_t i = 0; i < direct.size(); ++i) CHECK(via_perturb[i] == direct[i]);
}

TEST_CASE("predictor variants keep the contracted output shape across sizes") {
    std::mt19937_64 rng(18);
    for (auto kind : {PredictorKind::Linear, PredictorKind::Seq2Seq,
                      PredictorKind::Seq2SeqAttention}) {
        for (std::size_t hist_len : {1u, 3u}) {
            for (std::size_t fut_len : {1u, 2u}) {
                ModelHyper hp = toy_hyper(kind);
                hp.hist_len = hist_len;
                hp.fut_len = fut_len;
                ModelParams params = ModelParams::create(hp, rng);
                auto hist = random_latents(hist_len, hp.latent_dim, rng);
                Tape tape;
                auto out = predict_latents(tape, params, hist);
                CHECK(out.size() == fut_len);
                for (const Tensor& z : out) CHECK(z.size() == hp.latent_dim);
            }
        }
    }
}

TEST_CASE("seq2seq predictor learns a linear latent recurrence") {
    // Latents on the unit circle: z_{t+1} = R(0.3) z_t.
    const double theta = 0.3;
    std::vector<Tensor> latents;
    double zx = 1.0, zy = 0.0;
    for (int t = 0; t < 80; ++t) {
        latents.push_back(Tensor::vector({zx, zy}));
        const double nx = std::cos(theta) * zx - std::sin(theta) * zy;
        const double ny = std::sin(theta) * zx + std::cos(theta) * zy;
        zx = nx;
        zy = ny;
    }
    const std::size_t hist_len = 6, fut_len = 2;

    std::mt19937_64 rng(41);
    LstmCell enc = LstmCell::create(2, 4, rng);
    LstmCell dec = LstmCell::create(2, 4, rng);
    LinearLayer out = LinearLayer::create(2, 4, rng);
    std::vector<Tensor> params{enc.w_i, enc.u_i, enc.b_i, enc.w_f, enc.u_f, enc.b_f,
                               enc.w_o, enc.u_o, enc.b_o, enc.w_g, enc.u_g, enc.b_g,
                               dec.w_i, dec.u_i, dec.b_i, dec.w_f, dec.u_f, dec.b_f,
                               dec.w_o, dec.u_o, dec.b_o, dec.w_g, dec.u_g, dec.b_g,
                               out.weight, out.bias};
    AdamOptimizer adam(params, {.learning_rate = 0.01});

    auto epoch_mse = [&](bool optimize) {
        double total = 0.0;
        std::size_t terms = 0;
        Tape tape(optimize);
        Tensor loss;
        for (std::size_t t = hist_len; t + fut_len <= latents.size(); t += 2) {
            std::span<const Tensor> hist(latents.data() + t - hist_len, hist_len);
            auto predicted = predic_seq2seq(tape, enc, dec, out, hist, fut_len);
            for (std::size_t j = 0; j < fut_len; ++j) {
                Tensor diff = tape.sub(predicted[j], latents[t + j]);
                Tensor sq = tape.sum(tape.mul(diff, diff));
                loss = loss.defined() ? tape.add(loss, sq) : sq;
                total += sq.item();
                terms += fut_len;
            }
        }
        if (optimize) {
            tape.backward(loss);
            adam.step();
        }
        return total / static_cast<double>(terms);
    };

    for (int iter = 0; iter < 150; ++iter) epoch_mse(true);
    CHECK(epoch_mse(false) < 0.05);
}

TEST_CASE("full model gradient with fixed noise matches finite differences") {
    std::mt19937_64 rng(19);
    ModelHyper hp = toy_hyper(PredictorKind::Seq2Seq);
    ModelParams params = ModelParams::create(hp, rng);
    Tensor hist = random_window(3, 4, rng);
    Tensor fut = random_window(3, 2, rng);
    Tensor eps = sample_noise(2, 2, 1.0, rng);
    std::vector<Tensor> tensors = params.parameters();
    auto f = [&](Tape& tape) {
        Tensor rec = lpc_reconstruct(tape, params, hist, fut, eps);
        return tape.frobenius_norm(tape.sub(rec, fut));
    };
    CHECK(finite_diff_check(f, tensors, 1e-5) < 1e-4);
}

TEST_CASE("hyperparameters enforce the latent bottleneck") {
    ModelHyper hp = toy_hyper();
    hp.latent_dim = 3; // == input_dim
    CHECK_THROWS_AS(hp.validate(), ContractError);
}

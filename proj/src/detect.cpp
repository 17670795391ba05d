#include "lpcad/detect.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace lpcad {

NoiseSpec parse_noise_spec(const std::string& text, std::uint64_t seed) {
    NoiseSpec spec;
    spec.seed = seed;
    if (text == "sample") {
        spec.mode = NoiseMode::Sample;
    } else if (text == "deterministic") {
        spec.mode = NoiseMode::Deterministic;
    } else if (text.rfind("mc:", 0) == 0) {
        spec.mode = NoiseMode::MonteCarlo;
        try {
            spec.draws = std::stoul(text.substr(3));
        } catch (const std::exception&) {
            throw DataError("bad noise mode '" + text + "'");
        }
        if (spec.draws == 0) throw DataError("mc noise mode needs at least one draw");
    } else {
        throw DataError("bad noise mode '" + text + "' (expected sample|deterministic|mc:<k>)");
    }
    return spec;
}

namespace {

Tensor window_slice(const SeriesMatrix& series, std::size_t begin, std::size_t len) {
    std::vector<double> values(series.metrics * len);
    for (std::size_t m = 0; m < series.metrics; ++m)
        for (std::size_t j = 0; j < len; ++j)
            values[m * len + j] = series.at(begin + j, m);
    return Tensor::from_data({series.metrics, len}, std::move(values));
}

} // namespace

ScoreResult score_windows(const ModelParams& params, const SeriesMatrix& test,
                          const NoiseSpec& noise) {
    const ModelHyper& hp = params.hyper;
    if (test.metrics != hp.input_dim) {
        throw DimensionError("score_windows: series has " + std::to_string(test.metrics) +
                             " metrics, model expects " + std::to_string(hp.input_dim));
    }
    if (test.timesteps < hp.hist_len + hp.fut_len) {
        throw DataError("score_windows: series of length " + std::to_string(test.timesteps) +
                        " is shorter than " + std::to_string(hp.hist_len + hp.fut_len));
    }

    std::vector<std::size_t> anchors;
    for (std::size_t a = hp.hist_len; a + hp.fut_len <= test.timesteps; a += hp.fut_len) {
        anchors.push_back(a);
    }
    if (anchors.back() + hp.fut_len < test.timesteps) {
        anchors.push_back(test.timesteps - hp.fut_len); // tail window
    }

    const std::size_t scored = test.timesteps - hp.hist_len;
    ScoreResult result;
    result.first_scored = hp.hist_len;
    result.metrics = hp.input_dim;
    result.scores.assign(scored, -1.0);
    result.reconstruction.assign(scored * hp.input_dim, 0.0);

    std::mt19937_64 rng(noise.seed);
    const ReconstructMode mode = mode_for(hp);
    for (std::size_t a : anchors) {
        Tensor hist = window_slice(test, a - hp.hist_len, hp.hist_len);
        Tensor fut = window_slice(test, a, hp.fut_len);
        Tape tape(false);

        std::vector<double> mean(hp.input_dim * hp.fut_len, 0.0);
        const std::size_t draws = noise.mode == NoiseMode::MonteCarlo ? noise.draws : 1;
        for (std::size_t k = 0; k < draws; ++k) {
            Tensor eps = noise.mode == NoiseMode::Deterministic
                             ? Tensor::zeros({hp.fut_len, hp.latent_dim})
                             : sample_noise(hp.fut_len, hp.latent_dim, hp.sigma2, rng);
            Tensor rec = variant_reconstruct(tape, mode, params, hist, fut, eps);
            auto rv = rec.values();
            for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += rv[i];
        }
        for (double& v : mean) v /= static_cast<double>(draws);

        for (std::size_t j = 0; j < hp.fut_len; ++j) {
            const std::size_t t = a + j;
            const std::size_t idx = t - hp.hist_len;
            if (result.scores[idx] >= 0.0) continue; // earlier anchor wins
            double acc = 0.0;
            for (std::size_t m = 0; m < hp.input_dim; ++m) {
                const double rec_v = mean[m * hp.fut_len + j];
                const double diff = test.at(t, m) - rec_v;
                acc += diff * diff;
                result.reconstruction[idx * hp.input_dim + m] = rec_v;
            }
            const double score = std::sqrt(acc);
            if (!std::isfinite(score)) {
                throw DivergenceError("non-finite anomaly score at timestamp " +
                                      std::to_string(t));
            }
            result.scores[idx] = score;
        }
    }
    return result;
}

DetectionReport detect(const ScoreResult& scores, double lambda) {
    if (lambda < 0.0) throw ContractError("detect: lambda must be nonnegative");
    DetectionReport report;
    report.first_scored = scores.first_scored;
    report.lambda = lambda;
    report.scores = scores.scores;
    report.flags.reserve(scores.scores.size());
    for (double s : scores.scores) {
        report.flags.push_back(s >= lambda ? 1 : 0);
    }
    return report;
}

void write_scores(const std::filesystem::path& path, const DetectionReport& report) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    char buffer[64];
    for (std::size_t i = 0; i < report.scores.size(); ++i) {
        std::snprintf(buffer, sizeof(buffer), "%.17g", report.scores[i]);
        out << (report.first_scored + i) << ',' << buffer << ','
            << static_cast<int>(report.flags[i]) << '\n';
    }
    if (!out) throw DataError("failed writing " + path.string());
}

ScoreFile read_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    ScoreFile file;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t c1 = line.find(',');
        std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": expected timestamp,score,flag");
        }
        try {
            file.timestamps.push_back(std::stoul(line.substr(0, c1)));
            file.scores.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
            const int flag = std::stoi(line.substr(c2 + 1));
            if (flag != 0 && flag != 1) throw std::invalid_argument("flag");
            file.flags.push_back(static_cast<std::uint8_t>(flag));
        } catch (const std::exception&) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad record");
        }
    }
    return file;
}

} // namespace lpcad

// Command-line front end: synth | train | detect | eval | run.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical divergence.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <string>

#include <CLI11.hpp>

#include "lpcad/data_io.hpp"
#include "lpcad/metrics.hpp"

namespace {

using namespace lpcad;

struct CliOptions {
    std::string data_dir;
    std::string config_path;
    std::string spec_path;
    std::string out_path;
    std::string ckpt_path;
    std::string scores_path;
    std::string labels_path;
    std::string report_path;
    std::string loss_path;
    std::string plot_path;
    std::string plot_svg_path;
    std::string plot_range;
    std::string noise = "sample";
    std::string auroc_mode = "adjusted";
    std::string variant;
    std::uint64_t noise_seed = 0;
    std::optional<std::uint64_t> seed;
    double lambda = 0.0;
    std::size_t repeats = 1;
    bool search_lambda = false;
};

int run_synth(const CliOptions& opt) {
    SynthSpec spec = parse_synth_spec(opt.spec_path);
    DatasetBundle bundle = synth_generate(spec);
    save_dataset(bundle, opt.out_path);
    std::cout << "wrote " << bundle.train.timesteps << " train and " << bundle.test.timesteps
              << " test rows (" << bundle.train.metrics << " metrics) to " << opt.out_path
              << "\n";
    return 0;
}

TrainConfig load_config(const CliOptions& opt) {
    TrainConfig config = parse_train_config(opt.config_path);
    if (!opt.variant.empty()) config.variant = opt.variant;
    if (opt.seed) config.seed = *opt.seed;
    config.validate();
    return config;
}

int run_train(const CliOptions& opt) {
    TrainConfig config = load_config(opt);
    DatasetBundle bundle = load_dataset(opt.data_dir);
    NormalizationStats norm = fit_normalizer(bundle.train, config.alpha);
    SeriesMatrix normalized = apply_normalizer(norm, bundle.train);
    std::vector<WindowPair> pairs =
        make_window_pairs(normalized, config.hist_len, config.fut_len, 1);
    TrainResult result = train(pairs, config, normalized.metrics);
    save_checkpoint(opt.ckpt_path, result.params, norm);
    const std::string loss_path =
        opt.loss_path.empty() ? opt.ckpt_path + ".losses" : opt.loss_path;
    write_loss_history(loss_path, result.epoch_loss);
    std::cout << "trained variant " << result.params.hyper.variant_tag() << " for "
              << config.max_epoch << " epochs; final mean loss "
              << (result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back()) << "\n";
    return 0;
}

std::optional<std::pair<std::size_t, std::size_t>> parse_range(const std::string& text) {
    if (text.empty()) return std::nullopt;
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos) throw DataError("plot range must be <from>:<to>");
    try {
        return std::make_pair(std::stoul(text.substr(0, colon)),
                              std::stoul(text.substr(colon + 1)));
    } catch (const std::exception&) {
        throw DataError("bad plot range '" + text + "'");
    }
}

int run_detect(const CliOptions& opt) {
    Checkpoint ckpt = load_checkpoint(opt.ckpt_path);
    DatasetBundle bundle = load_dataset(opt.data_dir);
    SeriesMatrix test = apply_normalizer(ckpt.norm, bundle.test);
    NoiseSpec noise = parse_noise_spec(opt.noise, opt.noise_seed);
    ScoreResult scores = score_windows(ckpt.params, test, noise);
    DetectionReport report = detect(scores, opt.lambda);
    write_scores(opt.scores_path, report);
    if (!opt.plot_path.empty()) {
        emit_plot_data(opt.plot_path, test, scores, report, parse_range(opt.plot_range));
    }
    if (!opt.plot_svg_path.empty()) {
        emit_plot_svg(opt.plot_svg_path, test, scores, report, parse_range(opt.plot_range));
    }
    std::size_t flagged = 0;
    for (auto f : report.flags) flagged += f;
    std::cout << "scored " << report.scores.size() << " timestamps, flagged " << flagged
              << " at lambda " << opt.lambda << "\n";
    return 0;
}

int run_eval(const CliOptions& opt) {
    ScoreFile file = read_scores(opt.scores_path);
    std::vector<std::uint8_t> all_labels = [&] {
        std::ifstream in(opt.labels_path);
        if (!in) throw DataError("cannot open " + opt.labels_path);
        std::vector<std::uint8_t> labels;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (line != "0" && line != "1") throw DataError("labels must be 0 or 1");
            labels.push_back(line == "1" ? 1 : 0);
        }
        return labels;
    }();
    std::vector<std::uint8_t> labels;
    labels.reserve(file.timestamps.size());
    for (std::size_t t : file.timestamps) {
        if (t >= all_labels.size()) {
            throw DataError("scores reference timestamp " + std::to_string(t) +
                            " beyond the label file");
        }
        labels.push_back(all_labels[t]);
    }

    RunMetrics run;
    run.auroc = auroc(file.scores, labels, opt.auroc_mode == "adjusted");
    std::vector<std::uint8_t> flags = file.flags;
    if (opt.search_lambda) {
        ThresholdSearchResult best = threshold_search(file.scores, labels);
        run.lambda = best.lambda;
        flags.assign(file.scores.size(), 0);
        for (std::size_t i = 0; i < file.scores.size(); ++i) {
            flags[i] = file.scores[i] >= best.lambda ? 1 : 0;
        }
    }
    Prf scores = prf(point_adjust(flags, labels), labels);
    run.precision = scores.precision;
    run.recall = scores.recall;
    run.f1 = scores.f1;
    MetricBundle bundle = aggregate({{run}});
    write_metric_report(opt.report_path, bundle);
    std::cout << "P=" << bundle.precision << " R=" << bundle.recall << " F1=" << bundle.f1_micro
              << " AUROC=" << bundle.auroc << "\n";
    return 0;
}

// Full protocol on one dataset: D repeated train/score/search rounds with
// deterministic-mode scoring, aggregated into a single report.
int run_protocol(const CliOptions& opt) {
    TrainConfig config = load_config(opt);
    DatasetBundle bundle = load_dataset(opt.data_dir);
    NormalizationStats norm = fit_normalizer(bundle.train, config.alpha);
    SeriesMatrix normalized_train = apply_normalizer(norm, bundle.train);
    SeriesMatrix normalized_test = apply_normalizer(norm, bundle.test);
    if (!normalized_test.has_labels()) throw DataError("run: test labels required");
    std::vector<WindowPair> pairs =
        make_window_pairs(normalized_train, config.hist_len, config.fut_len, 1);

    std::vector<RunMetrics> repeats;
    for (std::size_t repeat = 0; repeat < opt.repeats; ++repeat) {
        TrainConfig round = config;
        round.seed = config.seed + repeat;
        TrainResult result = train(pairs, round, normalized_train.metrics);
        ScoreResult scores =
            score_windows(result.params, normalized_test, {NoiseMode::Deterministic, 1, 0});
        std::span<const std::uint8_t> labels{normalized_test.labels};
        labels = labels.subspan(scores.first_scored);
        ThresholdSearchResult best = threshold_search(scores.scores, labels);
        DetectionReport report = detect(scores, best.lambda);
        Prf adjusted = prf(point_adjust(report.flags, labels), labels);
        RunMetrics run;
        run.precision = adjusted.precision;
        run.recall = adjusted.recall;
        run.f1 = adjusted.f1;
        run.lambda = best.lambda;
        run.auroc = auroc(scores.scores, labels, opt.auroc_mode == "adjusted");
        repeats.push_back(run);
        std::cout << "repeat " << repeat << ": F1=" << run.f1 << " AUROC=" << run.auroc
                  << " lambda=" << run.lambda << "\n";
    }
    MetricBundle summary = aggregate({repeats});
    write_metric_report(opt.report_path, summary);
    std::cout << "aggregate: P=" << summary.precision << " R=" << summary.recall
              << " F1=" << summary.f1_micro << " F1*=" << summary.f1_macro
              << " AUROC=" << summary.auroc << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multivariate time-series anomaly detection via latent predictive coding"};
    app.require_subcommand(1);
    CliOptions opt;

    CLI::App* synth = app.add_subcommand("synth", "Generate a labeled synthetic dataset");
    synth->add_option("--spec", opt.spec_path, "key=value synthesis spec")->required();
    synth->add_option("--out", opt.out_path, "output dataset directory")->required();

    CLI::App* train_cmd = app.add_subcommand("train", "Train a model on a dataset");
    train_cmd->add_option("--data", opt.data_dir, "dataset directory")->required();
    train_cmd->add_option("--config", opt.config_path, "key=value training config")->required();
    train_cmd->add_option("--variant", opt.variant, "sa|s|l|ae|n (overrides config)");
    train_cmd->add_option("--seed", opt.seed, "run seed (overrides config)");
    train_cmd->add_option("--out", opt.ckpt_path, "checkpoint output path")->required();
    train_cmd->add_option("--loss-history", opt.loss_path,
                          "loss record path (default: <out>.losses)");

    CLI::App* detect_cmd = app.add_subcommand("detect", "Score a test series and flag anomalies");
    detect_cmd->add_option("--ckpt", opt.ckpt_path, "checkpoint path")->required();
    detect_cmd->add_option("--data", opt.data_dir, "dataset directory")->required();
    detect_cmd->add_option("--lambda", opt.lambda, "alert threshold")->required();
    detect_cmd->add_option("--noise", opt.noise, "sample|deterministic|mc:<k>")
        ->default_val("sample");
    detect_cmd->add_option("--noise-seed", opt.noise_seed, "seed for sampled noise");
    detect_cmd->add_option("--scores", opt.scores_path, "score dump output path")->required();
    detect_cmd->add_option("--plot", opt.plot_path, "plot-data output path");
    detect_cmd->add_option("--plot-svg", opt.plot_svg_path, "static SVG output path");
    detect_cmd->add_option("--plot-range", opt.plot_range, "restrict plots to <from>:<to>");

    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a score dump against labels");
    eval_cmd->add_option("--scores", opt.scores_path, "score dump path")->required();
    eval_cmd->add_option("--labels", opt.labels_path, "label file path")->required();
    eval_cmd->add_flag("--search-lambda", opt.search_lambda,
                       "exhaustively search the best-F1 threshold");
    eval_cmd->add_option("--auroc", opt.auroc_mode, "adjusted|raw")->default_val("adjusted");
    eval_cmd->add_option("--report", opt.report_path, "JSON report output path")->required();

    CLI::App* run_cmd =
        app.add_subcommand("run", "Train, detect, search and aggregate over repeats");
    run_cmd->add_option("--data", opt.data_dir, "dataset directory")->required();
    run_cmd->add_option("--config", opt.config_path, "key=value training config")->required();
    run_cmd->add_option("--variant", opt.variant, "sa|s|l|ae|n (overrides config)");
    run_cmd->add_option("--repeats", opt.repeats, "number of repeated rounds")->default_val(1);
    run_cmd->add_option("--auroc", opt.auroc_mode, "adjusted|raw")->default_val("adjusted");
    run_cmd->add_option("--report", opt.report_path, "JSON report output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    if (opt.auroc_mode != "adjusted" && opt.auroc_mode != "raw") {
        std::cerr << "--auroc must be adjusted or raw\n";
        return 1;
    }

    try {
        if (synth->parsed()) return run_synth(opt);
        if (train_cmd->parsed()) return run_train(opt);
        if (detect_cmd->parsed()) return run_detect(opt);
        if (eval_cmd->parsed()) return run_eval(opt);
        if (run_cmd->parsed()) return run_protocol(opt);
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

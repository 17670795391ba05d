#include "lpcad/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace lpcad {

namespace {

std::string fmt17(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

double parse_cell(const std::string& cell, const std::filesystem::path& file,
                  std::size_t line_no) {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(cell, &consumed);
        if (consumed != cell.size()) throw std::invalid_argument(cell);
        if (!std::isfinite(v)) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw DataError(file.string() + ":" + std::to_string(line_no) +
                        ": non-numeric cell '" + cell + "'");
    }
}

SeriesMatrix load_csv_matrix(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    SeriesMatrix series;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t begin = 0;
        while (true) {
            const std::size_t comma = line.find(',', begin);
            const std::string cell = line.substr(begin, comma - begin);
            row.push_back(parse_cell(cell, file, line_no));
            if (comma == std::string::npos) break;
            begin = comma + 1;
        }
        if (series.metrics == 0) {
            series.metrics = row.size();
        } else if (row.size() != series.metrics) {
            throw DataError(file.string() + ":" + std::to_string(line_no) + ": ragged row (" +
                            std::to_string(row.size()) + " cells, expected " +
                            std::to_string(series.metrics) + ")");
        }
        series.values.insert(series.values.end(), row.begin(), row.end());
        ++series.timesteps;
    }
    if (series.timesteps == 0) throw DataError(file.string() + ": empty series");
    return series;
}

std::vector<std::uint8_t> load_label_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    std::vector<std::uint8_t> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        if (line != "0" && line != "1") {
            throw DataError(file.string() + ":" + std::to_string(line_no) +
                            ": label must be 0 or 1, got '" + line + "'");
        }
        labels.push_back(line == "1" ? 1 : 0);
    }
    return labels;
}

} // namespace

DatasetBundle load_dataset(const std::filesystem::path& dir) {
    DatasetBundle bundle;
    bundle.name = dir.filename().string();
    bundle.train = load_csv_matrix(dir / "train.csv");
    bundle.test = load_csv_matrix(dir / "test.csv");
    if (bundle.train.metrics != bundle.test.metrics) {
        throw DataError(dir.string() + ": train has " + std::to_string(bundle.train.metrics) +
                        " metrics, test has " + std::to_string(bundle.test.metrics));
    }
    bundle.test.labels = load_label_file(dir / "test_label.csv");
    if (bundle.test.labels.size() != bundle.test.timesteps) {
        throw DataError(dir.string() + ": test_label.csv has " +
                        std::to_string(bundle.test.labels.size()) + " labels for " +
                        std::to_string(bundle.test.timesteps) + " test rows");
    }
    bundle.train.id = bundle.name + "/train";
    bundle.test.id = bundle.name + "/test";
    return bundle;
}

namespace {

void write_csv_matrix(const std::filesystem::path& file, const SeriesMatrix& series) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot open " + file.string() + " for writing");
    for (std::size_t t = 0; t < series.timesteps; ++t) {
        for (std::size_t m = 0; m < series.metrics; ++m) {
            if (m) out << ',';
            out << fmt17(series.at(t, m));
        }
        out << '\n';
    }
    if (!out) throw DataError("failed writing " + file.string());
}

} // namespace

void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_csv_matrix(dir / "train.csv", bundle.train);
    write_csv_matrix(dir / "test.csv", bundle.test);
    std::ofstream labels(dir / "test_label.csv");
    if (!labels) throw DataError("cannot open test_label.csv for writing");
    for (std::uint8_t l : bundle.test.labels) labels << static_cast<int>(l) << '\n';
}

namespace {

std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::map<std::string, std::string> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": expected key=value");
        }
        entries[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return entries;
}

template <typename T>
T parse_number(const std::string& value, const std::string& key) {
    try {
        if constexpr (std::is_floating_point_v<T>) {
            return static_cast<T>(std::stod(value));
        } else {
            return static_cast<T>(std::stoull(value));
        }
    } catch (const std::exception&) {
        throw DataError("bad value '" + value + "' for key " + key);
    }
}

// Pops entries as they are consumed so leftovers can be reported as unknown.
struct KvReader {
    std::map<std::string, std::string> entries;
    std::filesystem::path path;

    template <typename T>
    void number(const char* key, T& slot) {
        auto it = entries.find(key);
        if (it == entries.end()) return;
        slot = parse_number<T>(it->second, key);
        entries.erase(it);
    }
    void text(const char* key, std::string& slot) {
        auto it = entries.find(key);
        if (it == entries.end()) return;
        slot = it->second;
        entries.erase(it);
    }
    void finish() const {
        if (!entries.empty()) {
            throw DataError(path.string() + ": unknown key '" + entries.begin()->first + "'");
        }
    }
};

} // namespace

SynthSpec parse_synth_spec(const std::filesystem::path& path) {
    KvReader reader{parse_kv_file(path), path};
    SynthSpec spec;
    reader.number("t_train", spec.train_len);
    reader.number("t_test", spec.test_len);
    reader.number("m", spec.metrics);
    reader.number("seed", spec.seed);
    reader.number("noise_std", spec.noise_std);
    reader.number("chaos_weight", spec.chaos_weight);
    reader.number("shock_prob", spec.shock_prob);
    reader.number("spike_count", spec.spike_count);
    reader.number("spike_magnitude", spec.spike_magnitude);
    reader.number("shift_count", spec.shift_count);
    reader.number("shift_magnitude", spec.shift_magnitude);
    reader.number("break_count", spec.break_count);
    reader.number("jump_count", spec.jump_count);
    reader.number("jump_pad", spec.jump_pad);
    reader.number("segment_min", spec.segment_min);
    reader.number("segment_max", spec.segment_max);
    reader.number("guard", spec.guard);
    reader.finish();
    return spec;
}

namespace {

double logistic_step(double q) { return 3.9 * q * (1.0 - q); }

struct SegmentPlan {
    std::size_t begin = 0;
    std::size_t length = 0;
    enum class Kind { Spike, Shift, Break, Jump } kind = Kind::Spike;
};

} // namespace

DatasetBundle synth_generate(const SynthSpec& spec) {
    if (spec.metrics == 0 || spec.train_len == 0 || spec.test_len == 0) {
        throw DataError("synth: empty spec");
    }
    if (spec.segment_min == 0 || spec.segment_min > spec.segment_max) {
        throw DataError("synth: bad segment length range");
    }
    std::mt19937_64 rng(spec.seed);
    const std::size_t m = spec.metrics;
    const std::size_t total = spec.train_len + spec.test_len;

    std::uniform_real_distribution<double> freq_dist(0.005, 0.08);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> loading_dist(0.5, 1.0);
    std::normal_distribution<double> noise(0.0, spec.noise_std);

    std::vector<double> freqs(m), phases(m), loadings(m);
    for (std::size_t j = 0; j < m; ++j) freqs[j] = freq_dist(rng);
    for (std::size_t j = 0; j < m; ++j) phases[j] = phase_dist(rng);
    std::vector<double> mixing(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        double l1 = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            mixing[i * m + j] = unit(rng);
            l1 += std::fabs(mixing[i * m + j]);
        }
        for (std::size_t j = 0; j < m; ++j) mixing[i * m + j] /= l1;
    }
    for (std::size_t j = 0; j < m; ++j) loadings[j] = loading_dist(rng);
    double chaos = std::uniform_real_distribution<double>(0.2, 0.8)(rng);

    std::uniform_real_distribution<double> unit01(0.0, 1.0);
    auto advance_driver = [&](double q) {
        q = logistic_step(q);
        if (spec.shock_prob > 0.0 && unit01(rng) < spec.shock_prob) q = unit01(rng);
        return q;
    };

    std::vector<double> values(total * m);
    std::vector<double> sines(m);
    for (std::size_t t = 0; t < total; ++t) {
        for (std::size_t j = 0; j < m; ++j) {
            sines[j] = std::sin(2.0 * std::numbers::pi * freqs[j] * static_cast<double>(t) +
                                phases[j]);
        }
        for (std::size_t i = 0; i < m; ++i) {
            double v = 0.0;
            for (std::size_t j = 0; j < m; ++j) v += mixing[i * m + j] * sines[j];
            v += spec.chaos_weight * loadings[i] * (2.0 * chaos - 1.0);
            v += noise(rng);
            values[t * m + i] = v;
        }
        chaos = advance_driver(chaos);
    }

    DatasetBundle bundle;
    bundle.name = "synthetic";
    bundle.train.timesteps = spec.train_len;
    bundle.train.metrics = m;
    bundle.train.values.assign(values.begin(), values.begin() + spec.train_len * m);
    bundle.train.id = "synthetic/train";
    bundle.test.timesteps = spec.test_len;
    bundle.test.metrics = m;
    bundle.test.values.assign(values.begin() + spec.train_len * m, values.end());
    bundle.test.labels.assign(spec.test_len, 0);
    bundle.test.id = "synthetic/test";

    // Non-overlapping segment placement after the guard prefix.
    std::vector<SegmentPlan> plan;
    std::vector<std::pair<std::size_t, std::size_t>> taken;
    std::uniform_int_distribution<std::size_t> len_dist(spec.segment_min, spec.segment_max);
    for (std::size_t s = 0; s < spec.segment_count(); ++s) {
        SegmentPlan seg;
        seg.kind = s < spec.spike_count ? SegmentPlan::Kind::Spike
                   : s < spec.spike_count + spec.shift_count ? SegmentPlan::Kind::Shift
                   : s < spec.spike_count + spec.shift_count + spec.break_count
                       ? SegmentPlan::Kind::Break
                       : SegmentPlan::Kind::Jump;
        seg.length = len_dist(rng);
        if (spec.guard + seg.length > spec.test_len) {
            throw DataError("synth: segment does not fit in the test split");
        }
        std::uniform_int_distribution<std::size_t> pos_dist(spec.guard,
                                                            spec.test_len - seg.length);
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            seg.begin = pos_dist(rng);
            // Touching segments would merge into one labeled run, so keep at
            // least one normal point between them.
            placed = std::none_of(taken.begin(), taken.end(), [&](auto span) {
                return seg.begin < span.second + 1 && span.first < seg.begin + seg.length + 1;
            });
        }
        if (!placed) {
            throw DataError("synth: could not place non-overlapping anomaly segments");
        }
        taken.emplace_back(seg.begin, seg.begin + seg.length);
        plan.push_back(seg);
    }

    std::uniform_int_distribution<std::size_t> dim_count_dist(1, std::max<std::size_t>(1, m / 3));
    for (const SegmentPlan& seg : plan) {
        std::fill(bundle.test.labels.begin() + seg.begin,
                  bundle.test.labels.begin() + seg.begin + seg.length, std::uint8_t{1});
        const std::size_t touched = dim_count_dist(rng);
        std::vector<std::size_t> dims(m);
        std::iota(dims.begin(), dims.end(), 0);
        std::shuffle(dims.begin(), dims.end(), rng);
        dims.resize(touched);
        switch (seg.kind) {
            case SegmentPlan::Kind::Spike: {
                for (std::size_t t = seg.begin; t < seg.begin + seg.length; ++t) {
                    for (std::size_t d : dims) {
                        const double sign = unit(rng) >= 0.0 ? 1.0 : -1.0;
                        bundle.test.at(t, d) += sign * spec.spike_magnitude;
                    }
                }
                break;
            }
            case SegmentPlan::Kind::Shift: {
                const double sign = unit(rng) >= 0.0 ? 1.0 : -1.0;
                for (std::size_t t = seg.begin; t < seg.begin + seg.length; ++t) {
                    for (std::size_t d : dims) {
                        bundle.test.at(t, d) += sign * spec.shift_magnitude;
                    }
                }
                break;
            }
            case SegmentPlan::Kind::Break: {
                // Replace the touched dimensions with an independent signal of
                // the same scale: dependence breaks, the marginal range stays.
                for (std::size_t d : dims) {
                    const double f = freq_dist(rng);
                    const double ph = phase_dist(rng);
                    double q = std::uniform_real_distribution<double>(0.2, 0.8)(rng);
                    for (std::size_t t = seg.begin; t < seg.begin + seg.length; ++t) {
                        const double tt =
                            static_cast<double>(spec.train_len + t); // global clock
                        double v = std::sin(2.0 * std::numbers::pi * f * tt + ph);
                        v += spec.chaos_weight * loadings[d] * (2.0 * q - 1.0);
                        v += noise(rng);
                        bundle.test.at(t, d) = v;
                        q = advance_driver(q);
                    }
                }
                break;
            }
            case SegmentPlan::Kind::Jump: {
                // Coherent clock shift of every channel with a fresh chaotic
                // state: each window stays locally plausible, only the
                // dependence on the preceding window breaks.
                const std::size_t shifted = seg.length > spec.jump_pad + 1
                                                ? seg.length - spec.jump_pad
                                                : seg.length;
                // Log-uniform offsets span subtle slips through full regime
                // changes, so detection difficulty varies per segment.
                const double offset = std::exp(std::uniform_real_distribution<double>(
                    std::log(50.0), std::log(500.0))(rng));
                double q = std::uniform_real_distribution<double>(0.2, 0.8)(rng);
                for (std::size_t t = seg.begin; t < seg.begin + shifted; ++t) {
                    const double tt = static_cast<double>(spec.train_len + t) + offset;
                    for (std::size_t j = 0; j < m; ++j) {
                        sines[j] = std::sin(2.0 * std::numbers::pi * freqs[j] * tt + phases[j]);
                    }
                    for (std::size_t i = 0; i < m; ++i) {
                        double v = 0.0;
                        for (std::size_t j = 0; j < m; ++j) v += mixing[i * m + j] * sines[j];
                        v += spec.chaos_weight * loadings[i] * (2.0 * q - 1.0);
                        v += noise(rng);
                        bundle.test.at(t, i) = v;
                    }
                    q = advance_driver(q);
                }
                break;
            }
        }
    }
    return bundle;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const NormalizationStats& norm) {
    if (norm.min.size() != params.hyper.input_dim || norm.max.size() != params.hyper.input_dim) {
        throw CheckpointError("normalization stats do not match the input dimension");
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    const ModelHyper& hp = params.hyper;
    out << "lpcad-checkpoint 1\n";
    out << "input_dim " << hp.input_dim << '\n';
    out << "latent_dim " << hp.latent_dim << '\n';
    out << "hist_len " << hp.hist_len << '\n';
    out << "fut_len " << hp.fut_len << '\n';
    out << "hidden_dim " << hp.hidden_dim << '\n';
    out << "variant " << hp.variant_tag() << '\n';
    out << "sigma2 " << fmt17(hp.sigma2) << '\n';
    out << "norm_alpha " << fmt17(norm.alpha) << '\n';
    out << "norm_min";
    for (double v : norm.min) out << ' ' << fmt17(v);
    out << "\nnorm_max";
    for (double v : norm.max) out << ' ' << fmt17(v);
    out << '\n';
    const auto named = params.named_parameters();
    out << "tensors " << named.size() << '\n';
    for (const auto& [name, tensor] : named) {
        out << "tensor " << name << ' ' << tensor.ndim();
        for (std::size_t d = 0; d < tensor.ndim(); ++d) out << ' ' << tensor.dim(d);
        out << '\n';
        auto vals = tensor.values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (i) out << ' ';
            out << fmt17(vals[i]);
        }
        out << '\n';
    }
    out << "end\n";
    if (!out) throw DataError("failed writing " + path.string());
}

namespace {

std::string expect_key(std::istream& in, const std::string& key) {
    std::string k, v;
    if (!(in >> k) || k != key || !(in >> v)) {
        throw CheckpointError("expected '" + key + "' record");
    }
    return v;
}

} // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string magic, version;
    if (!(in >> magic >> version) || magic != "lpcad-checkpoint" || version != "1") {
        throw CheckpointError(path.string() + ": not a checkpoint file");
    }
    ModelHyper hyper;
    hyper.input_dim = parse_number<std::size_t>(expect_key(in, "input_dim"), "input_dim");
    hyper.latent_dim = parse_number<std::size_t>(expect_key(in, "latent_dim"), "latent_dim");
    hyper.hist_len = parse_number<std::size_t>(expect_key(in, "hist_len"), "hist_len");
    hyper.fut_len = parse_number<std::size_t>(expect_key(in, "fut_len"), "fut_len");
    hyper.hidden_dim = parse_number<std::size_t>(expect_key(in, "hidden_dim"), "hidden_dim");
    hyper = ModelHyper::with_variant_tag(hyper, expect_key(in, "variant"));
    hyper.sigma2 = parse_number<double>(expect_key(in, "sigma2"), "sigma2");

    Checkpoint ckpt{ModelParams::zeros(hyper), {}};
    ckpt.norm.alpha = parse_number<double>(expect_key(in, "norm_alpha"), "norm_alpha");
    std::string key;
    if (!(in >> key) || key != "norm_min") throw CheckpointError("expected norm_min");
    ckpt.norm.min.resize(hyper.input_dim);
    for (double& v : ckpt.norm.min)
        if (!(in >> v)) throw CheckpointError("truncated norm_min");
    if (!(in >> key) || key != "norm_max") throw CheckpointError("expected norm_max");
    ckpt.norm.max.resize(hyper.input_dim);
    for (double& v : ckpt.norm.max)
        if (!(in >> v)) throw CheckpointError("truncated norm_max");

    const std::size_t count =
        parse_number<std::size_t>(expect_key(in, "tensors"), "tensors");
    auto named = ckpt.params.named_parameters();
    if (count != named.size()) {
        throw CheckpointError("checkpoint lists " + std::to_string(count) + " tensors, model '" +
                              hyper.variant_tag() + "' has " + std::to_string(named.size()));
    }
    for (auto& [name, tensor] : named) {
        std::string tag, got_name;
        std::size_t ndim = 0;
        if (!(in >> tag >> got_name >> ndim) || tag != "tensor") {
            throw CheckpointError("expected tensor record for " + name);
        }
        if (got_name != name) {
            throw CheckpointError("expected tensor '" + name + "', found '" + got_name + "'");
        }
        Shape shape(ndim);
        for (std::size_t& d : shape)
            if (!(in >> d)) throw CheckpointError("truncated shape for " + name);
        if (shape != tensor.shape()) {
            throw CheckpointError("shape mismatch for " + name);
        }
        for (double& v : tensor.values()) {
            if (!(in >> v)) throw CheckpointError("truncated values for " + name);
            if (!std::isfinite(v)) throw CheckpointError("non-finite value in " + name);
        }
    }
    std::string tail;
    if (!(in >> tail) || tail != "end") throw CheckpointError("missing end marker");
    return ckpt;
}

namespace {

std::pair<std::size_t, std::size_t> resolve_range(
    const ScoreResult& scores, std::optional<std::pair<std::size_t, std::size_t>> range) {
    std::size_t from = scores.first_scored;
    std::size_t to = scores.first_scored + scores.scored_count();
    if (range) {
        from = std::max(from, range->first);
        to = std::min(to, range->second);
    }
    if (from >= to) throw DataError("plot range selects no scored timestamps");
    return {from, to};
}

} // namespace

void emit_plot_data(const std::filesystem::path& path, const SeriesMatrix& test,
                    const ScoreResult& scores, const DetectionReport& report,
                    std::optional<std::pair<std::size_t, std::size_t>> range) {
    if (!test.has_labels() || test.timesteps != scores.first_scored + scores.scored_count() ||
        report.scores.size() != scores.scored_count() || test.metrics != scores.metrics) {
        throw DimensionError("emit_plot_data: inconsistent inputs");
    }
    auto [from, to] = resolve_range(scores, range);
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << "# t";
    for (std::size_t m = 0; m < test.metrics; ++m) out << ",x" << m;
    for (std::size_t m = 0; m < test.metrics; ++m) out << ",r" << m;
    out << ",score,flag,label\n";
    for (std::size_t t = from; t < to; ++t) {
        const std::size_t idx = t - scores.first_scored;
        out << t;
        for (std::size_t m = 0; m < test.metrics; ++m) out << ',' << fmt17(test.at(t, m));
        for (std::size_t m = 0; m < test.metrics; ++m)
            out << ',' << fmt17(scores.reconstruction[idx * test.metrics + m]);
        out << ',' << fmt17(scores.scores[idx]) << ',' << static_cast<int>(report.flags[idx])
            << ',' << static_cast<int>(test.labels[t]) << '\n';
    }
    if (!out) throw DataError("failed writing " + path.string());
}

void emit_plot_svg(const std::filesystem::path& path, const SeriesMatrix& test,
                   const ScoreResult& scores, const DetectionReport& report,
                   std::optional<std::pair<std::size_t, std::size_t>> range) {
    if (!test.has_labels() || test.timesteps != scores.first_scored + scores.scored_count()) {
        throw DimensionError("emit_plot_svg: inconsistent inputs");
    }
    auto [from, to] = resolve_range(scores, range);
    const double width = 900.0, height = 260.0, pad = 10.0;
    double lo = test.at(from, 0), hi = lo;
    for (std::size_t t = from; t < to; ++t) {
        lo = std::min({lo, test.at(t, 0), scores.reconstruction[(t - scores.first_scored) * test.metrics]});
        hi = std::max({hi, test.at(t, 0), scores.reconstruction[(t - scores.first_scored) * test.metrics]});
    }
    if (hi <= lo) hi = lo + 1.0;
    auto sx = [&](std::size_t t) {
        return pad + (width - 2 * pad) * static_cast<double>(t - from) /
                   static_cast<double>(to - from - 1 == 0 ? 1 : to - from - 1);
    };
    auto sy = [&](double v) { return height - pad - (height - 2 * pad) * (v - lo) / (hi - lo); };

    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    // Shaded segments: labeled in red, flagged in yellow.
    auto shade = [&](auto isOn, const char* color, double y0, double h) {
        std::size_t t = from;
        while (t < to) {
            if (!isOn(t)) { ++t; continue; }
            std::size_t begin = t;
            while (t < to && isOn(t)) ++t;
            out << "  <rect x=\"" << sx(begin) << "\" y=\"" << y0 << "\" width=\""
                << std::max(1.0, sx(t - 1) - sx(begin)) << "\" height=\"" << h
                << "\" fill=\"" << color << "\" fill-opacity=\"0.3\"/>\n";
        }
    };
    shade([&](std::size_t t) { return test.labels[t] != 0; }, "#d62728", pad, height - 2 * pad);
    shade([&](std::size_t t) { return report.flags[t - scores.first_scored] != 0; }, "#ffbf00",
          height / 2.0, height / 2.0 - pad);
    auto polyline = [&](const char* color, auto value) {
        out << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
        for (std::size_t t = from; t < to; ++t) {
            out << sx(t) << ',' << sy(value(t)) << ' ';
        }
        out << "\"/>\n";
    };
    polyline("#1f77b4", [&](std::size_t t) { return test.at(t, 0); });
    polyline("#d62728", [&](std::size_t t) {
        return scores.reconstruction[(t - scores.first_scored) * test.metrics];
    });
    out << "</svg>\n";
    if (!out) throw DataError("failed writing " + path.string());
}

TrainConfig parse_train_config(const std::filesystem::path& path) {
    KvReader reader{parse_kv_file(path), path};
    TrainConfig config;
    reader.number("ell_h", config.hist_len);
    reader.number("ell", config.fut_len);
    reader.number("latent_dim", config.latent_dim);
    reader.number("hidden_dim", config.hidden_dim);
    reader.number("mc_samples", config.mc_samples);
    reader.number("sigma2", config.sigma2);
    reader.number("learning_rate", config.learning_rate);
    reader.number("alpha", config.alpha);
    reader.number("batch_size", config.batch_size);
    reader.number("max_epoch", config.max_epoch);
    reader.number("seed", config.seed);
    reader.text("variant", config.variant);
    reader.finish();
    config.validate();
    return config;
}

void write_loss_history(const std::filesystem::path& path, std::span<const double> epoch_loss) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
        out << e << ' ' << fmt17(epoch_loss[e]) << '\n';
    }
}

} // namespace lpcad

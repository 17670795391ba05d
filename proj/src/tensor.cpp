#include "lpcad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

namespace lpcad {

namespace {

std::size_t shape_product(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream out;
    out << "{";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ",";
        out << shape[i];
    }
    out << "}";
    return out.str();
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a) +
                         " and " + shape_str(b));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

} // namespace

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
    auto node = std::make_shared<Node>();
    node->shape = shape;
    node->value.assign(shape_product(shape), 0.0);
    node->requires_grad = requires_grad;
    if (requires_grad) node->grad.assign(node->value.size(), 0.0);
    return Tensor(std::move(node));
}

Tensor Tensor::full(const Shape& shape, double value, bool requires_grad) {
    Tensor t = zeros(shape, requires_grad);
    std::fill(t.node_->value.begin(), t.node_->value.end(), value);
    return t;
}

Tensor Tensor::from_data(const Shape& shape, std::vector<double> values, bool requires_grad) {
    if (values.size() != shape_product(shape)) {
        throw DimensionError("from_data: " + std::to_string(values.size()) +
                             " values for shape " + shape_str(shape));
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw DataError("from_data: non-finite value");
    }
    auto node = std::make_shared<Node>();
    node->shape = shape;
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    if (requires_grad) node->grad.assign(node->value.size(), 0.0);
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) {
    return from_data({1}, {value});
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
    Shape shape{values.size()};
    return from_data(shape, std::move(values), requires_grad);
}

double Tensor::item() const {
    if (size() != 1) {
        throw ContractError("item(): tensor has " + std::to_string(size()) + " elements");
    }
    return node_->value[0];
}

void Tensor::zero_grad() {
    if (node_ && !node_->grad.empty()) {
        std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
    }
}

Tensor Tape::make_output(Shape shape, bool needs_grad) {
    auto node = std::make_shared<Tensor::Node>();
    node->shape = std::move(shape);
    node->value.assign(shape_product(node->shape), 0.0);
    node->requires_grad = needs_grad;
    if (needs_grad) node->grad.assign(node->value.size(), 0.0);
    return Tensor(std::move(node));
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows()) {
        shape_error("matmul", a.shape(), b.shape());
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    bool needs = recording_ && (a.requires_grad() || b.requires_grad());
    Tensor out = make_output({m, n}, needs);
    const double* av = a.node_->value.data();
    const double* bv = b.node_->value.data();
    double* ov = out.node_->value.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            for (std::size_t j = 0; j < n; ++j) ov[i * n + j] += aip * bv[p * n + j];
        }
    }
    if (needs) {
        auto an = a.node_, bn = b.node_, on = out.node_;
        records_.push_back({on, [an, bn, on, m, k, n] {
            const double* g = on->grad.data();
            if (an->requires_grad) {
                double* da = an->grad.data();
                const double* bv2 = bn->value.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j)
                            acc += g[i * n + j] * bv2[p * n + j];
                        da[i * k + p] += acc;
                    }
            }
            if (bn->requires_grad) {
                double* db = bn->grad.data();
                const double* av2 = an->value.data();
                for (std::size_t p = 0; p < k; ++p)
                    for (std::size_t i = 0; i < m; ++i) {
                        const double aip = av2[i * k + p];
                        for (std::size_t j = 0; j < n; ++j)
                            db[p * n + j] += aip * g[i * n + j];
                    }
            }
        }});
    }
    return out;
}

Tensor Tape::matvec(const Tensor& a, const Tensor& x) {
    if (a.ndim() != 2 || x.ndim() != 1 || a.cols() != x.dim(0)) {
        shape_error("matvec", a.shape(), x.shape());
    }
    const std::size_t m = a.rows(), k = a.cols();
    bool needs = recording_ && (a.requires_grad() || x.requires_grad());
    Tensor out = make_output({m}, needs);
    const double* av = a.node_->value.data();
    const double* xv = x.node_->value.data();
    double* ov = out.node_->value.data();
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += av[i * k + p] * xv[p];
        ov[i] = acc;
    }
    if (needs) {
        auto an = a.node_, xn = x.node_, on = out.node_;
        records_.push_back({on, [an, xn, on, m, k] {
            const double* g = on->grad.data();
            if (an->requires_grad) {
                double* da = an->grad.data();
                const double* xv2 = xn->value.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) da[i * k + p] += g[i] * xv2[p];
            }
            if (xn->requires_grad) {
                double* dx = xn->grad.data();
                const double* av2 = an->value.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) dx[p] += av2[i * k + p] * g[i];
            }
        }});
    }
    return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    bool needs = recording_ && (a.requires_grad() || b.requires_grad());
    Tensor out = make_output(a.shape(), needs);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i)
        out.node_->value[i] = a.node_->value[i] + b.node_->value[i];
    if (needs) {
        auto an = a.node_, bn = b.node_, on = out.node_;
        records_.push_back({on, [an, bn, on, n] {
            const double* g = on->grad.data();
            if (an->requires_grad)
                for (std::size_t i = 0; i < n; ++i) an->grad[i] += g[i];
            if (bn->requires_grad)
                for (std::size_t i = 0; i < n; ++i) bn->grad[i] += g[i];
        }});
    }
    return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    bool needs = recording_ && (a.requires_grad() || b.requires_grad());
    Tensor out = make_output(a.shape(), needs);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i)
        out.node_->value[i] = a.node_->value[i] - b.node_->value[i];
    if (needs) {
        auto an = a.node_, bn = b.node_, on = out.node_;
        records_.push_back({on, [an, bn, on, n] {
            const double* g = on->grad.data();
            if (an->requires_grad)
                for (std::size_t i = 0; i < n; ++i) an->grad[i] += g[i];
            if (bn->requires_grad)
                for (std::size_t i = 0; i < n; ++i) bn->grad[i] -= g[i];
        }});
    }
    return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    bool needs = recording_ && (a.requires_grad() || b.requires_grad());
    Tensor out = make_output(a.shape(), needs);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i)
        out.node_->value[i] = a.node_->value[i] * b.node_->value[i];
    if (needs) {
        auto an = a.node_, bn = b.node_, on = out.node_;
        records_.push_back({on, [an, bn, on, n] {
            const double* g = on->grad.data();
            if (an->requires_grad)
                for (std::size_t i = 0; i < n; ++i) an->grad[i] += bn->value[i] * g[i];
            if (bn->requires_grad)
                for (std::size_t i = 0; i < n; ++i) bn->grad[i] += an->value[i] * g[i];
        }});
    }
    return out;
}

Tensor Tape::scale(const Tensor& a, double factor) {
    bool needs = recording_ && a.requires_grad();
    Tensor out = make_output(a.shape(), needs);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.node_->value[i] = factor * a.node_->value[i];
    if (needs) {
        auto an = a.node_, on = out.node_;
        records_.push_back({on, [an, on, n, factor] {
            for (std::size_t i = 0; i < n; ++i) an->grad[i] += factor * on->grad[i];
        }});
    }
    return out;
}

Tensor Tape::sigmoid(const Tensor& a) {
    bool needs = recording_ && a.requires_grad();
    Tensor out = make_output(a.shape(), needs);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i)
        out.node_->value[i] = 1.0 / (1.0 + std::exp(-a.node_->value[i]));
    if (needs) {
        auto an = a.node_, on = out.node_;
        records_.push_back({on, [an, on, n] {
            for (std::size_t i = 0; i < n; ++i) {
                const double s = on->value[i];
                an->grad[i] += s * (1.0 - s) * on->grad[i];
            }
        }});
    }
    return out;
}

Tensor Tape::tanh(const Tensor& a) {
    bool needs = recording_ && a.requires_grad();
    Tensor out = make_output(a.shape(), needs);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.node_->value[i] = std::tanh(a.node_->value[i]);
    if (needs) {
        auto an = a.node_, on = out.node_;
        records_.push_back({on, [an, on, n] {
            for (std::size_t i = 0; i < n; ++i) {
                const double t = on->value[i];
                an->grad[i] += (1.0 - t * t) * on->grad[i];
            }
        }});
    }
    return out;
}

Tensor Tape::abs(const Tensor& a) {
    bool needs = recording_ && a.requires_grad();
    Tensor out = make_output(a.shape(), needs);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.node_->value[i] = std::fabs(a.node_->value[i]);
    if (needs) {
        auto an = a.node_, on = out.node_;
        records_.push_back({on, [an, on, n] {
            for (std::size_t i = 0; i < n; ++i) {
                const double x = an->value[i];
                const double sign = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                an->grad[i] += sign * on->grad[i];
            }
        }});
    }
    return out;
}

Tensor Tape::sum(const Tensor& a) {
    bool needs = recording_ && a.requires_grad();
    Tensor out = make_output({1}, needs);
    out.node_->value[0] =
        std::accumulate(a.node_->value.begin(), a.node_->value.end(), 0.0);
    if (needs) {
        auto an = a.node_, on = out.node_;
        records_.push_back({on, [an, on] {
            const double g = on->grad[0];
            for (double& d : an->grad) d += g;
        }});
    }
    return out;
}

Tensor Tape::dot(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 1 || b.ndim() != 1 || a.size() != b.size()) {
        shape_error("dot", a.shape(), b.shape());
    }
    bool needs = recording_ && (a.requires_grad() || b.requires_grad());
    Tensor out = make_output({1}, needs);
    double acc = 0.0;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) acc += a.node_->value[i] * b.node_->value[i];
    out.node_->value[0] = acc;
    if (needs) {
        auto an = a.node_, bn = b.node_, on = out.node_;
        records_.push_back({on, [an, bn, on, n] {
            const double g = on->grad[0];
            if (an->requires_grad)
                for (std::size_t i = 0; i < n; ++i) an->grad[i] += g * bn->value[i];
            if (bn->requires_grad)
                for (std::size_t i = 0; i < n; ++i) bn->grad[i] += g * an->value[i];
        }});
    }
    return out;
}

Tensor Tape::frobenius_norm(const Tensor& a) {
    bool needs = recording_ && a.requires_grad();
    Tensor out = make_output({1}, needs);
    double acc = 0.0;
    for (double v : a.node_->value) acc += v * v;
    out.node_->value[0] = std::sqrt(acc);
    if (needs) {
        auto an = a.node_, on = out.node_;
        records_.push_back({on, [an, on] {
            const double norm = on->value[0];
            if (norm == 0.0) return; // subgradient 0 at the origin
            const double g = on->grad[0] / norm;
            const std::size_t n = an->value.size();
            for (std::size_t i = 0; i < n; ++i) an->grad[i] += g * an->value[i];
        }});
    }
    return out;
}

Tensor Tape::softmax(const Tensor& a) {
    if (a.ndim() != 1) {
        throw DimensionError("softmax: expected a vector, got " + shape_str(a.shape()));
    }
    bool needs = recording_ && a.requires_grad();
    Tensor out = make_output(a.shape(), needs);
    const std::size_t n = a.size();
    const double hi = *std::max_element(a.node_->value.begin(), a.node_->value.end());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.node_->value[i] = std::exp(a.node_->value[i] - hi);
        total += out.node_->value[i];
    }
    for (std::size_t i = 0; i < n; ++i) out.node_->value[i] /= total;
    if (needs) {
        auto an = a.node_, on = out.node_;
        records_.push_back({on, [an, on, n] {
            double inner = 0.0;
            for (std::size_t i = 0; i < n; ++i) inner += on->grad[i] * on->value[i];
            for (std::size_t i = 0; i < n; ++i)
                an->grad[i] += on->value[i] * (on->grad[i] - inner);
        }});
    }
    return out;
}

Tensor Tape::concat(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 1 || b.ndim() != 1) shape_error("concat", a.shape(), b.shape());
    const std::size_t na = a.size(), nb = b.size();
    bool needs = recording_ && (a.requires_grad() || b.requires_grad());
    Tensor out = make_output({na + nb}, needs);
    std::copy(a.node_->value.begin(), a.node_->value.end(), out.node_->value.begin());
    std::copy(b.node_->value.begin(), b.node_->value.end(), out.node_->value.begin() + na);
    if (needs) {
        auto an = a.node_, bn = b.node_, on = out.node_;
        records_.push_back({on, [an, bn, on, na, nb] {
            if (an->requires_grad)
                for (std::size_t i = 0; i < na; ++i) an->grad[i] += on->grad[i];
            if (bn->requires_grad)
                for (std::size_t i = 0; i < nb; ++i) bn->grad[i] += on->grad[na + i];
        }});
    }
    return out;
}

Tensor Tape::stack_cols(std::span<const Tensor> columns) {
    if (columns.empty()) throw DimensionError("stack_cols: empty column list");
    const std::size_t n = columns[0].size();
    bool needs = false;
    for (const Tensor& c : columns) {
        if (c.ndim() != 1 || c.size() != n) shape_error("stack_cols", columns[0].shape(), c.shape());
        needs = needs || c.requires_grad();
    }
    needs = needs && recording_;
    const std::size_t k = columns.size();
    Tensor out = make_output({n, k}, needs);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i)
            out.node_->value[i * k + j] = columns[j].node_->value[i];
    if (needs) {
        std::vector<Tensor::NodePtr> ins;
        ins.reserve(k);
        for (const Tensor& c : columns) ins.push_back(c.node_);
        auto on = out.node_;
        records_.push_back({on, [ins, on, n, k] {
            for (std::size_t j = 0; j < k; ++j) {
                if (!ins[j]->requires_grad) continue;
                for (std::size_t i = 0; i < n; ++i)
                    ins[j]->grad[i] += on->grad[i * k + j];
            }
        }});
    }
    return out;
}

Tensor Tape::col(const Tensor& a, std::size_t j) {
    if (a.ndim() != 2 || j >= a.cols()) {
        throw DimensionError("col: index " + std::to_string(j) + " out of " +
                             shape_str(a.shape()));
    }
    const std::size_t n = a.rows(), k = a.cols();
    bool needs = recording_ && a.requires_grad();
    Tensor out = make_output({n}, needs);
    for (std::size_t i = 0; i < n; ++i) out.node_->value[i] = a.node_->value[i * k + j];
    if (needs) {
        auto an = a.node_, on = out.node_;
        records_.push_back({on, [an, on, n, k, j] {
            for (std::size_t i = 0; i < n; ++i) an->grad[i * k + j] += on->grad[i];
        }});
    }
    return out;
}

void Tape::backward(const Tensor& root) {
    if (!root.defined() || root.size() != 1) {
        throw ContractError("backward: root must be a scalar tensor");
    }
    // Interior gradients are owned by this tape's records; reset them so a
    // second backward call accumulates only into leaves.
    for (Record& r : records_) {
        std::fill(r.output->grad.begin(), r.output->grad.end(), 0.0);
    }
    if (!root.node_->grad.empty()) root.node_->grad[0] += 1.0;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        it->pull();
    }
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    first_moment_.reserve(params_.size());
    second_moment_.reserve(params_.size());
    for (const Tensor& p : params_) {
        first_moment_.emplace_back(p.size(), 0.0);
        second_moment_.emplace_back(p.size(), 0.0);
    }
}

void AdamOptimizer::step() {
    for (const Tensor& p : params_) {
        if (!p.requires_grad() || !p.has_grad()) {
            throw ContractError("adam step: parameter missing gradient");
        }
    }
    ++steps_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& p = params_[pi];
        auto g = p.grad();
        auto& m = first_moment_[pi];
        auto& v = second_moment_[pi];
        auto value = p.values();
        for (std::size_t i = 0; i < value.size(); ++i) {
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            value[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
        }
        p.zero_grad();
    }
}

double finite_diff_check(const std::function<Tensor(Tape&)>& fn,
                         std::span<Tensor> params, double step) {
    if (step <= 0.0) throw ContractError("finite_diff_check: step must be positive");
    for (Tensor& p : params) p.zero_grad();
    std::vector<std::vector<double>> autodiff;
    {
        Tape tape;
        Tensor root = fn(tape);
        tape.backward(root);
    }
    autodiff.reserve(params.size());
    for (Tensor& p : params) {
        autodiff.emplace_back(p.grad().begin(), p.grad().end());
    }

    auto evaluate = [&fn]() {
        Tape tape(false);
        return fn(tape).item();
    };

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = params[pi];
        auto value = p.values();
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double saved = value[i];
            value[i] = saved + step;
            const double up = evaluate();
            value[i] = saved - step;
            const double down = evaluate();
            value[i] = saved;
            const double fd = (up - down) / (2.0 * step);
            const double ad = autodiff[pi][i];
            const double err = std::fabs(ad - fd) /
                               std::max({1.0, std::fabs(ad), std::fabs(fd)});
            worst = std::max(worst, err);
        }
    }
    for (Tensor& p : params) p.zero_grad();
    return worst;
}

} // namespace lpcad

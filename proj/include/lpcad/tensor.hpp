#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "lpcad/errors.hpp"

namespace lpcad {

using Shape = std::vector<std::size_t>;

class Tape;

// Dense row-major tensor of 64-bit floats with an optional gradient buffer.
// Value semantics with shared storage: copies alias the same buffer, which is
// what the tape needs to reach parameters during the backward pass.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor full(const Shape& shape, double value, bool requires_grad = false);
    static Tensor from_data(const Shape& shape, std::vector<double> values,
                            bool requires_grad = false);
    static Tensor scalar(double value);
    static Tensor vector(std::vector<double> values, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t ndim() const { return node_->shape.size(); }
    std::size_t dim(std::size_t i) const { return node_->shape[i]; }
    std::size_t size() const { return node_->value.size(); }
    std::size_t rows() const { return node_->shape[0]; }
    std::size_t cols() const { return node_->shape[1]; }

    std::span<const double> values() const { return node_->value; }
    std::span<double> values() { return node_->value; }
    double operator[](std::size_t i) const { return node_->value[i]; }
    double& operator[](std::size_t i) { return node_->value[i]; }
    // 2-D access, row-major.
    double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return node_->value[r * cols() + c]; }
    // Value of a scalar (size-1) tensor.
    double item() const;

    bool requires_grad() const { return node_ && node_->requires_grad; }
    bool has_grad() const { return node_ && !node_->grad.empty(); }
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> grad() { return node_->grad; }
    void zero_grad();

    // True when the two handles alias the same storage.
    bool same_storage(const Tensor& other) const { return node_ == other.node_; }

private:
    friend class Tape;
    struct Node {
        Shape shape;
        std::vector<double> value;
        std::vector<double> grad; // empty unless requires_grad
        bool requires_grad = false;
    };
    using NodePtr = std::shared_ptr<Node>;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}
    NodePtr node_;
};

// Records every differentiable operation in execution order, which is a
// topological order by construction. backward() replays the records once,
// in reverse, accumulating into the gradient buffers of requires_grad leaves.
// A tape is confined to one thread; independent evaluations use their own.
class Tape {
public:
    // recording=false computes values only; nothing is taped and outputs do
    // not require gradients. Used for inference/scoring paths.
    explicit Tape(bool recording = true) : recording_(recording) {}

    Tensor matmul(const Tensor& a, const Tensor& b); // {m,k} x {k,n} -> {m,n}
    Tensor matvec(const Tensor& a, const Tensor& x); // {m,k} x {k}   -> {m}
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);    // componentwise
    Tensor scale(const Tensor& a, double factor);
    Tensor sigmoid(const Tensor& a);
    Tensor tanh(const Tensor& a);
    Tensor abs(const Tensor& a);                     // subgradient 0 at 0
    Tensor sum(const Tensor& a);                     // -> scalar
    Tensor dot(const Tensor& a, const Tensor& b);    // {n} . {n} -> scalar
    Tensor frobenius_norm(const Tensor& a);          // -> scalar, subgradient 0 at 0
    Tensor softmax(const Tensor& a);                 // {n} -> {n}
    Tensor concat(const Tensor& a, const Tensor& b); // {m} ++ {n} -> {m+n}
    Tensor stack_cols(std::span<const Tensor> columns); // k x {n} -> {n,k}
    Tensor col(const Tensor& a, std::size_t j);      // {n,k} -> {n}

    // Seeds d(root)/d(root) = 1 and pulls gradients back through every
    // recorded operation exactly once. Repeated calls accumulate into leaf
    // gradients; interior buffers are reset on each call.
    void backward(const Tensor& root);

    std::size_t num_ops() const { return records_.size(); }
    bool recording() const { return recording_; }

private:
    struct Record {
        Tensor::NodePtr output;
        std::function<void()> pull;
    };
    Tensor make_output(Shape shape, bool needs_grad);
    std::vector<Record> records_;
    bool recording_;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adam with bias correction over a fixed parameter list. step() consumes the
// gradients populated by Tape::backward and clears them afterwards.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Tensor> params, AdamConfig config = {});

    void step();
    std::uint64_t step_count() const { return steps_; }
    const AdamConfig& config() const { return config_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> first_moment_;
    std::vector<std::vector<double>> second_moment_;
    std::uint64_t steps_ = 0;
    AdamConfig config_;
};

// Compares the taped gradient of a deterministic scalar function against
// central finite differences. Returns the worst relative error over all
// parameter components (relative to max(1, |grad|)). Test oracle.
double finite_diff_check(const std::function<Tensor(Tape&)>& fn,
                         std::span<Tensor> params, double step);

} // namespace lpcad

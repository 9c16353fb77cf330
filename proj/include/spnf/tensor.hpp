#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "spnf/errors.hpp"

namespace spnf::nn {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

/// One vertex of the computation graph: value buffer, gradient buffer,
/// parent links and the backward rule that pulls this node's gradient
/// into its parents. Leaves created with requires_grad own the trainable
/// state; everything else is produced by ops.
struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;        // allocated on first accumulation
    bool requires_grad = false;
    bool grad_filled = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    std::size_t size() const { return data.size(); }
    void ensure_grad() {
        if (grad.size() != data.size())
            grad.assign(data.size(), 0.0);
    }
    void clear_grad() {
        if (!grad.empty())
            std::fill(grad.begin(), grad.end(), 0.0);
        grad_filled = false;
    }
};

/// Value-semantics handle to a graph node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->data.size(); }
    double* data() { return node_->data.data(); }
    const double* data() const { return node_->data.data(); }
    std::vector<double>& values() { return node_->data; }
    const std::vector<double>& values() const { return node_->data; }
    bool requires_grad() const { return node_->requires_grad; }

    /// Scalar extraction; throws ShapeMismatch unless numel == 1.
    double item() const;

    bool grad_filled() const { return node_->grad_filled; }
    const std::vector<double>& grad() const;
    void clear_grad() { node_->clear_grad(); }

    std::shared_ptr<Node>& node() { return node_; }
    const std::shared_ptr<Node>& node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

/// While alive, newly created ops do not record parents or backward
/// rules (inference mode). Nestable.
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
private:
    bool prev_;
};

bool grad_enabled();

/// Builds an op node. `parents` are recorded (and `backward_fn` kept)
/// only when grad mode is on and some parent requires grad. The caller
/// fills the returned tensor's data. Extension point for fused ops owned
/// by other modules (e.g. the ray quadrature).
Tensor make_op(Shape shape, std::vector<Tensor> parents,
               std::function<void(Node&)> backward_fn);

/// Reverse-mode sweep from a scalar loss: topological order over the
/// recorded graph, then each node's backward rule in reverse. Leaf
/// gradients accumulate additively; saved forward state is not modified.
void backward(const Tensor& loss);

}  // namespace spnf::nn

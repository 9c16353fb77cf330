#include "spnf/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace spnf::nn {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i)
        os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s)
        n *= d;
    return n;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->data.assign(shape_numel(shape), 0.0);
    n->shape = std::move(shape);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.values().begin(), t.values().end(), value);
    return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    if (data.size() != shape_numel(shape))
        throw ShapeMismatch("Tensor::from_data: buffer length " + std::to_string(data.size()) +
                            " does not match shape " + shape_str(shape));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

double Tensor::item() const {
    if (size() != 1)
        throw ShapeMismatch("Tensor::item: tensor of shape " + shape_str(shape()) +
                            " is not a scalar");
    return node_->data[0];
}

const std::vector<double>& Tensor::grad() const {
    if (!node_->grad_filled)
        throw MissingGradient("Tensor::grad: gradient not populated; run backward() first");
    return node_->grad;
}

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor make_op(Shape shape, std::vector<Tensor> parents,
               std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->data.assign(shape_numel(shape), 0.0);
    n->shape = std::move(shape);
    bool track = false;
    if (g_grad_enabled)
        for (const Tensor& p : parents)
            if (p.node() && p.node()->requires_grad)
                track = true;
    if (track) {
        n->requires_grad = true;
        n->parents.reserve(parents.size());
        for (Tensor& p : parents)
            n->parents.push_back(p.node());
        n->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(n));
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw ShapeMismatch("backward: loss must be a defined scalar tensor");
    Node* root = loss.node().get();
    if (!root->requires_grad)
        throw MissingGradient("backward: loss does not depend on any parameter");

    // Iterative post-order DFS; order_ holds children after all parents
    // they feed, so reverse iteration is a valid reverse-topological sweep.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame { Node* node; std::size_t next_parent; };
    std::vector<Frame> stack{{root, 0}};
    visited.insert(root);
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            Node* p = f.node->parents[f.next_parent++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] += 1.0;
    root->grad_filled = true;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn)
            (*it)->backward_fn(**it);
}

}  // namespace spnf::nn

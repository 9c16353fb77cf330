#include "spnf/optim.hpp"

#include <cmath>

namespace spnf::nn {

Tensor ParameterStore::create(const std::string& name, Shape shape,
                              std::vector<double> values) {
    if (contains(name))
        throw InvalidArgument("ParameterStore: duplicate parameter '" + name + "'");
    Entry e;
    e.name = name;
    e.tensor = Tensor::from_data(std::move(shape), std::move(values), /*requires_grad=*/true);
    e.adam_m.assign(e.tensor.size(), 0.0);
    e.adam_v.assign(e.tensor.size(), 0.0);
    entries_.push_back(std::move(e));
    return entries_.back().tensor;
}

Tensor ParameterStore::create_zeros(const std::string& name, Shape shape) {
    std::vector<double> values(shape_numel(shape), 0.0);
    return create(name, std::move(shape), std::move(values));
}

bool ParameterStore::contains(const std::string& name) const {
    for (const Entry& e : entries_)
        if (e.name == name)
            return true;
    return false;
}

Tensor ParameterStore::get(const std::string& name) const {
    for (const Entry& e : entries_)
        if (e.name == name)
            return e.tensor;
    throw InvalidArgument("ParameterStore: no parameter named '" + name + "'");
}

std::size_t ParameterStore::total_params() const {
    std::size_t n = 0;
    for (const Entry& e : entries_)
        n += e.tensor.size();
    return n;
}

void ParameterStore::zero_grad() {
    for (Entry& e : entries_)
        e.tensor.clear_grad();
}

void adam_step(ParameterStore& store, double lr, double beta1, double beta2, double eps) {
    for (const auto& e : store.entries())
        if (!e.tensor.grad_filled())
            throw MissingGradient("adam_step: parameter '" + e.name +
                                  "' has no populated gradient");
    const std::int64_t t = ++store.step_count_;
    const double bc1 = 1.0 - std::pow(beta1, double(t));
    const double bc2 = 1.0 - std::pow(beta2, double(t));
    for (auto& e : store.entries_) {
        Node& node = *e.tensor.node();
        const std::size_t n = node.data.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double g = node.grad[i];
            e.adam_m[i] = beta1 * e.adam_m[i] + (1.0 - beta1) * g;
            e.adam_v[i] = beta2 * e.adam_v[i] + (1.0 - beta2) * g * g;
            const double mhat = e.adam_m[i] / bc1;
            const double vhat = e.adam_v[i] / bc2;
            node.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
        node.clear_grad();
    }
}

}  // namespace spnf::nn

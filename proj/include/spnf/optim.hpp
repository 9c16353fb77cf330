#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spnf/tensor.hpp"

namespace spnf::nn {

/// Named trainable parameters plus their Adam moment buffers. Iteration
/// order is insertion order, so updates and serialization are
/// deterministic.
class ParameterStore {
public:
    struct Entry {
        std::string name;
        Tensor tensor;
        std::vector<double> adam_m;
        std::vector<double> adam_v;
    };

    Tensor create(const std::string& name, Shape shape, std::vector<double> values);
    Tensor create_zeros(const std::string& name, Shape shape);

    bool contains(const std::string& name) const;
    Tensor get(const std::string& name) const;
    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }

    std::size_t total_params() const;
    void zero_grad();

    std::int64_t step_count() const { return step_count_; }
    void set_step_count(std::int64_t s) { step_count_ = s; }

private:
    friend void adam_step(ParameterStore&, double, double, double, double);
    std::vector<Entry> entries_;
    std::int64_t step_count_ = 0;
};

/// Bias-corrected Adam update applied in place; gradients are cleared
/// afterwards. Throws MissingGradient if any parameter has no populated
/// gradient.
void adam_step(ParameterStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

}  // namespace spnf::nn

#pragma once

#include <functional>

#include "spnf/tensor.hpp"

namespace spnf::nn {

/// Result of comparing reverse-mode gradients against central finite
/// differences. Elements flagged as sitting on a non-smooth point (e.g.
/// a relu kink under the probe step) are excluded from pass/fail.
struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
    std::size_t kinks = 0;

    bool passed(double tol) const { return checked > 0 && max_rel_err <= tol; }
};

/// Central differences with step h on every element of x, compared
/// against the autodiff gradient of the scalar f(x). f must be
/// deterministic.
GradCheckReport finite_diff_check(const std::function<Tensor(const Tensor&)>& f,
                                  Tensor x, double h = 1e-4);

}  // namespace spnf::nn

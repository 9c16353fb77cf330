#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spnf/gradcheck.hpp"

namespace spnf {

/// Finite-difference verification across every differentiable building
/// block: dense, conv2d (1x1 and 3x3), activations, pooling and
/// resampling, the attention gate, the spectrum-attention block, the ray
/// quadrature and the full spectral field. Deterministic.
std::vector<std::pair<std::string, nn::GradCheckReport>> run_gradient_suite();

}  // namespace spnf

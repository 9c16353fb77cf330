#pragma once

#include "spnf/tensor.hpp"

namespace spnf::nn {

// Elementwise (same shape unless noted).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& x);     // relu'(0) = 0
Tensor sigmoid(const Tensor& x);

/// x:(B,in) * W:(in,out) + b:(out) broadcast over rows.
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b);

/// Cross-correlation, NCHW. x:(B,C,H,W), k:(O,C,kh,kw), b:(O).
/// Output spatial size floor((H + 2p - kh)/stride) + 1.
Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& b,
              int stride = 1, int padding = 0);

Tensor global_avg_pool(const Tensor& x);              // (B,C,H,W) -> (B,C)
Tensor downsample2(const Tensor& x);                  // 2x2 mean pool; even dims
Tensor upsample2(const Tensor& x);                    // nearest-neighbor doubling
Tensor concat(const Tensor& a, const Tensor& b, int axis);

/// Channel-wise rescale: out[b,c,h,w] = x[b,c,h,w] * s[b,c].
Tensor mul_channels(const Tensor& x, const Tensor& s);
/// Spatial-mask rescale: out[b,c,h,w] = x[b,c,h,w] * m[b,0,h,w].
Tensor mul_spatial(const Tensor& x, const Tensor& m);

/// Per-column constant weights on a (R,F) tensor (weights carry no grad).
Tensor mul_cols(const Tensor& x, const std::vector<double>& col_weights);

Tensor sum_all(const Tensor& x);                      // -> scalar
Tensor mse(const Tensor& pred, const Tensor& target); // mean squared error

/// Permutes pixel-major rows (H*W, C) into a (1, C, H, W) image tensor.
Tensor rows_to_nchw(const Tensor& x, std::size_t height, std::size_t width);

}  // namespace spnf::nn

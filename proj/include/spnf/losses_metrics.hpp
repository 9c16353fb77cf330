#pragma once

#include <vector>

#include "spnf/image.hpp"
#include "spnf/ops.hpp"

namespace spnf {

/// Per-band spectral loss weights w_s = 2^(P_max / P_lambda), driven by
/// a running (EMA) per-band PSNR estimate. Before the first update all
/// weights sit at 2.
struct SpectralWeights {
    std::vector<double> w_s;       // length s_num
    std::vector<double> p_lambda;  // running PSNR per band (dB)
    bool initialized = false;

    double p_max() const;
};

SpectralWeights make_spectral_weights(int s_num);

struct LossConfig {
    double lambda_rgb = 1.1;
    int ws_update_interval = 100;  // steps between w_s refreshes
    double ema_decay = 0.9;
};

/// Eq-style weighted spectral reconstruction loss over a ray batch:
/// sum over bands of w_s * (mean over rays of the coarse squared band
/// error + the fine one). Predictions and target are (R, 3*s_num) with
/// band-major channel layout.
nn::Tensor spectral_loss(const nn::Tensor& coarse, const nn::Tensor& fine,
                         const nn::Tensor& target, const SpectralWeights& weights);

/// Folds the current batch's per-band PSNR (computed from the coarse
/// predictions, clamped into [10, 60] dB) into the running estimate and
/// recomputes w_s.
void update_ws(const double* coarse_pred, const double* target, std::size_t rays,
               int s_num, SpectralWeights& state, const LossConfig& cfg);

/// Recomputes w_s = 2^(P_max / P_lambda) from the current p_lambda.
void recompute_ws(SpectralWeights& state);

/// Mean squared error between predicted and target RGB.
nn::Tensor rgb_loss(const nn::Tensor& pred, const nn::Tensor& target);

nn::Tensor total_loss(const nn::Tensor& spectral, const nn::Tensor& rgb,
                      const LossConfig& cfg);
double total_loss(double spectral, double rgb, const LossConfig& cfg);

/// 10*log10(peak^2 / MSE); exact-zero MSE clamps to 60 dB.
double psnr(const double* a, const double* b, std::size_t n, double peak = 1.0);
double psnr(const RgbImage& a, const RgbImage& b, double peak = 1.0);

/// Mean local SSIM, 11x11 Gaussian window sigma 1.5, K1 = 0.01,
/// K2 = 0.03, dynamic range 1; channels averaged. Throws TooSmall when
/// min(H, W) < 11.
double ssim(const RgbImage& a, const RgbImage& b);

/// Mean absolute distance; `scaled` multiplies by 1e3 (the reporting
/// convention of the comparison tables), never applied silently.
double l1(const double* a, const double* b, std::size_t n, bool scaled = false);
double l1(const RgbImage& a, const RgbImage& b, bool scaled = false);

/// One metrics row (the mean row uses view = -1).
struct MetricsRow {
    std::string scene;
    int view = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    double l1 = 0.0;
};

MetricsRow evaluate_pair(const std::string& scene, int view, const RgbImage& pred,
                         const RgbImage& target, bool l1_scaled = false);

/// CSV with header scene,view,psnr,ssim,l1; numbers at 9 significant
/// digits; appends a mean row when rows is non-empty.
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

}  // namespace spnf

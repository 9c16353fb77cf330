#include "spnf/losses_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace spnf {

double SpectralWeights::p_max() const {
    return *std::max_element(p_lambda.begin(), p_lambda.end());
}

SpectralWeights make_spectral_weights(int s_num) {
    if (s_num < 1)
        throw InvalidArgument("make_spectral_weights: s_num must be >= 1");
    SpectralWeights w;
    w.w_s.assign(s_num, 2.0);
    w.p_lambda.assign(s_num, 60.0);
    return w;
}

nn::Tensor spectral_loss(const nn::Tensor& coarse, const nn::Tensor& fine,
                         const nn::Tensor& target, const SpectralWeights& weights) {
    using namespace nn;
    if (coarse.shape() != target.shape() || fine.shape() != target.shape())
        throw ShapeMismatch("spectral_loss: prediction/target shapes disagree");
    if (coarse.shape().size() != 2 || coarse.shape()[1] != weights.w_s.size() * 3)
        throw ShapeMismatch("spectral_loss: expected (R, 3*s_num) with s_num = " +
                            std::to_string(weights.w_s.size()));
    const std::size_t rays = coarse.shape()[0];
    std::vector<double> col_w(weights.w_s.size() * 3);
    for (std::size_t k = 0; k < weights.w_s.size(); ++k)
        for (int c = 0; c < 3; ++c)
            col_w[k * 3 + c] = weights.w_s[k];

    Tensor dc = sub(coarse, target);
    Tensor df = sub(fine, target);
    Tensor sc = sum_all(mul_cols(mul(dc, dc), col_w));
    Tensor sf = sum_all(mul_cols(mul(df, df), col_w));
    return scale(add(sc, sf), 1.0 / double(rays));
}

void update_ws(const double* coarse_pred, const double* target, std::size_t rays,
               int s_num, SpectralWeights& state, const LossConfig& cfg) {
    if (int(state.w_s.size()) != s_num)
        throw ShapeMismatch("update_ws: state size does not match s_num");
    const std::size_t cols = std::size_t(s_num) * 3;
    for (int k = 0; k < s_num; ++k) {
        double se = 0.0;
        for (std::size_t r = 0; r < rays; ++r)
            for (int c = 0; c < 3; ++c) {
                const double d = coarse_pred[r * cols + k * 3 + c] -
                                 target[r * cols + k * 3 + c];
                se += d * d;
            }
        const double mse = se / double(rays * 3);
        double p = mse == 0.0 ? 60.0 : 10.0 * std::log10(1.0 / mse);
        p = std::clamp(p, 10.0, 60.0);
        state.p_lambda[k] = state.initialized
                                ? cfg.ema_decay * state.p_lambda[k] + (1.0 - cfg.ema_decay) * p
                                : p;
    }
    state.initialized = true;
    recompute_ws(state);
}

void recompute_ws(SpectralWeights& state) {
    const double pmax = state.p_max();
    for (std::size_t k = 0; k < state.w_s.size(); ++k)
        state.w_s[k] = std::pow(2.0, pmax / state.p_lambda[k]);
}

nn::Tensor rgb_loss(const nn::Tensor& pred, const nn::Tensor& target) {
    return nn::mse(pred, target);
}

nn::Tensor total_loss(const nn::Tensor& spectral, const nn::Tensor& rgb,
                      const LossConfig& cfg) {
    return nn::add(spectral, nn::scale(rgb, cfg.lambda_rgb));
}

double total_loss(double spectral, double rgb, const LossConfig& cfg) {
    return spectral + cfg.lambda_rgb * rgb;
}

double psnr(const double* a, const double* b, std::size_t n, double peak) {
    if (n == 0)
        throw ShapeMismatch("psnr: empty input");
    double se = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        se += d * d;
    }
    const double mse = se / double(n);
    if (mse == 0.0)
        return 60.0;
    return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const RgbImage& a, const RgbImage& b, double peak) {
    if (a.width != b.width || a.height != b.height)
        throw ShapeMismatch("psnr: image dimensions disagree");
    return psnr(a.data.data(), b.data.data(), a.data.size(), peak);
}

namespace {

// 11x11 Gaussian window, sigma 1.5, normalized to unit sum.
const std::vector<double>& ssim_window() {
    static const std::vector<double> w = [] {
        std::vector<double> v(11 * 11);
        double sum = 0.0;
        for (int i = 0; i < 11; ++i)
            for (int j = 0; j < 11; ++j) {
                const double dy = i - 5.0, dx = j - 5.0;
                v[i * 11 + j] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
                sum += v[i * 11 + j];
            }
        for (double& x : v)
            x /= sum;
        return v;
    }();
    return w;
}

}  // namespace

double ssim(const RgbImage& a, const RgbImage& b) {
    if (a.width != b.width || a.height != b.height)
        throw ShapeMismatch("ssim: image dimensions disagree");
    if (a.width < 11 || a.height < 11)
        throw TooSmall("ssim: min image dimension must be >= 11");
    constexpr double kC1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
    constexpr double kC2 = 0.03 * 0.03;
    const auto& win = ssim_window();

    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        double channel_sum = 0.0;
        std::size_t windows = 0;
        for (int y = 0; y + 11 <= a.height; ++y)
            for (int x = 0; x + 11 <= a.width; ++x) {
                double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
                for (int i = 0; i < 11; ++i)
                    for (int j = 0; j < 11; ++j) {
                        const double w = win[i * 11 + j];
                        const double va = a.at(x + j, y + i, c);
                        const double vb = b.at(x + j, y + i, c);
                        ma += w * va;
                        mb += w * vb;
                        saa += w * va * va;
                        sbb += w * vb * vb;
                        sab += w * va * vb;
                    }
                const double var_a = saa - ma * ma;
                const double var_b = sbb - mb * mb;
                const double cov = sab - ma * mb;
                channel_sum += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
                               ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
                ++windows;
            }
        total += channel_sum / double(windows);
    }
    return total / 3.0;
}

double l1(const double* a, const double* b, std::size_t n, bool scaled) {
    if (n == 0)
        throw ShapeMismatch("l1: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += std::abs(a[i] - b[i]);
    return (s / double(n)) * (scaled ? 1e3 : 1.0);
}

double l1(const RgbImage& a, const RgbImage& b, bool scaled) {
    if (a.width != b.width || a.height != b.height)
        throw ShapeMismatch("l1: image dimensions disagree");
    return l1(a.data.data(), b.data.data(), a.data.size(), scaled);
}

MetricsRow evaluate_pair(const std::string& scene, int view, const RgbImage& pred,
                         const RgbImage& target, bool l1_scaled) {
    return {scene, view, psnr(pred, target), ssim(pred, target), l1(pred, target, l1_scaled)};
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path);
    if (!out)
        throw IoError("write_metrics_csv: cannot open " + path);
    out << "scene,view,psnr,ssim,l1\n";
    char buf[160];
    MetricsRow mean;
    for (const MetricsRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%d,%.9g,%.9g,%.9g\n", r.scene.c_str(), r.view,
                      r.psnr, r.ssim, r.l1);
        out << buf;
        mean.psnr += r.psnr;
        mean.ssim += r.ssim;
        mean.l1 += r.l1;
    }
    if (!rows.empty()) {
        const double n = double(rows.size());
        std::snprintf(buf, sizeof buf, "%s,-1,%.9g,%.9g,%.9g\n", rows[0].scene.c_str(),
                      mean.psnr / n, mean.ssim / n, mean.l1 / n);
        out << buf;
    }
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw MissingFile("read_metrics_csv: cannot open " + path);
    std::vector<MetricsRow> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        MetricsRow r;
        std::size_t p0 = line.find(',');
        if (p0 == std::string::npos)
            throw IoError("read_metrics_csv: malformed row in " + path);
        r.scene = line.substr(0, p0);
        if (std::sscanf(line.c_str() + p0 + 1, "%d,%lg,%lg,%lg", &r.view, &r.psnr, &r.ssim,
                        &r.l1) != 4)
            throw IoError("read_metrics_csv: malformed row in " + path);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace spnf

#include "spnf/verification.hpp"

#include <cmath>

#include "spnf/fusion.hpp"
#include "spnf/losses_metrics.hpp"
#include "spnf/radiance_field.hpp"
#include "spnf/random.hpp"
#include "spnf/volume_renderer.hpp"

namespace spnf {

namespace {

using nn::Tensor;

Tensor rand_tensor(SplitMixSequence& seq, nn::Shape shape, double lo, double hi,
                   bool requires_grad = true) {
    std::vector<double> v(nn::shape_numel(shape));
    for (double& x : v)
        x = lo + (hi - lo) * seq.next_unit();
    return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

std::vector<double> rand_values(SplitMixSequence& seq, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& x : v)
        x = lo + (hi - lo) * seq.next_unit();
    return v;
}

}  // namespace

std::vector<std::pair<std::string, nn::GradCheckReport>> run_gradient_suite() {
    using namespace nn;
    std::vector<std::pair<std::string, GradCheckReport>> reports;
    SplitMixSequence seq(0x5eedf00d);
    auto check = [&](const std::string& name, const std::function<Tensor(const Tensor&)>& f,
                     Tensor probe) {
        reports.emplace_back(name, finite_diff_check(f, std::move(probe)));
    };

    // dense
    {
        Tensor x = rand_tensor(seq, {4, 5}, -1.0, 1.0);
        Tensor w = rand_tensor(seq, {5, 3}, -0.7, 0.7);
        Tensor b = rand_tensor(seq, {3}, -0.5, 0.5);
        Tensor target = rand_tensor(seq, {4, 3}, 0.0, 1.0, false);
        auto f = [&](const Tensor&) { return mse(dense(x, w, b), target); };
        check("dense/x", f, x);
        check("dense/w", f, w);
        check("dense/b", f, b);
    }
    // conv2d 3x3 (padded) and strided, plus 1x1
    {
        Tensor x = rand_tensor(seq, {2, 3, 6, 6}, -1.0, 1.0);
        Tensor k = rand_tensor(seq, {4, 3, 3, 3}, -0.5, 0.5);
        Tensor b = rand_tensor(seq, {4}, -0.3, 0.3);
        Tensor target = rand_tensor(seq, {2, 4, 6, 6}, 0.0, 1.0, false);
        auto f = [&](const Tensor&) { return mse(conv2d(x, k, b, 1, 1), target); };
        check("conv3x3/x", f, x);
        check("conv3x3/k", f, k);
        check("conv3x3/b", f, b);

        Tensor t2 = rand_tensor(seq, {2, 4, 2, 2}, 0.0, 1.0, false);
        check("conv3x3_stride2/x", [&](const Tensor&) {
            return mse(conv2d(x, k, b, 2, 0), t2);
        }, x);

        Tensor k1 = rand_tensor(seq, {5, 3, 1, 1}, -0.6, 0.6);
        Tensor b1 = rand_tensor(seq, {5}, -0.2, 0.2);
        Tensor t1 = rand_tensor(seq, {2, 5, 6, 6}, 0.0, 1.0, false);
        check("conv1x1/k", [&](const Tensor&) { return mse(conv2d(x, k1, b1), t1); }, k1);
    }
    // activations
    {
        Tensor x = rand_tensor(seq, {3, 7}, -1.5, 1.5);
        Tensor target = rand_tensor(seq, {3, 7}, 0.0, 1.0, false);
        check("relu/x", [&](const Tensor&) { return mse(relu(x), target); }, x);
        check("sigmoid/x", [&](const Tensor&) { return mse(sigmoid(x), target); }, x);
    }
    // pooling and resampling
    {
        Tensor x = rand_tensor(seq, {2, 3, 4, 4}, -1.0, 1.0);
        Tensor tg = rand_tensor(seq, {2, 3}, 0.0, 1.0, false);
        check("global_avg_pool/x",
              [&](const Tensor&) { return mse(global_avg_pool(x), tg); }, x);
        Tensor td = rand_tensor(seq, {2, 3, 2, 2}, 0.0, 1.0, false);
        check("downsample2/x", [&](const Tensor&) { return mse(downsample2(x), td); }, x);
        Tensor tu = rand_tensor(seq, {2, 3, 8, 8}, 0.0, 1.0, false);
        check("upsample2/x", [&](const Tensor&) { return mse(upsample2(x), tu); }, x);

        Tensor a = rand_tensor(seq, {2, 3, 4, 4}, -1.0, 1.0);
        Tensor tc = rand_tensor(seq, {2, 6, 4, 4}, 0.0, 1.0, false);
        check("concat/a", [&](const Tensor&) { return mse(concat(a, x, 1), tc); }, a);
        check("concat/b", [&](const Tensor&) { return mse(concat(a, x, 1), tc); }, x);

        Tensor s = rand_tensor(seq, {2, 3}, 0.2, 1.2);
        Tensor tm = rand_tensor(seq, {2, 3, 4, 4}, 0.0, 1.0, false);
        check("mul_channels/s", [&](const Tensor&) { return mse(mul_channels(x, s), tm); }, s);
        Tensor mask = rand_tensor(seq, {2, 1, 4, 4}, 0.1, 0.9);
        check("mul_spatial/m", [&](const Tensor&) { return mse(mul_spatial(x, mask), tm); },
              mask);
        Tensor rows = rand_tensor(seq, {12, 5}, -1.0, 1.0);
        Tensor tn = rand_tensor(seq, {1, 5, 3, 4}, 0.0, 1.0, false);
        check("rows_to_nchw/x",
              [&](const Tensor&) { return mse(rows_to_nchw(rows, 3, 4), tn); }, rows);
    }
    // attention gate
    {
        Tensor skip = rand_tensor(seq, {1, 4, 6, 6}, -1.0, 1.0);
        Tensor gate = rand_tensor(seq, {1, 8, 3, 3}, -1.0, 1.0);
        Tensor wg = rand_tensor(seq, {2, 8, 1, 1}, -0.5, 0.5);
        Tensor bg = rand_tensor(seq, {2}, -0.1, 0.1);
        Tensor ws = rand_tensor(seq, {2, 4, 1, 1}, -0.5, 0.5);
        Tensor bs = rand_tensor(seq, {2}, -0.1, 0.1);
        Tensor wp = rand_tensor(seq, {1, 2, 1, 1}, -0.5, 0.5);
        Tensor bp = rand_tensor(seq, {1}, -0.1, 0.1);
        Tensor target = rand_tensor(seq, {1, 4, 6, 6}, 0.0, 1.0, false);
        auto f = [&](const Tensor&) {
            return mse(attention_gate(skip, gate, wg, bg, ws, bs, wp, bp), target);
        };
        check("attention_gate/skip", f, skip);
        check("attention_gate/gate", f, gate);
        check("attention_gate/wg", f, wg);
        check("attention_gate/psi", f, wp);
    }
    // spectrum attention block
    {
        Tensor x = rand_tensor(seq, {1, 4, 5, 5}, -1.0, 1.0);
        SpectrumAttentionParams p;
        for (int i = 0; i < 3; ++i) {
            p.conv_w[i] = rand_tensor(seq, {4, 4, 1, 1}, -0.4, 0.4);
            p.conv_b[i] = rand_tensor(seq, {4}, -0.1, 0.1);
        }
        p.fc1_w = rand_tensor(seq, {4, 2}, -0.5, 0.5);
        p.fc1_b = rand_tensor(seq, {2}, -0.1, 0.1);
        p.fc2_w = rand_tensor(seq, {2, 4}, -0.5, 0.5);
        p.fc2_b = rand_tensor(seq, {4}, -0.1, 0.1);
        Tensor target = rand_tensor(seq, {1, 4, 5, 5}, 0.0, 1.0, false);
        auto f = [&](const Tensor&) { return mse(spectrum_attention(x, p), target); };
        check("spectrum_attention/x", f, x);
        check("spectrum_attention/conv0", f, p.conv_w[0]);
        check("spectrum_attention/fc1", f, p.fc1_w);
    }
    // ray quadrature (black and white background)
    {
        const std::size_t rays = 3, samples = 6, channels = 4;
        Tensor sigma = rand_tensor(seq, {rays * samples, 1}, 0.1, 2.0);
        Tensor rad = rand_tensor(seq, {rays * samples, channels}, 0.0, 1.0);
        std::vector<double> ts(rays * samples);
        for (std::size_t r = 0; r < rays; ++r)
            for (std::size_t i = 0; i < samples; ++i)
                ts[r * samples + i] = 0.5 + (i + 0.3 + 0.4 * seq.next_unit()) *
                                                (3.0 - 0.5) / samples;
        for (std::size_t r = 0; r < rays; ++r)
            std::sort(ts.begin() + r * samples, ts.begin() + (r + 1) * samples);
        Tensor target = rand_tensor(seq, {rays, channels}, 0.0, 1.0, false);
        for (bool white : {false, true}) {
            const std::string tag = white ? "quadrature_white" : "quadrature";
            auto f = [&, white](const Tensor&) {
                return mse(quadrature_batch(sigma, rad, ts, rays, samples, 3.0, white),
                           target);
            };
            check(tag + "/sigma", f, sigma);
            check(tag + "/radiance", f, rad);
        }
    }
    // spectral loss plumbing
    {
        SpectralWeights ws_state = make_spectral_weights(2);
        ws_state.w_s = {2.0, 3.5};
        Tensor pc = rand_tensor(seq, {5, 6}, 0.0, 1.0);
        Tensor pf = rand_tensor(seq, {5, 6}, 0.0, 1.0);
        Tensor tg = rand_tensor(seq, {5, 6}, 0.0, 1.0, false);
        auto f = [&](const Tensor&) { return spectral_loss(pc, pf, tg, ws_state); };
        check("spectral_loss/coarse", f, pc);
        check("spectral_loss/fine", f, pf);
    }
    // full spectral field
    {
        SpectralMlpConfig cfg;
        cfg.depth = 3;
        cfg.width = 10;
        cfg.skip_layer = 1;
        cfg.bottleneck_width = 8;
        cfg.s_num = 2;
        cfg.encoding.num_freqs_position = 2;
        cfg.encoding.num_freqs_direction = 1;
        SpectralField field(cfg, 0x11);
        const std::size_t n = 4;
        Tensor xenc = rand_tensor(seq, {n, std::size_t(cfg.encoding.position_width())},
                                  -1.0, 1.0);
        Tensor denc = rand_tensor(seq, {n, std::size_t(cfg.encoding.direction_width())},
                                  -1.0, 1.0);
        Tensor t_sig = rand_tensor(seq, {n, 1}, 0.0, 1.0, false);
        Tensor t_rad = rand_tensor(seq, {n, std::size_t(3 * cfg.s_num)}, 0.0, 1.0, false);
        auto f = [&](const Tensor&) {
            auto out = field.forward(xenc, denc);
            return add(mse(out.sigma, t_sig), mse(out.radiance, t_rad));
        };
        check("field/xenc", f, xenc);
        check("field/denc", f, denc);
        check("field/trunk0.w", f, field.params().get("trunk.0.w"));
        check("field/sigma.w", f, field.params().get("sigma.w"));
        check("field/head.w", f, field.params().get("head.w"));
    }
    return reports;
}

}  // namespace spnf

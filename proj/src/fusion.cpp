#include "spnf/fusion.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spnf/random.hpp"

namespace spnf {

RgbImage linear_fuse(const SpectrumStack& stack, const std::vector<double>& weights,
                     double kappa) {
    if (stack.bands == 0)
        throw EmptyStack("linear_fuse: empty stack");
    if (int(weights.size()) != stack.bands)
        throw ShapeMismatch("linear_fuse: " + std::to_string(weights.size()) +
                            " weights for " + std::to_string(stack.bands) + " bands");
    RgbImage out(stack.width, stack.height);
    for (int k = 0; k < stack.bands; ++k) {
        const double* src = stack.band_data(k);
        const double wk = weights[k];
        for (std::size_t i = 0; i < out.data.size(); ++i)
            out.data[i] += wk * src[i];
    }
    for (double& v : out.data)
        v *= kappa;
    return out;
}

LinearFusionWeights fit_weights_least_squares(const std::vector<SpectrumStack>& stacks,
                                              const std::vector<RgbImage>& targets,
                                              bool per_channel) {
    if (stacks.empty() || stacks.size() != targets.size())
        throw InvalidArgument("fit_weights_least_squares: need matching stacks and targets");
    const int s_num = stacks[0].bands;
    const std::size_t pixels = std::size_t(stacks[0].width) * stacks[0].height;
    std::size_t observations = 0;
    for (std::size_t v = 0; v < stacks.size(); ++v) {
        if (stacks[v].bands != s_num || stacks[v].width != stacks[0].width ||
            stacks[v].height != stacks[0].height)
            throw ShapeMismatch("fit_weights_least_squares: inconsistent stack dims");
        if (targets[v].width != stacks[v].width || targets[v].height != stacks[v].height)
            throw ShapeMismatch("fit_weights_least_squares: target dims do not match stack");
        observations += pixels;
    }
    if (observations * (per_channel ? 1 : 3) < std::size_t(s_num))
        throw InvalidArgument("fit_weights_least_squares: fewer observations than unknowns");

    // Normal equations per channel; the shared-weight mode sums the three
    // channel systems.
    const int systems = per_channel ? 3 : 1;
    std::vector<Eigen::MatrixXd> gram(systems, Eigen::MatrixXd::Zero(s_num, s_num));
    std::vector<Eigen::VectorXd> rhs(systems, Eigen::VectorXd::Zero(s_num));
    for (std::size_t v = 0; v < stacks.size(); ++v) {
        const SpectrumStack& st = stacks[v];
        for (std::size_t p = 0; p < pixels; ++p)
            for (int c = 0; c < 3; ++c) {
                const int sys = per_channel ? c : 0;
                const double t = targets[v].data[p * 3 + c];
                for (int i = 0; i < s_num; ++i) {
                    const double mi = st.data[st.band_stride() * i + p * 3 + c];
                    rhs[sys](i) += mi * t;
                    for (int j = i; j < s_num; ++j)
                        gram[sys](i, j) += mi * st.data[st.band_stride() * j + p * 3 + c];
                }
            }
    }

    LinearFusionWeights out;
    out.w.assign(s_num, 0.0);
    if (per_channel)
        out.per_channel.assign(s_num, {0.0, 0.0, 0.0});
    for (int sys = 0; sys < systems; ++sys) {
        Eigen::MatrixXd g = gram[sys].selfadjointView<Eigen::Upper>();
        const double ridge = 1e-8 * g.trace() / s_num;
        g.diagonal().array() += ridge;
        Eigen::LLT<Eigen::MatrixXd> llt(g);
        if (llt.info() != Eigen::Success)
            throw SingularSystem("fit_weights_least_squares: Gram matrix not positive "
                                 "definite after ridge stabilization");
        Eigen::VectorXd w = llt.solve(rhs[sys]);
        if (!w.allFinite())
            throw SingularSystem("fit_weights_least_squares: solve produced non-finite "
                                 "weights");
        for (int k = 0; k < s_num; ++k) {
            if (per_channel)
                out.per_channel[k][sys] = w(k);
            else
                out.w[k] = w(k);
        }
    }
    if (per_channel)
        for (int k = 0; k < s_num; ++k)
            out.w[k] = (out.per_channel[k][0] + out.per_channel[k][1] +
                        out.per_channel[k][2]) / 3.0;

    // Residual RMS over all pixels and channels.
    double se = 0.0;
    for (std::size_t v = 0; v < stacks.size(); ++v) {
        const SpectrumStack& st = stacks[v];
        for (std::size_t p = 0; p < pixels; ++p)
            for (int c = 0; c < 3; ++c) {
                double pred = 0.0;
                for (int k = 0; k < s_num; ++k)
                    pred += (per_channel ? out.per_channel[k][c] : out.w[k]) *
                            st.data[st.band_stride() * k + p * 3 + c];
                const double d = pred - targets[v].data[p * 3 + c];
                se += d * d;
            }
    }
    out.residual_rms = std::sqrt(se / double(observations * 3));
    return out;
}

void save_linear_weights(const std::string& path, const std::vector<double>& centers_nm,
                         const std::vector<double>& weights) {
    if (centers_nm.size() != weights.size())
        throw ShapeMismatch("save_linear_weights: centers vs weights length");
    std::ofstream out(path);
    if (!out)
        throw IoError("save_linear_weights: cannot open " + path);
    out << "# band_center_nm weight\n";
    out.precision(17);
    for (std::size_t k = 0; k < weights.size(); ++k)
        out << centers_nm[k] << " " << weights[k] << "\n";
}

std::pair<std::vector<double>, std::vector<double>> load_linear_weights(
    const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw MissingFile("load_linear_weights: cannot open " + path);
    std::vector<double> centers, weights;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        double c, w;
        if (ls >> c >> w) {
            centers.push_back(c);
            weights.push_back(w);
        }
    }
    return {centers, weights};
}

nn::Tensor attention_gate(const nn::Tensor& skip, const nn::Tensor& gate,
                          const nn::Tensor& wg, const nn::Tensor& bg,
                          const nn::Tensor& ws, const nn::Tensor& bs,
                          const nn::Tensor& wpsi, const nn::Tensor& bpsi) {
    using namespace nn;
    if (skip.shape().size() != 4 || gate.shape().size() != 4)
        throw ShapeMismatch("attention_gate: expected NCHW inputs");
    if (gate.shape()[2] * 2 != skip.shape()[2] || gate.shape()[3] * 2 != skip.shape()[3])
        throw ShapeMismatch("attention_gate: gate spatial dims must be half the skip's, got "
                            "skip " + shape_str(skip.shape()) + " gate " +
                            shape_str(gate.shape()));
    Tensor g_up = upsample2(gate);
    Tensor a = add(conv2d(skip, ws, bs), conv2d(g_up, wg, bg));
    Tensor mask = sigmoid(conv2d(relu(a), wpsi, bpsi));
    return mul_spatial(skip, mask);
}

nn::Tensor spectrum_attention(const nn::Tensor& x, const SpectrumAttentionParams& p) {
    using namespace nn;
    Tensor y = x;
    for (int i = 0; i < 3; ++i)
        y = relu(conv2d(y, p.conv_w[i], p.conv_b[i]));
    Tensor squeeze = global_avg_pool(y);
    Tensor excite = sigmoid(dense(relu(dense(squeeze, p.fc1_w, p.fc1_b)), p.fc2_w, p.fc2_b));
    return add(mul_channels(y, excite), x);
}

void SaUnetConfig::validate() const {
    if (s_num < 1 || base_channels < 1 || se_reduction < 1)
        throw InvalidArgument("SaUnetConfig: s_num/base_channels/se_reduction must be >= 1");
    for (int e : sa_placement)
        if (e < 1 || e > 3)
            throw InvalidArgument("SaUnetConfig: sa_placement entries must be in {1,2,3}");
    for (int e = 1; e <= 3; ++e) {
        const int ch = base_channels << (e - 1);
        const bool placed = std::find(sa_placement.begin(), sa_placement.end(), e) !=
                            sa_placement.end();
        if (placed && ch % se_reduction != 0)
            throw InvalidArgument("SaUnetConfig: encoder " + std::to_string(e) +
                                  " channels not divisible by se_reduction");
    }
}

namespace {

std::vector<double> uniform_init(SplitMixSequence& seq, std::size_t n, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(double(fan_in));
    std::vector<double> v(n);
    for (double& x : v)
        x = seq.next_symmetric(bound);
    return v;
}

}  // namespace

SaUnet::SaUnet(SaUnetConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    SplitMixSequence seq(seed);
    auto conv = [&](const std::string& name, int out, int in, int kh, int kw) {
        params_.create(name + ".w",
                       {std::size_t(out), std::size_t(in), std::size_t(kh), std::size_t(kw)},
                       uniform_init(seq, std::size_t(out) * in * kh * kw,
                                    std::size_t(in) * kh * kw));
        params_.create_zeros(name + ".b", {std::size_t(out)});
    };
    auto fc = [&](const std::string& name, int in, int out) {
        params_.create(name + ".w", {std::size_t(in), std::size_t(out)},
                       uniform_init(seq, std::size_t(in) * out, in));
        params_.create_zeros(name + ".b", {std::size_t(out)});
    };
    auto sa = [&](const std::string& name, int ch) {
        for (int i = 0; i < 3; ++i)
            conv(name + ".conv" + std::to_string(i), ch, ch, 1, 1);
        fc(name + ".fc1", ch, ch / cfg_.se_reduction);
        fc(name + ".fc2", ch / cfg_.se_reduction, ch);
    };
    auto gate = [&](const std::string& name, int skip_ch, int gate_ch) {
        const int inter = std::max(1, skip_ch / 2);
        conv(name + ".wg", inter, gate_ch, 1, 1);
        conv(name + ".ws", inter, skip_ch, 1, 1);
        conv(name + ".psi", 1, inter, 1, 1);
    };

    const int b = cfg_.base_channels;
    const int c1 = b, c2 = 2 * b, c3 = 4 * b, cb = 8 * b;
    int in_ch = cfg_.in_channels();
    const int enc_ch[3] = {c1, c2, c3};
    for (int e = 1; e <= 3; ++e) {
        const std::string p = "enc" + std::to_string(e);
        conv(p + ".conv1", enc_ch[e - 1], in_ch, 3, 3);
        conv(p + ".conv2", enc_ch[e - 1], enc_ch[e - 1], 3, 3);
        if (std::find(cfg_.sa_placement.begin(), cfg_.sa_placement.end(), e) !=
            cfg_.sa_placement.end())
            sa("sa" + std::to_string(e), enc_ch[e - 1]);
        in_ch = enc_ch[e - 1];
    }
    conv("bneck.conv1", cb, c3, 3, 3);
    conv("bneck.conv2", cb, cb, 3, 3);
    gate("ag3", c3, cb);
    conv("dec3.conv1", c3, cb + c3, 3, 3);
    conv("dec3.conv2", c3, c3, 3, 3);
    gate("ag2", c2, c3);
    conv("dec2.conv1", c2, c3 + c2, 3, 3);
    conv("dec2.conv2", c2, c2, 3, 3);
    gate("ag1", c1, c2);
    conv("dec1.conv1", c1, c2 + c1, 3, 3);
    conv("dec1.conv2", c1, c1, 3, 3);
    conv("out", 3, c1, 1, 1);
}

nn::Tensor SaUnet::sa_block(const std::string& prefix, const nn::Tensor& x) const {
    SpectrumAttentionParams p;
    for (int i = 0; i < 3; ++i) {
        p.conv_w[i] = params_.get(prefix + ".conv" + std::to_string(i) + ".w");
        p.conv_b[i] = params_.get(prefix + ".conv" + std::to_string(i) + ".b");
    }
    p.fc1_w = params_.get(prefix + ".fc1.w");
    p.fc1_b = params_.get(prefix + ".fc1.b");
    p.fc2_w = params_.get(prefix + ".fc2.w");
    p.fc2_b = params_.get(prefix + ".fc2.b");
    return spectrum_attention(x, p);
}

nn::Tensor SaUnet::gated_skip(const std::string& prefix, const nn::Tensor& skip,
                              const nn::Tensor& gate) const {
    return attention_gate(skip, gate,
                          params_.get(prefix + ".wg.w"), params_.get(prefix + ".wg.b"),
                          params_.get(prefix + ".ws.w"), params_.get(prefix + ".ws.b"),
                          params_.get(prefix + ".psi.w"), params_.get(prefix + ".psi.b"));
}

nn::Tensor SaUnet::forward(const nn::Tensor& x) const {
    using namespace nn;
    if (x.shape().size() != 4 || int(x.shape()[1]) != cfg_.in_channels())
        throw ShapeMismatch("SaUnet::forward: expected (B," +
                            std::to_string(cfg_.in_channels()) + ",H,W), got " +
                            shape_str(x.shape()));
    if (x.shape()[2] % 4 != 0 || x.shape()[3] % 4 != 0)
        throw BadDimensions("SaUnet::forward: H and W must be divisible by 4, got " +
                            shape_str(x.shape()));
    auto has_sa = [&](int e) {
        return std::find(cfg_.sa_placement.begin(), cfg_.sa_placement.end(), e) !=
               cfg_.sa_placement.end();
    };
    auto enc = [&](int e, const Tensor& in) {
        const std::string p = "enc" + std::to_string(e);
        Tensor h = relu(conv2d(in, params_.get(p + ".conv1.w"), params_.get(p + ".conv1.b"),
                               1, 1));
        h = relu(conv2d(h, params_.get(p + ".conv2.w"), params_.get(p + ".conv2.b"), 1, 1));
        if (has_sa(e))
            h = sa_block("sa" + std::to_string(e), h);
        return h;
    };
    auto dec = [&](int d, const Tensor& below, const Tensor& skip) {
        const std::string p = "dec" + std::to_string(d);
        Tensor gated = gated_skip("ag" + std::to_string(d), skip, below);
        Tensor h = concat(upsample2(below), gated, 1);
        h = relu(conv2d(h, params_.get(p + ".conv1.w"), params_.get(p + ".conv1.b"), 1, 1));
        return relu(conv2d(h, params_.get(p + ".conv2.w"), params_.get(p + ".conv2.b"), 1, 1));
    };

    Tensor s1 = enc(1, x);
    Tensor s2 = enc(2, downsample2(s1));
    Tensor s3 = enc(3, downsample2(s2));
    Tensor h = downsample2(s3);
    h = relu(conv2d(h, params_.get("bneck.conv1.w"), params_.get("bneck.conv1.b"), 1, 1));
    h = relu(conv2d(h, params_.get("bneck.conv2.w"), params_.get("bneck.conv2.b"), 1, 1));
    h = dec(3, h, s3);
    h = dec(2, h, s2);
    h = dec(1, h, s1);
    return sigmoid(conv2d(h, params_.get("out.w"), params_.get("out.b")));
}

nn::Tensor SaUnet::stack_to_tensor(const SpectrumStack& stack) {
    const std::size_t h = stack.height, w = stack.width;
    std::vector<double> data(std::size_t(stack.bands) * 3 * h * w);
    for (int k = 0; k < stack.bands; ++k)
        for (int c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x)
                    data[((std::size_t(k) * 3 + c) * h + y) * w + x] =
                        stack.at(k, int(x), int(y), c);
    return nn::Tensor::from_data({1, std::size_t(stack.bands) * 3, h, w}, std::move(data));
}

nn::Tensor SaUnet::rgb_to_tensor(const RgbImage& image) {
    const std::size_t h = image.height, w = image.width;
    std::vector<double> data(3 * h * w);
    for (int c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                data[(std::size_t(c) * h + y) * w + x] = image.at(int(x), int(y), c);
    return nn::Tensor::from_data({1, 3, h, w}, std::move(data));
}

RgbImage SaUnet::infer(const SpectrumStack& stack) const {
    nn::NoGradGuard no_grad;
    nn::Tensor out = forward(stack_to_tensor(stack));
    RgbImage image(stack.width, stack.height);
    const std::size_t h = stack.height, w = stack.width;
    for (int c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                image.at(int(x), int(y), c) = out.data()[(std::size_t(c) * h + y) * w + x];
    return image;
}

void SaUnet::append_records(const std::string& prefix, std::vector<nn::TensorRecord>& out,
                            bool include_adam_state) const {
    for (const auto& e : params_.entries()) {
        out.push_back({prefix + e.name, e.tensor.shape(), e.tensor.values()});
        if (include_adam_state) {
            out.push_back({prefix + "adam.m." + e.name, e.tensor.shape(), e.adam_m});
            out.push_back({prefix + "adam.v." + e.name, e.tensor.shape(), e.adam_v});
        }
    }
    if (include_adam_state)
        out.push_back({prefix + "adam.step", {1}, {double(params_.step_count())}});
}

void SaUnet::load_records(const std::string& prefix,
                          const std::vector<nn::TensorRecord>& records,
                          bool include_adam_state) {
    auto find = [&](const std::string& name) -> const nn::TensorRecord& {
        for (const auto& r : records)
            if (r.name == name)
                return r;
        throw IoError("checkpoint: missing record '" + name + "'");
    };
    for (auto& e : params_.entries()) {
        const auto& r = find(prefix + e.name);
        if (r.shape != e.tensor.shape())
            throw DimMismatch("checkpoint: shape mismatch for '" + e.name + "'");
        e.tensor.values() = r.data;
        if (include_adam_state) {
            e.adam_m = find(prefix + "adam.m." + e.name).data;
            e.adam_v = find(prefix + "adam.v." + e.name).data;
        }
    }
    if (include_adam_state)
        params_.set_step_count(std::int64_t(find(prefix + "adam.step").data.at(0)));
}

RgbImage FusionModel::fuse(const SpectrumStack& stack) const {
    if (kind == Kind::Linear)
        return linear_fuse(stack, linear.w, kappa);
    if (!saunet)
        throw InvalidArgument("FusionModel: SAUNet backend not set");
    return saunet->infer(stack);
}

}  // namespace spnf

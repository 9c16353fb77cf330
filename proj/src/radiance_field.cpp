#include "spnf/radiance_field.hpp"

#include <cmath>

#include "spnf/random.hpp"

namespace spnf {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void encode(const Vec3& v, int num_freqs, bool include_identity, double* out) {
    std::size_t o = 0;
    if (include_identity) {
        out[o++] = v.x;
        out[o++] = v.y;
        out[o++] = v.z;
    }
    double freq = kPi;
    for (int k = 0; k < num_freqs; ++k, freq *= 2.0) {
        out[o++] = std::sin(freq * v.x);
        out[o++] = std::sin(freq * v.y);
        out[o++] = std::sin(freq * v.z);
        out[o++] = std::cos(freq * v.x);
        out[o++] = std::cos(freq * v.y);
        out[o++] = std::cos(freq * v.z);
    }
}

std::vector<double> encode(const Vec3& v, int num_freqs, bool include_identity) {
    std::vector<double> out(3 * ((include_identity ? 1 : 0) + 2 * num_freqs));
    encode(v, num_freqs, include_identity, out.data());
    return out;
}

void SpectralMlpConfig::validate() const {
    if (depth < 1 || width < 1 || bottleneck_width < 1 || s_num < 1)
        throw InvalidArgument("SpectralMlpConfig: depth/width/bottleneck/s_num must be >= 1");
    if (skip_layer < 0 || skip_layer >= depth)
        throw InvalidArgument("SpectralMlpConfig: skip_layer out of [0, depth)");
    if (encoding.num_freqs_position < 0 || encoding.num_freqs_direction < 0)
        throw InvalidArgument("SpectralMlpConfig: negative frequency count");
}

namespace {

// Fan-in of trunk layer i. Layer 0 consumes the encoded position; the
// skip layer consumes trunk features concatenated with the encoded
// position again (vacuous for skip_layer 0).
std::size_t trunk_in(const SpectralMlpConfig& cfg, int i) {
    const std::size_t pos_w = cfg.encoding.position_width();
    if (i == 0)
        return pos_w;
    if (i == cfg.skip_layer)
        return std::size_t(cfg.width) + pos_w;
    return cfg.width;
}

std::vector<double> uniform_init(SplitMixSequence& seq, std::size_t n, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(double(fan_in));
    std::vector<double> v(n);
    for (double& x : v)
        x = seq.next_symmetric(bound);
    return v;
}

}  // namespace

SpectralField::SpectralField(SpectralMlpConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    SplitMixSequence seq(seed);
    auto dense_params = [&](const std::string& name, std::size_t in, std::size_t out) {
        params_.create(name + ".w", {in, out}, uniform_init(seq, in * out, in));
        params_.create_zeros(name + ".b", {out});
    };
    for (int i = 0; i < cfg_.depth; ++i)
        dense_params("trunk." + std::to_string(i), trunk_in(cfg_, i), cfg_.width);
    dense_params("sigma", cfg_.width, 1);
    dense_params("feature", cfg_.width, cfg_.width);
    dense_params("bottleneck", std::size_t(cfg_.width) + cfg_.encoding.direction_width(),
                 cfg_.bottleneck_width);
    dense_params("head", cfg_.bottleneck_width, std::size_t(3) * cfg_.s_num);
}

std::size_t spectral_mlp_param_count(const SpectralMlpConfig& cfg) {
    cfg.validate();
    auto dense_count = [](std::size_t in, std::size_t out) { return in * out + out; };
    std::size_t n = 0;
    for (int i = 0; i < cfg.depth; ++i)
        n += dense_count(trunk_in(cfg, i), cfg.width);
    n += dense_count(cfg.width, 1);
    n += dense_count(cfg.width, cfg.width);
    n += dense_count(std::size_t(cfg.width) + cfg.encoding.direction_width(),
                     cfg.bottleneck_width);
    n += dense_count(cfg.bottleneck_width, std::size_t(3) * cfg.s_num);
    return n;
}

SpectralField::Output SpectralField::forward(const nn::Tensor& encoded_pos,
                                             const nn::Tensor& encoded_dir,
                                             const std::vector<double>* sigma_noise) const {
    using namespace nn;
    const std::size_t batch = encoded_pos.shape()[0];
    if (encoded_pos.shape().size() != 2 || encoded_dir.shape().size() != 2 ||
        encoded_dir.shape()[0] != batch)
        throw ShapeMismatch("SpectralField::forward: encoded input shapes " +
                            shape_str(encoded_pos.shape()) + " / " +
                            shape_str(encoded_dir.shape()));

    Tensor h = encoded_pos;
    for (int i = 0; i < cfg_.depth; ++i) {
        if (i == cfg_.skip_layer && i > 0)
            h = concat(h, encoded_pos, 1);
        h = relu(dense(h, params_.get("trunk." + std::to_string(i) + ".w"),
                       params_.get("trunk." + std::to_string(i) + ".b")));
    }

    Tensor sigma_pre = dense(h, params_.get("sigma.w"), params_.get("sigma.b"));
    if (sigma_noise) {
        if (sigma_noise->size() != batch)
            throw ShapeMismatch("SpectralField::forward: sigma noise length mismatch");
        sigma_pre = add(sigma_pre, Tensor::from_data({batch, 1}, *sigma_noise));
    }
    Tensor sigma = relu(sigma_pre);

    Tensor feat = dense(h, params_.get("feature.w"), params_.get("feature.b"));
    Tensor hb = relu(dense(concat(feat, encoded_dir, 1), params_.get("bottleneck.w"),
                           params_.get("bottleneck.b")));
    Tensor radiance = sigmoid(dense(hb, params_.get("head.w"), params_.get("head.b")));
    return {sigma, radiance};
}

void SpectralField::eval_raw(const std::vector<Vec3>& positions,
                             const std::vector<Vec3>& directions,
                             std::vector<double>& sigma_out,
                             std::vector<double>& radiance_out) const {
    if (positions.size() != directions.size())
        throw ShapeMismatch("SpectralField::eval: positions vs directions length");
    for (const Vec3& d : directions)
        if (std::abs(d.norm() - 1.0) > 1e-6)
            throw NotNormalized("SpectralField::eval: direction not unit length");

    nn::NoGradGuard no_grad;
    const std::size_t n = positions.size();
    const std::size_t pw = cfg_.encoding.position_width();
    const std::size_t dw = cfg_.encoding.direction_width();
    std::vector<double> pos_enc(n * pw), dir_enc(n * dw);
    for (std::size_t i = 0; i < n; ++i) {
        encode(positions[i], cfg_.encoding.num_freqs_position, cfg_.encoding.include_identity,
               pos_enc.data() + i * pw);
        encode(directions[i], cfg_.encoding.num_freqs_direction, cfg_.encoding.include_identity,
               dir_enc.data() + i * dw);
    }
    Output out = forward(nn::Tensor::from_data({n, pw}, std::move(pos_enc)),
                         nn::Tensor::from_data({n, dw}, std::move(dir_enc)));
    sigma_out.assign(out.sigma.data(), out.sigma.data() + n);
    radiance_out.assign(out.radiance.data(), out.radiance.data() + n * 3 * cfg_.s_num);
}

std::vector<FieldSample> SpectralField::eval(const std::vector<Vec3>& positions,
                                             const std::vector<Vec3>& directions) const {
    std::vector<double> sigma, radiance;
    eval_raw(positions, directions, sigma, radiance);
    std::vector<FieldSample> samples(positions.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i].sigma = sigma[i];
        samples[i].radiance.resize(cfg_.s_num);
        for (int k = 0; k < cfg_.s_num; ++k)
            for (int c = 0; c < 3; ++c)
                samples[i].radiance[k][c] = radiance[(i * cfg_.s_num + k) * 3 + c];
    }
    return samples;
}

void SpectralField::append_records(const std::string& prefix,
                                   std::vector<nn::TensorRecord>& out,
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

void SpectralField::load_records(const std::string& prefix,
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

FieldPair make_field(const SpectralMlpConfig& cfg, std::uint64_t seed) {
    return {SpectralField(cfg, splitmix64(seed ^ 0x636f61727365ull)),
            SpectralField(cfg, splitmix64(seed ^ 0x66696e65ull))};
}

}  // namespace spnf

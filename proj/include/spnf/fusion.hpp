#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "spnf/checkpoint.hpp"
#include "spnf/image.hpp"
#include "spnf/optim.hpp"
#include "spnf/ops.hpp"

namespace spnf {

/// Per-band fusion weights; the optional per-channel variant stores an
/// independent weight per RGB channel.
struct LinearFusionWeights {
    std::vector<double> w;                          // length s_num
    std::vector<std::array<double, 3>> per_channel; // optional, length s_num
    double residual_rms = 0.0;
};

/// Per pixel and channel: kappa * sum_k w_k * stack[k].
RgbImage linear_fuse(const SpectrumStack& stack, const std::vector<double>& weights,
                     double kappa);

/// Least-squares fit of per-band weights to reproduce the targets from
/// the stacks: s_num x s_num normal equations with a ridge of
/// 1e-8 * trace(G) / s_num on the diagonal; throws SingularSystem if the
/// stabilized Gram matrix is still not positive definite.
LinearFusionWeights fit_weights_least_squares(const std::vector<SpectrumStack>& stacks,
                                              const std::vector<RgbImage>& targets,
                                              bool per_channel = false);

/// Plain-text weights file: band center nm and weight per line.
void save_linear_weights(const std::string& path, const std::vector<double>& centers_nm,
                         const std::vector<double>& weights);
std::pair<std::vector<double>, std::vector<double>> load_linear_weights(
    const std::string& path);

/// Additive attention gate: 1x1 projections of the skip and the
/// upsampled gate are added, relu, 1x1 to one channel, sigmoid; the
/// resulting mask rescales the skip. Gate spatial dims must be half the
/// skip's.
nn::Tensor attention_gate(const nn::Tensor& skip, const nn::Tensor& gate,
                          const nn::Tensor& wg, const nn::Tensor& bg,
                          const nn::Tensor& ws, const nn::Tensor& bs,
                          const nn::Tensor& wpsi, const nn::Tensor& bpsi);

struct SpectrumAttentionParams {
    nn::Tensor conv_w[3], conv_b[3];  // three channel-preserving 1x1 blocks
    nn::Tensor fc1_w, fc1_b;          // squeeze-excitation C -> C/r
    nn::Tensor fc2_w, fc2_b;          // C/r -> C
};

/// Three 1x1 conv+relu blocks, squeeze-excitation channel attention,
/// residual addition of the block input.
nn::Tensor spectrum_attention(const nn::Tensor& x, const SpectrumAttentionParams& params);

struct SaUnetConfig {
    int s_num = 11;
    int base_channels = 16;                 // encoder channels base * (1, 2, 4)
    std::vector<int> sa_placement = {1, 2}; // encoders carrying spectrum attention (1-based)
    int se_reduction = 4;

    int in_channels() const { return 3 * s_num; }
    void validate() const;
};

/// Spectrum-attention UNet: 3 encoders (two 3x3 convs, optional SA,
/// 2x2 mean downsample), a bottleneck, 3 decoders with attention-gated
/// skips, and a sigmoid 1x1 output head.
class SaUnet {
public:
    SaUnet(SaUnetConfig cfg, std::uint64_t seed);

    const SaUnetConfig& config() const { return cfg_; }
    nn::ParameterStore& params() { return params_; }
    const nn::ParameterStore& params() const { return params_; }

    /// x: (B, 3*s_num, H, W); H and W must be divisible by 4.
    nn::Tensor forward(const nn::Tensor& x) const;

    /// Inference convenience over a spectrum stack (no grad).
    RgbImage infer(const SpectrumStack& stack) const;

    /// (1, 3*s_num, H, W) tensor with band-major channel order.
    static nn::Tensor stack_to_tensor(const SpectrumStack& stack);
    static nn::Tensor rgb_to_tensor(const RgbImage& image);

    void append_records(const std::string& prefix, std::vector<nn::TensorRecord>& out,
                        bool include_adam_state) const;
    void load_records(const std::string& prefix, const std::vector<nn::TensorRecord>& records,
                      bool include_adam_state);

private:
    SaUnetConfig cfg_;
    nn::ParameterStore params_;

    nn::Tensor sa_block(const std::string& prefix, const nn::Tensor& x) const;
    nn::Tensor gated_skip(const std::string& prefix, const nn::Tensor& skip,
                          const nn::Tensor& gate) const;
};

/// Fusion backend: exact/least-squares linear combination or the SAUNet.
struct FusionModel {
    enum class Kind { Linear, SaUnet };
    Kind kind = Kind::Linear;
    LinearFusionWeights linear;
    double kappa = 1.0;
    std::shared_ptr<SaUnet> saunet;

    RgbImage fuse(const SpectrumStack& stack) const;
};

}  // namespace spnf

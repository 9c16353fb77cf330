#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "spnf/checkpoint.hpp"
#include "spnf/geometry.hpp"
#include "spnf/optim.hpp"
#include "spnf/ops.hpp"

namespace spnf {

/// Frequency encoding gamma: optionally the identity, then
/// [sin(2^k pi v), cos(2^k pi v)] per coordinate for k = 0..num_freqs-1.
struct EncodingConfig {
    int num_freqs_position = 10;
    int num_freqs_direction = 4;
    bool include_identity = true;

    int position_width() const {
        return 3 * ((include_identity ? 1 : 0) + 2 * num_freqs_position);
    }
    int direction_width() const {
        return 3 * ((include_identity ? 1 : 0) + 2 * num_freqs_direction);
    }
};

/// Writes the encoding of v into out (length 3*(identity + 2*num_freqs)).
/// Layout: [v,] sin(2^0 pi v), cos(2^0 pi v), sin(2^1 pi v), ...
void encode(const Vec3& v, int num_freqs, bool include_identity, double* out);
std::vector<double> encode(const Vec3& v, int num_freqs, bool include_identity);

struct SpectralMlpConfig {
    int depth = 8;
    int width = 256;
    int skip_layer = 4;          // trunk layer whose input gets the encoded position again
    int bottleneck_width = 128;  // direction-conditioned layer before the radiance head
    int s_num = 11;
    EncodingConfig encoding;

    void validate() const;
};

/// One field sample: shared density plus per-band RGB radiance.
struct FieldSample {
    double sigma = 0.0;
    std::vector<std::array<double, 3>> radiance;  // length s_num, values in [0,1]
};

/// The SpectralMLP: an encoded-position trunk with a skip re-injection,
/// a density head read before the direction joins, and a
/// direction-conditioned bottleneck feeding the 3*s_num radiance head.
class SpectralField {
public:
    SpectralField(SpectralMlpConfig cfg, std::uint64_t seed);

    const SpectralMlpConfig& config() const { return cfg_; }
    nn::ParameterStore& params() { return params_; }
    const nn::ParameterStore& params() const { return params_; }

    struct Output {
        nn::Tensor sigma;     // (N,1), post-relu
        nn::Tensor radiance;  // (N, 3*s_num), post-sigmoid, band-major channels
    };

    /// Autodiff forward over pre-encoded inputs. `sigma_noise`, when
    /// given, is added to the pre-activation density (training-time
    /// perturbation; off at inference).
    Output forward(const nn::Tensor& encoded_pos, const nn::Tensor& encoded_dir,
                   const std::vector<double>* sigma_noise = nullptr) const;

    /// Convenience inference; directions must be unit (tolerance 1e-6).
    std::vector<FieldSample> eval(const std::vector<Vec3>& positions,
                                  const std::vector<Vec3>& directions) const;

    /// Batch inference into flat buffers: sigma (N), radiance (N*s_num*3).
    void eval_raw(const std::vector<Vec3>& positions, const std::vector<Vec3>& directions,
                  std::vector<double>& sigma_out, std::vector<double>& radiance_out) const;

    void append_records(const std::string& prefix, std::vector<nn::TensorRecord>& out,
                        bool include_adam_state) const;
    void load_records(const std::string& prefix, const std::vector<nn::TensorRecord>& records,
                      bool include_adam_state);

private:
    SpectralMlpConfig cfg_;
    nn::ParameterStore params_;
};

/// Coarse and fine model with identical architecture, independently
/// initialized from sub-seeds of `seed`.
struct FieldPair {
    SpectralField coarse;
    SpectralField fine;
};

FieldPair make_field(const SpectralMlpConfig& cfg, std::uint64_t seed);

/// Closed-form parameter count for a config (sum of layer shapes).
std::size_t spectral_mlp_param_count(const SpectralMlpConfig& cfg);

}  // namespace spnf

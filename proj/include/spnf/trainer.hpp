#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "spnf/dataset_io.hpp"
#include "spnf/fusion.hpp"
#include "spnf/losses_metrics.hpp"
#include "spnf/radiance_field.hpp"
#include "spnf/volume_renderer.hpp"

namespace spnf {

struct FieldTrainConfig {
    SpectralMlpConfig mlp;
    int n_coarse = 64;
    int n_fine = 128;
    int iterations = 2000;
    int batch_rays = 512;
    double lr = 5e-4;
    double sigma_noise_std = 0.0;
    LossConfig loss;
    std::uint64_t seed = 0;
    int log_interval = 100;
    int checkpoint_interval = 0;  // 0 = final checkpoint only
    std::string out_dir;          // empty = keep everything in memory
};

/// Everything a resumed run needs: both models (with Adam state), the
/// w_s estimate and the absolute step counter. All training randomness
/// is counter-based on the absolute step, so resuming from a checkpoint
/// continues bit-compatibly.
struct FieldTrainState {
    FieldPair fields;
    SpectralWeights ws;
    int step = 0;
};

FieldTrainState make_field_train_state(const FieldTrainConfig& cfg);

/// Runs (cfg.iterations - state.step) optimization steps of the
/// weighted spectral loss over the dataset's train split. Throws
/// NanLoss (with the offending batch indices) on non-finite loss.
void train_field(const Dataset& dataset, const FieldTrainConfig& cfg,
                 FieldTrainState& state, std::ostream* log = nullptr);

void save_field_checkpoint(const std::string& path, const FieldTrainConfig& cfg,
                           const FieldTrainState& state);
/// Rebuilds the architecture from the checkpoint's sidecar cfg file.
std::pair<FieldTrainConfig, FieldTrainState> load_field_checkpoint(const std::string& path);

/// Renderer adapter over a trained field.
FieldFn field_fn(const SpectralField& field);

struct FusionTrainConfig {
    SaUnetConfig unet;
    int iterations = 2000;
    double lr = 1e-3;
    LossConfig loss;
    std::uint64_t seed = 0;
    int log_interval = 100;
};

/// Two-phase SAUNet training against fixed (stack, RGB target) pairs:
/// cycles views deterministically, optimizing the RGB reconstruction
/// loss. Returns the final RGB loss.
double train_fusion(const std::vector<SpectrumStack>& stacks,
                    const std::vector<RgbImage>& targets, const FusionTrainConfig& cfg,
                    SaUnet& unet, std::ostream* log = nullptr);

void save_fusion_checkpoint(const std::string& path, const SaUnetConfig& cfg,
                            const SaUnet& unet);
std::pair<SaUnetConfig, std::shared_ptr<SaUnet>> load_fusion_checkpoint(
    const std::string& path);

struct JointTrainConfig {
    FieldTrainConfig field;
    FusionTrainConfig fusion;
    int iterations = 50;
};

struct JointLossReport {
    double spectral = 0.0;
    double rgb = 0.0;
    double total = 0.0;
};

/// Joint mode: each step renders one full training view through the
/// field with gradients, fuses it with the SAUNet and backpropagates
/// spectral + lambda_RGB * RGB into both. Desk-scale (small images).
JointLossReport train_joint(const Dataset& dataset, const JointTrainConfig& cfg,
                            FieldTrainState& state, SaUnet& unet,
                            std::ostream* log = nullptr);

}  // namespace spnf

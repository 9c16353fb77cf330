#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "spnf/geometry.hpp"
#include "spnf/image.hpp"
#include "spnf/random.hpp"
#include "spnf/tensor.hpp"

namespace spnf {

/// Pinhole camera: right-handed, looks down -z, y up; pixel rays pass
/// through pixel centers (i + 0.5, j + 0.5).
struct Camera {
    int width = 0, height = 0;
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
    Mat4 pose = Mat4::identity();  // camera-to-world
    double t_near = 0.0, t_far = 0.0;

    void validate() const;
};

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit
};

enum class SampleProvenance { Coarse, Fine };

struct SampleSet {
    std::vector<double> ts;  // strictly ascending, within [t_near, t_far]
    SampleProvenance provenance = SampleProvenance::Coarse;
};

struct RenderConfig {
    int n_coarse = 64;
    int n_fine = 128;
    bool white_background = false;
    bool jitter = false;            // stratified jitter; bin midpoints when off
    double perturb_sigma_std = 0.0; // training-time density perturbation
    std::uint64_t seed = 0;
    int tile_rays = 2048;
    int workers = 1;
};

/// Rays through the given (x, y) pixel indices; throws OutOfBounds for
/// pixels outside the image.
std::vector<Ray> generate_rays(const Camera& camera,
                               const std::vector<std::pair<int, int>>& pixels);
Ray generate_ray(const Camera& camera, int x, int y);

/// One draw per equal-width bin of [t_n, t_f]; deterministic in
/// (rng.seed, ray_key). n >= 2 required.
SampleSet stratified_samples(double t_n, double t_f, int n, bool jitter,
                             const CounterRng& rng, std::uint64_t ray_key = 0);

/// Discrete quadrature along one ray. sigmas: per-sample density (S),
/// radiances: per-sample band values (S x C). delta_i = t_{i+1} - t_i
/// with the last interval closed at t_f. Returns per-band/channel
/// spectrum values (C) and fills `weights` (S) with T_i * alpha_i.
std::vector<double> quadrature(const std::vector<double>& sigmas,
                               const std::vector<double>& radiances,
                               const SampleSet& ts, double t_f,
                               std::vector<double>& weights,
                               bool white_background = false);

/// Batched differentiable quadrature. sigma: (R*S, 1), radiance:
/// (R*S, C), ts: R x S sample positions (row-major). Returns (R, C);
/// `weights_out`, when given, receives the detached weights (R*S).
nn::Tensor quadrature_batch(const nn::Tensor& sigma, const nn::Tensor& radiance,
                            const std::vector<double>& ts, std::size_t rays,
                            std::size_t samples, double t_f, bool white_background,
                            std::vector<double>* weights_out = nullptr);

/// Inverse-transform sampling from the piecewise-constant PDF over the
/// coarse bins (weights + 1e-5 floor, normalized). Returns the sorted
/// union of coarse and fine t values.
SampleSet hierarchical_resample(const SampleSet& coarse, double t_f,
                                const std::vector<double>& weights, int n_fine,
                                const CounterRng& rng, std::uint64_t ray_key = 0);

/// Inference-time field interface: batched positions/directions in,
/// flat sigma (N) and radiance (N*s_num*3) out.
using FieldFn = std::function<void(const std::vector<Vec3>&, const std::vector<Vec3>&,
                                   std::vector<double>&, std::vector<double>&)>;

/// Full-image evaluation tiled in ray batches; deterministic given
/// cfg.seed, schedule-independent across workers.
std::pair<SpectrumStack, SpectrumStack> render_spectrum_maps(
    const FieldFn& coarse_field, const FieldFn& fine_field, int s_num,
    const Camera& camera, const RenderConfig& cfg);

}  // namespace spnf

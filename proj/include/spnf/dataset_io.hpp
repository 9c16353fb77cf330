#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spnf/geometry.hpp"
#include "spnf/image.hpp"
#include "spnf/spectral_color.hpp"
#include "spnf/volume_renderer.hpp"

namespace spnf {

/// "SFM1" container: u32 LE width/height/channels, f32 LE band center
/// (0 for RGB composites), then channel planes of f32 LE, row-major.
struct SpectralFloatMap {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t channels = 0;
    float band_center_nm = 0.0f;
    std::vector<float> data;  // plane-major: [channel][y][x]

    float at(std::uint32_t x, std::uint32_t y, std::uint32_t c) const {
        return data[(std::size_t(c) * height + y) * width + x];
    }
};

void sfm_write(const std::string& path, const SpectralFloatMap& map);
SpectralFloatMap sfm_read(const std::string& path);
/// Header + size validation only (no payload decode).
void sfm_validate(const std::string& path, std::uint32_t width, std::uint32_t height,
                  std::uint32_t channels);

SpectralFloatMap sfm_from_rgb(const RgbImage& image, float band_center_nm = 0.0f);
RgbImage rgb_from_sfm(const SpectralFloatMap& map);
SpectralFloatMap sfm_from_band(const SpectrumStack& stack, int band);

/// Gaussian bump emission spectrum, in [0, 1] for amplitude in [0, 1].
struct EmissionSpectrum {
    double center_nm = 550.0;
    double width_nm = 50.0;
    double amplitude = 1.0;

    double sample(double lambda_nm) const;
};

/// Isotropic Gaussian-falloff density blob with its own emission color.
struct DensityBlob {
    Vec3 center;
    double radius = 0.3;
    double peak_sigma = 8.0;
    EmissionSpectrum emission;
};

/// Emissive volumetric stand-in for a rendered scene: density is the sum
/// of blob falloffs, per-band radiance the density-weighted mixture of
/// blob emissions (stays in [0, 1]).
struct AnalyticScene {
    std::vector<DensityBlob> blobs;
    double domain_radius = 1.0;
    bool white_background = false;

    double density(const Vec3& p) const;
    void band_radiance(const Vec3& p, const std::vector<double>& centers_nm,
                       double* out) const;
};

/// Dense fixed-step quadrature of the analytic field along every camera
/// ray; ground truth for training and renderer convergence tests. The
/// returned stack holds raw per-band radiance (all three channels equal).
SpectrumStack oracle_render(const AnalyticScene& scene, const Camera& camera,
                            const BandPartition& partition, int samples_per_ray = 4096);

/// Renderer-facing adapter evaluating the analytic field directly.
FieldFn analytic_field_fn(const AnalyticScene& scene, std::vector<double> centers_nm);

struct ViewRecord {
    int index = 0;
    std::string split;  // "train" | "test"
    Camera camera;
    std::vector<std::string> band_paths;  // relative to the manifest
    std::string rgb_path;
};

/// How the illuminant enters the stored maps: "baked" multiplies the
/// band coefficients by L(lambda_c); "fusion" stores unit-illuminant
/// maps and records per-band fusion weights instead.
struct SceneManifest {
    std::string name;
    BandPartition partition;
    std::string illuminant = "d65";
    std::string illuminant_mode = "baked";
    double kappa = 1.0;                  // compose factor for stored maps
    std::vector<double> fusion_weights;  // fusion mode only, length s_num
    int width = 0, height = 0;
    std::vector<ViewRecord> views;
};

void write_manifest(const std::string& path, const SceneManifest& manifest);
SceneManifest read_manifest(const std::string& path);

/// Loaded dataset handle with lazily loadable per-view maps.
struct Dataset {
    SceneManifest manifest;
    std::string root_dir;

    SpectrumStack load_stack(int view) const;
    RgbImage load_rgb(int view) const;
    std::vector<int> views_with_split(const std::string& split) const;
};

/// Validates the manifest and every referenced file (existence and
/// dimensions); errors name the offending file.
Dataset load_dataset(const std::string& manifest_path);

/// Reconstructs the stored RGB from the stored band maps per the
/// manifest mode; returns the max absolute deviation over all views.
double dataset_self_consistency(const Dataset& dataset);

struct SynthesisConfig {
    AnalyticScene scene;
    std::string name = "scene";
    int width = 64, height = 64;
    int train_views = 30, test_views = 10;
    double camera_radius = 3.2;
    double fov_deg = 50.0;
    double t_near = 1.6, t_far = 4.8;
    BandPartition partition;
    std::string illuminant = "d65";       // "d65" | "equal" | path
    std::string illuminant_mode = "baked";
    int oracle_samples = 1024;
    std::uint64_t seed = 0;
};

/// Renders the dataset into out_dir (SFM maps + manifest.txt) and
/// returns the manifest. Deterministic: same seed, same bytes.
SceneManifest gen_synthetic(const SynthesisConfig& cfg, const std::string& out_dir);

/// Resolves an illuminant name ("d65", "equal") or file path to an SPD.
Spd resolve_illuminant(const std::string& name);

}  // namespace spnf

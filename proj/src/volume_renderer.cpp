#include "spnf/volume_renderer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <thread>

namespace spnf {

void Camera::validate() const {
    if (width < 1 || height < 1)
        throw InvalidArgument("Camera: non-positive image dimensions");
    if (!(fx > 0.0) || !(fy > 0.0))
        throw InvalidArgument("Camera: focal lengths must be positive");
    if (!(t_far > t_near) || !(t_near > 0.0))
        throw InvalidArgument("Camera: require t_far > t_near > 0");
    if (pose(3, 0) != 0.0 || pose(3, 1) != 0.0 || pose(3, 2) != 0.0 || pose(3, 3) != 1.0)
        throw InvalidArgument("Camera: pose bottom row must be (0,0,0,1)");
}

Ray generate_ray(const Camera& camera, int x, int y) {
    if (x < 0 || x >= camera.width || y < 0 || y >= camera.height)
        throw OutOfBounds("generate_ray: pixel (" + std::to_string(x) + "," +
                          std::to_string(y) + ") outside " + std::to_string(camera.width) +
                          "x" + std::to_string(camera.height));
    // Camera space: x right, y up, looking down -z; pixel rows grow downward.
    Vec3 d_cam{((x + 0.5) - camera.cx) / camera.fx,
               -((y + 0.5) - camera.cy) / camera.fy,
               -1.0};
    Vec3 d_world = camera.pose.transform_dir(d_cam).normalized();
    Vec3 origin{camera.pose(0, 3), camera.pose(1, 3), camera.pose(2, 3)};
    return {origin, d_world};
}

std::vector<Ray> generate_rays(const Camera& camera,
                               const std::vector<std::pair<int, int>>& pixels) {
    std::vector<Ray> rays;
    rays.reserve(pixels.size());
    for (const auto& [x, y] : pixels)
        rays.push_back(generate_ray(camera, x, y));
    return rays;
}

SampleSet stratified_samples(double t_n, double t_f, int n, bool jitter,
                             const CounterRng& rng, std::uint64_t ray_key) {
    if (n < 2)
        throw InvalidArgument("stratified_samples: need n >= 2");
    if (!(t_f > t_n))
        throw InvalidArgument("stratified_samples: inverted t range");
    SampleSet set;
    set.provenance = SampleProvenance::Coarse;
    set.ts.resize(n);
    const double bin = (t_f - t_n) / n;
    for (int i = 0; i < n; ++i) {
        double u = jitter ? rng.uniform(ray_key, 0x5374, std::uint64_t(i)) : 0.5;
        set.ts[i] = t_n + (i + u) * bin;
    }
    return set;
}

namespace {

// Shared forward recursion; fills weights (= T_i alpha_i) and the
// per-sample transparency exp(-sigma_i delta_i).
void alpha_composite(const double* sigmas, const double* ts, std::size_t n, double t_f,
                     double* weights, double* transparency) {
    double trans = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double delta = (i + 1 < n ? ts[i + 1] - ts[i] : t_f - ts[n - 1]);
        const double e = std::exp(-sigmas[i] * delta);
        const double alpha = 1.0 - e;
        weights[i] = trans * alpha;
        transparency[i] = e;
        trans *= e;
    }
}

}  // namespace

std::vector<double> quadrature(const std::vector<double>& sigmas,
                               const std::vector<double>& radiances,
                               const SampleSet& ts, double t_f,
                               std::vector<double>& weights, bool white_background) {
    const std::size_t n = sigmas.size();
    if (ts.ts.size() != n || n == 0)
        throw ShapeMismatch("quadrature: sample count mismatch");
    if (radiances.size() % n != 0)
        throw ShapeMismatch("quadrature: radiance buffer not a multiple of sample count");
    const std::size_t channels = radiances.size() / n;
    weights.assign(n, 0.0);
    std::vector<double> transparency(n);
    alpha_composite(sigmas.data(), ts.ts.data(), n, t_f, weights.data(), transparency.data());

    std::vector<double> out(channels, 0.0);
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights[i];
        weight_sum += w;
        const double* s = radiances.data() + i * channels;
        for (std::size_t c = 0; c < channels; ++c)
            out[c] += w * s[c];
    }
    if (white_background)
        for (std::size_t c = 0; c < channels; ++c)
            out[c] += 1.0 - weight_sum;
    return out;
}

nn::Tensor quadrature_batch(const nn::Tensor& sigma, const nn::Tensor& radiance,
                            const std::vector<double>& ts, std::size_t rays,
                            std::size_t samples, double t_f, bool white_background,
                            std::vector<double>* weights_out) {
    using nn::Node;
    const std::size_t n = rays * samples;
    if (sigma.shape() != nn::Shape{n, 1})
        throw ShapeMismatch("quadrature_batch: sigma shape " + nn::shape_str(sigma.shape()) +
                            " vs expected (" + std::to_string(n) + ",1)");
    if (radiance.shape().size() != 2 || radiance.shape()[0] != n)
        throw ShapeMismatch("quadrature_batch: radiance shape " +
                            nn::shape_str(radiance.shape()));
    if (ts.size() != n)
        throw ShapeMismatch("quadrature_batch: ts length mismatch");
    const std::size_t channels = radiance.shape()[1];

    auto weights = std::make_shared<std::vector<double>>(n);
    auto transparency = std::make_shared<std::vector<double>>(n);
    auto deltas = std::make_shared<std::vector<double>>(n);
    auto tvals = std::make_shared<std::vector<double>>(ts);
    for (std::size_t r = 0; r < rays; ++r) {
        const double* trow = tvals->data() + r * samples;
        double* drow = deltas->data() + r * samples;
        for (std::size_t i = 0; i < samples; ++i)
            drow[i] = (i + 1 < samples ? trow[i + 1] - trow[i] : t_f - trow[samples - 1]);
        alpha_composite(sigma.data() + r * samples, trow, samples, t_f,
                        weights->data() + r * samples, transparency->data() + r * samples);
    }

    nn::Tensor out = nn::make_op(
        {rays, channels}, {sigma, radiance},
        [rays, samples, channels, weights, transparency, deltas, white_background](Node& nd) {
            Node* psig = nd.parents[0].get();
            Node* prad = nd.parents[1].get();
            const double* radv = prad->data.data();
            const bool want_sig = psig->requires_grad;
            const bool want_rad = prad->requires_grad;
            if (want_sig) { psig->ensure_grad(); psig->grad_filled = true; }
            if (want_rad) { prad->ensure_grad(); prad->grad_filled = true; }
            for (std::size_t r = 0; r < rays; ++r) {
                const double* g = nd.grad.data() + r * channels;
                const std::size_t base = r * samples;
                double gsum = 0.0;
                if (white_background)
                    for (std::size_t c = 0; c < channels; ++c)
                        gsum += g[c];
                if (want_rad)
                    for (std::size_t i = 0; i < samples; ++i) {
                        const double w = (*weights)[base + i];
                        double* dst = prad->grad.data() + (base + i) * channels;
                        for (std::size_t c = 0; c < channels; ++c)
                            dst[c] += w * g[c];
                    }
                if (want_sig) {
                    // Reverse sweep with suffix sums over later samples:
                    // B = sum_{j>i} w_j <g, s_j>, W = sum_{j>i} w_j.
                    double suffix_gs = 0.0, suffix_w = 0.0;
                    for (std::size_t i = samples; i-- > 0;) {
                        const double w = (*weights)[base + i];
                        const double e = (*transparency)[base + i];
                        const double t_before = (e < 1.0) ? w / (1.0 - e) : 0.0;
                        // T_i: recover transmittance before sample i; when
                        // alpha is ~0 use the product form fallback below.
                        double trans_i = t_before;
                        if (e >= 1.0 - 1e-12) {
                            trans_i = 1.0;
                            for (std::size_t m = 0; m < i; ++m)
                                trans_i *= (*transparency)[base + m];
                        }
                        const double* s = radv + (base + i) * channels;
                        double gs = 0.0;
                        for (std::size_t c = 0; c < channels; ++c)
                            gs += g[c] * s[c];
                        double grad_sigma =
                            (*deltas)[base + i] * (trans_i * e * gs - suffix_gs);
                        if (white_background)
                            grad_sigma -= (*deltas)[base + i] * (trans_i * e - suffix_w) * gsum;
                        psig->grad[base + i] += grad_sigma;
                        suffix_gs += w * gs;
                        suffix_w += w;
                    }
                }
            }
        });

    for (std::size_t r = 0; r < rays; ++r) {
        double* o = out.data() + r * channels;
        double wsum = 0.0;
        for (std::size_t i = 0; i < samples; ++i) {
            const double w = (*weights)[r * samples + i];
            wsum += w;
            const double* s = radiance.data() + (r * samples + i) * channels;
            for (std::size_t c = 0; c < channels; ++c)
                o[c] += w * s[c];
        }
        if (white_background)
            for (std::size_t c = 0; c < channels; ++c)
                o[c] += 1.0 - wsum;
    }
    if (weights_out)
        *weights_out = *weights;
    return out;
}

SampleSet hierarchical_resample(const SampleSet& coarse, double t_f,
                                const std::vector<double>& weights, int n_fine,
                                const CounterRng& rng, std::uint64_t ray_key) {
    const std::size_t n = coarse.ts.size();
    if (weights.size() != n || n == 0)
        throw InvalidArgument("hierarchical_resample: weights length mismatch");
    for (double w : weights)
        if (w < 0.0)
            throw InvalidArgument("hierarchical_resample: negative weight");
    if (n_fine < 0)
        throw InvalidArgument("hierarchical_resample: negative n_fine");

    // Piecewise-constant PDF over the coarse intervals [t_i, t_{i+1}),
    // last interval closed at t_f; 1e-5 floor avoids zero-mass bins.
    std::vector<double> cdf(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        cdf[i + 1] = cdf[i] + weights[i] + 1e-5;
    const double total = cdf.back();
    for (double& c : cdf)
        c /= total;

    SampleSet out;
    out.provenance = SampleProvenance::Fine;
    out.ts.reserve(n + n_fine);
    out.ts = coarse.ts;
    for (int k = 0; k < n_fine; ++k) {
        const double u = rng.uniform(ray_key, 0x46696e65, std::uint64_t(k));
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t bin = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - cdf.begin() - 1, 0),
                                                n - 1);
        const double lo = coarse.ts[bin];
        const double hi = (bin + 1 < n) ? coarse.ts[bin + 1] : t_f;
        const double mass = cdf[bin + 1] - cdf[bin];
        const double frac = mass > 0.0 ? (u - cdf[bin]) / mass : 0.5;
        out.ts.push_back(lo + frac * (hi - lo));
    }
    std::sort(out.ts.begin(), out.ts.end());
    return out;
}

namespace {

struct TileResult {
    std::size_t first_ray;
    std::vector<double> coarse_vals;  // per ray: s_num*3
    std::vector<double> fine_vals;
};

}  // namespace

std::pair<SpectrumStack, SpectrumStack> render_spectrum_maps(
    const FieldFn& coarse_field, const FieldFn& fine_field, int s_num,
    const Camera& camera, const RenderConfig& cfg) {
    camera.validate();
    if (s_num < 1)
        throw InvalidArgument("render_spectrum_maps: s_num must be >= 1");
    if (cfg.n_coarse < 2)
        throw InvalidArgument("render_spectrum_maps: n_coarse must be >= 2");

    const std::size_t total_rays = std::size_t(camera.width) * camera.height;
    const std::size_t channels = std::size_t(s_num) * 3;
    SpectrumStack coarse_stack(camera.width, camera.height, s_num);
    SpectrumStack fine_stack(camera.width, camera.height, s_num);
    const CounterRng rng{cfg.seed};

    auto render_tile = [&](std::size_t begin, std::size_t end) {
        const std::size_t tile = end - begin;
        std::vector<Vec3> positions(tile * cfg.n_coarse), directions(tile * cfg.n_coarse);
        std::vector<SampleSet> coarse_ts(tile);
        std::vector<Ray> rays(tile);
        for (std::size_t t = 0; t < tile; ++t) {
            const std::size_t ray_idx = begin + t;
            const int px = int(ray_idx % camera.width);
            const int py = int(ray_idx / camera.width);
            rays[t] = generate_ray(camera, px, py);
            coarse_ts[t] = stratified_samples(camera.t_near, camera.t_far, cfg.n_coarse,
                                              cfg.jitter, rng, ray_idx);
            for (int i = 0; i < cfg.n_coarse; ++i) {
                positions[t * cfg.n_coarse + i] =
                    rays[t].origin + coarse_ts[t].ts[i] * rays[t].direction;
                directions[t * cfg.n_coarse + i] = rays[t].direction;
            }
        }
        std::vector<double> sigmas, radiances;
        coarse_field(positions, directions, sigmas, radiances);

        std::vector<SampleSet> fine_ts(tile);
        std::vector<double> w;
        for (std::size_t t = 0; t < tile; ++t) {
            const std::size_t ray_idx = begin + t;
            std::vector<double> sig(sigmas.begin() + t * cfg.n_coarse,
                                    sigmas.begin() + (t + 1) * cfg.n_coarse);
            std::vector<double> rad(radiances.begin() + t * cfg.n_coarse * channels,
                                    radiances.begin() + (t + 1) * cfg.n_coarse * channels);
            auto vals = quadrature(sig, rad, coarse_ts[t], camera.t_far, w,
                                   cfg.white_background);
            const int px = int(ray_idx % camera.width);
            const int py = int(ray_idx / camera.width);
            for (int k = 0; k < s_num; ++k)
                for (int c = 0; c < 3; ++c)
                    coarse_stack.at(k, px, py, c) = vals[k * 3 + c];
            fine_ts[t] = hierarchical_resample(coarse_ts[t], camera.t_far, w, cfg.n_fine,
                                               rng, ray_idx);
        }

        // Fine pass on the union of coarse and resampled points.
        const std::size_t n_union = fine_ts[0].ts.size();
        positions.resize(tile * n_union);
        directions.resize(tile * n_union);
        for (std::size_t t = 0; t < tile; ++t)
            for (std::size_t i = 0; i < n_union; ++i) {
                positions[t * n_union + i] = rays[t].origin + fine_ts[t].ts[i] * rays[t].direction;
                directions[t * n_union + i] = rays[t].direction;
            }
        fine_field(positions, directions, sigmas, radiances);
        for (std::size_t t = 0; t < tile; ++t) {
            const std::size_t ray_idx = begin + t;
            std::vector<double> sig(sigmas.begin() + t * n_union,
                                    sigmas.begin() + (t + 1) * n_union);
            std::vector<double> rad(radiances.begin() + t * n_union * channels,
                                    radiances.begin() + (t + 1) * n_union * channels);
            auto vals = quadrature(sig, rad, fine_ts[t], camera.t_far, w,
                                   cfg.white_background);
            const int px = int(ray_idx % camera.width);
            const int py = int(ray_idx / camera.width);
            for (int k = 0; k < s_num; ++k)
                for (int c = 0; c < 3; ++c)
                    fine_stack.at(k, px, py, c) = vals[k * 3 + c];
        }
    };

    const std::size_t tile_rays = std::max<std::size_t>(1, cfg.tile_rays);
    std::vector<std::pair<std::size_t, std::size_t>> tiles;
    for (std::size_t begin = 0; begin < total_rays; begin += tile_rays)
        tiles.emplace_back(begin, std::min(begin + tile_rays, total_rays));

    const int workers = std::max(1, cfg.workers);
    if (workers == 1) {
        for (auto [b, e] : tiles)
            render_tile(b, e);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int wkr = 0; wkr < workers; ++wkr)
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= tiles.size())
                        return;
                    render_tile(tiles[i].first, tiles[i].second);
                }
            });
        for (auto& th : pool)
            th.join();
    }
    return {std::move(coarse_stack), std::move(fine_stack)};
}

}  // namespace spnf

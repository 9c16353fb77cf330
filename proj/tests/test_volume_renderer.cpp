#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spnf/dataset_io.hpp"
#include "spnf/gradcheck.hpp"
#include "spnf/losses_metrics.hpp"
#include "spnf/volume_renderer.hpp"

using namespace spnf;

namespace {

Camera test_camera(int w = 5, int h = 5) {
    Camera cam;
    cam.width = w;
    cam.height = h;
    cam.fx = cam.fy = 4.0;
    cam.cx = w / 2.0;
    cam.cy = h / 2.0;
    cam.t_near = 0.5;
    cam.t_far = 3.5;
    return cam;
}

}  // namespace

TEST_CASE("generate_rays") {
    Camera cam = test_camera();

    SUBCASE("principal axis") {
        // Pixel (2,2) has center (2.5, 2.5) = (cx, cy).
        Ray r = generate_ray(cam, 2, 2);
        CHECK(r.direction.x == doctest::Approx(0.0));
        CHECK(r.direction.y == doctest::Approx(0.0));
        CHECK(r.direction.z == doctest::Approx(-1.0));
        CHECK(r.origin.norm() == 0.0);
    }
    SUBCASE("translation moves origins, not directions") {
        Camera moved = cam;
        moved.pose(0, 3) = 1.5;
        moved.pose(1, 3) = -2.0;
        moved.pose(2, 3) = 0.25;
        for (int x = 0; x < cam.width; ++x) {
            Ray a = generate_ray(cam, x, 1);
            Ray b = generate_ray(moved, x, 1);
            CHECK(b.origin.x == 1.5);
            CHECK(b.origin.y == -2.0);
            CHECK(a.direction.x == b.direction.x);
            CHECK(a.direction.y == b.direction.y);
            CHECK(a.direction.z == b.direction.z);
        }
    }
    SUBCASE("directions are unit length") {
        for (int y = 0; y < cam.height; ++y)
            for (int x = 0; x < cam.width; ++x)
                CHECK(std::abs(generate_ray(cam, x, y).direction.norm() - 1.0) < 1e-9);
    }
    SUBCASE("pixels outside the image") {
        CHECK_THROWS_AS(generate_ray(cam, -1, 0), OutOfBounds);
        CHECK_THROWS_AS(generate_ray(cam, 0, 5), OutOfBounds);
    }
}

TEST_CASE("stratified_samples") {
    const CounterRng rng{1234};
    SUBCASE("midpoints with jitter off") {
        SampleSet s = stratified_samples(0.0, 1.0, 4, false, rng);
        REQUIRE(s.ts.size() == 4);
        CHECK(s.ts[0] == doctest::Approx(0.125));
        CHECK(s.ts[1] == doctest::Approx(0.375));
        CHECK(s.ts[2] == doctest::Approx(0.625));
        CHECK(s.ts[3] == doctest::Approx(0.875));
    }
    SUBCASE("samples stay inside their bins for any seed") {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const CounterRng r{seed};
            SampleSet s = stratified_samples(2.0, 6.0, 8, true, r, seed * 31);
            for (int i = 0; i < 8; ++i) {
                CHECK(s.ts[i] >= 2.0 + i * 0.5);
                CHECK(s.ts[i] <= 2.0 + (i + 1) * 0.5);
            }
        }
    }
    SUBCASE("deterministic per seed and key") {
        SampleSet a = stratified_samples(0.0, 1.0, 16, true, rng, 77);
        SampleSet b = stratified_samples(0.0, 1.0, 16, true, rng, 77);
        CHECK(a.ts == b.ts);
        SampleSet c = stratified_samples(0.0, 1.0, 16, true, rng, 78);
        CHECK(a.ts != c.ts);
    }
    SUBCASE("needs at least two samples") {
        CHECK_THROWS_AS(stratified_samples(0.0, 1.0, 1, false, rng), InvalidArgument);
    }
}

TEST_CASE("quadrature") {
    SUBCASE("vacuum renders black with zero weights") {
        SampleSet ts = stratified_samples(0.0, 1.0, 16, false, CounterRng{0});
        std::vector<double> sigmas(16, 0.0), radiances(16, 1.0), weights;
        auto out = quadrature(sigmas, radiances, ts, 1.0, weights);
        CHECK(out[0] == 0.0);
        for (double w : weights)
            CHECK(w == 0.0);
    }
    SUBCASE("white background fills the vacuum") {
        SampleSet ts = stratified_samples(0.0, 1.0, 8, false, CounterRng{0});
        std::vector<double> sigmas(8, 0.0), radiances(8, 0.25), weights;
        auto out = quadrature(sigmas, radiances, ts, 1.0, weights, true);
        CHECK(out[0] == doctest::Approx(1.0));
    }
    SUBCASE("homogeneous slab matches the closed form") {
        // sigma = 2 over unit depth with unit emission: 1 - e^-2.
        SampleSet ts = stratified_samples(0.0, 1.0, 256, false, CounterRng{0});
        std::vector<double> sigmas(256, 2.0), radiances(256, 1.0), weights;
        auto out = quadrature(sigmas, radiances, ts, 1.0, weights);
        CHECK(std::abs(out[0] - (1.0 - std::exp(-2.0))) < 1e-3);
    }
    SUBCASE("two-sample hand recursion") {
        SampleSet ts;
        ts.ts = {0.0, 0.5};
        std::vector<double> sigmas = {1.0, 2.0};
        std::vector<double> radiances = {1.0, 0.5};
        std::vector<double> weights;
        auto out = quadrature(sigmas, radiances, ts, 1.0, weights);
        const double a1 = 1.0 - std::exp(-0.5);        // alpha for delta 0.5
        const double a2 = 1.0 - std::exp(-1.0);        // sigma 2, delta 0.5
        const double expected = a1 * 1.0 + (1.0 - a1) * a2 * 0.5;
        CHECK(out[0] == doctest::Approx(expected).epsilon(1e-12));
        CHECK(expected == doctest::Approx(0.58518).epsilon(1e-4));
        CHECK(weights[0] == doctest::Approx(a1));
        CHECK(weights[1] == doctest::Approx((1.0 - a1) * a2));
    }
    SUBCASE("transmittance bounds and band independence") {
        const CounterRng rng{5};
        SampleSet ts = stratified_samples(0.2, 2.2, 32, true, rng, 3);
        std::vector<double> sigmas(32), bands(32 * 3), weights;
        for (int i = 0; i < 32; ++i) {
            sigmas[i] = 3.0 * rng.uniform(1, i);
            for (int k = 0; k < 3; ++k)
                bands[i * 3 + k] = rng.uniform(2, i, k);
        }
        auto joint = quadrature(sigmas, bands, ts, 2.2, weights);
        double wsum = 0.0;
        for (double w : weights) {
            CHECK(w >= 0.0);
            CHECK(w <= 1.0);
            wsum += w;
        }
        CHECK(wsum <= 1.0 + 1e-12);
        // Each band equals an independent scalar quadrature with shared sigma.
        for (int k = 0; k < 3; ++k) {
            std::vector<double> single(32), w2;
            for (int i = 0; i < 32; ++i)
                single[i] = bands[i * 3 + k];
            auto lone = quadrature(sigmas, single, ts, 2.2, w2);
            CHECK(lone[0] == doctest::Approx(joint[k]).epsilon(1e-12));
        }
    }
    SUBCASE("batched quadrature matches the per-ray routine") {
        const CounterRng rng{9};
        const std::size_t rays = 4, samples = 8, channels = 6;
        std::vector<double> ts_flat(rays * samples), sig(rays * samples),
            rad(rays * samples * channels);
        for (std::size_t r = 0; r < rays; ++r) {
            SampleSet s = stratified_samples(0.5, 2.5, int(samples), true, rng, r);
            for (std::size_t i = 0; i < samples; ++i) {
                ts_flat[r * samples + i] = s.ts[i];
                sig[r * samples + i] = 2.5 * rng.uniform(10, r, i);
                for (std::size_t c = 0; c < channels; ++c)
                    rad[(r * samples + i) * channels + c] = rng.uniform(11, r * samples + i, c);
            }
        }
        std::vector<double> weights_batch;
        nn::Tensor out = quadrature_batch(
            nn::Tensor::from_data({rays * samples, 1}, sig),
            nn::Tensor::from_data({rays * samples, channels}, rad), ts_flat, rays, samples,
            2.5, false, &weights_batch);
        for (std::size_t r = 0; r < rays; ++r) {
            SampleSet s;
            s.ts.assign(ts_flat.begin() + r * samples, ts_flat.begin() + (r + 1) * samples);
            std::vector<double> s_sig(sig.begin() + r * samples,
                                      sig.begin() + (r + 1) * samples);
            std::vector<double> s_rad(rad.begin() + r * samples * channels,
                                      rad.begin() + (r + 1) * samples * channels);
            std::vector<double> w;
            auto vals = quadrature(s_sig, s_rad, s, 2.5, w);
            for (std::size_t c = 0; c < channels; ++c)
                CHECK(out.data()[r * channels + c] == doctest::Approx(vals[c]).epsilon(1e-12));
            for (std::size_t i = 0; i < samples; ++i)
                CHECK(weights_batch[r * samples + i] == doctest::Approx(w[i]).epsilon(1e-12));
        }
    }
    SUBCASE("batched quadrature gradients") {
        SplitMixSequence seq(77);
        const std::size_t rays = 2, samples = 5, channels = 3;
        std::vector<double> ts_flat(rays * samples);
        for (std::size_t r = 0; r < rays; ++r)
            for (std::size_t i = 0; i < samples; ++i)
                ts_flat[r * samples + i] = 0.3 + 0.4 * double(i) + 0.1 * seq.next_unit();
        std::vector<double> sv(rays * samples), rv(rays * samples * channels);
        for (double& v : sv)
            v = 0.2 + 1.8 * seq.next_unit();
        for (double& v : rv)
            v = seq.next_unit();
        nn::Tensor sig = nn::Tensor::from_data({rays * samples, 1}, sv, true);
        nn::Tensor rad = nn::Tensor::from_data({rays * samples, channels}, rv, true);
        std::vector<double> tv(rays * channels, 0.5);
        nn::Tensor target = nn::Tensor::from_data({rays, channels}, tv);
        for (bool white : {false, true}) {
            auto f = [&, white](const nn::Tensor&) {
                return nn::mse(quadrature_batch(sig, rad, ts_flat, rays, samples, 2.6, white),
                               target);
            };
            CHECK(nn::finite_diff_check(f, sig).passed(1e-4));
            CHECK(nn::finite_diff_check(f, rad).passed(1e-4));
        }
    }
}

TEST_CASE("hierarchical_resample") {
    const CounterRng rng{31};
    SampleSet coarse = stratified_samples(0.0, 1.0, 10, false, rng);

    SUBCASE("all mass in one bin confines the fine samples") {
        std::vector<double> weights(10, 0.0);
        weights[4] = 5.0;
        SampleSet fine = hierarchical_resample(coarse, 1.0, weights, 64, rng, 1);
        CHECK(fine.ts.size() == 74);
        // New samples (not the coarse midpoints) must sit inside bin 4:
        // [ts[4], ts[5]) = [0.45, 0.55).
        int inside = 0;
        for (double t : fine.ts) {
            bool is_coarse = false;
            for (double c : coarse.ts)
                if (t == c)
                    is_coarse = true;
            if (!is_coarse) {
                CHECK(t >= 0.45);
                CHECK(t <= 0.55);
                ++inside;
            }
        }
        CHECK(inside == 64);
    }
    SUBCASE("uniform weights spread samples uniformly") {
        std::vector<double> weights(10, 1.0);
        const int n_fine = 10000;
        SampleSet fine = hierarchical_resample(coarse, 1.0, weights, n_fine, rng, 2);
        std::vector<int> hist(10, 0);
        int drawn = 0;
        for (double t : fine.ts) {
            bool is_coarse = false;
            for (double c : coarse.ts)
                if (t == c)
                    is_coarse = true;
            if (!is_coarse) {
                // Bin i spans [ts[i], ts[i+1]) = [0.05 + 0.1*i, ...).
                const int bin = std::min(9, std::max(0, int((t - 0.05) / 0.1)));
                hist[bin]++;
                ++drawn;
            }
        }
        CHECK(drawn == n_fine);
        // 3-sigma multinomial bound around n/10.
        const double expect = n_fine / 10.0;
        const double sigma = std::sqrt(n_fine * 0.1 * 0.9);
        for (int b = 0; b < 10; ++b)
            CHECK(std::abs(hist[b] - expect) <= 3.0 * sigma);
    }
    SUBCASE("output ascending within bounds") {
        std::vector<double> weights(10);
        for (int i = 0; i < 10; ++i)
            weights[i] = rng.uniform(3, i);
        SampleSet fine = hierarchical_resample(coarse, 1.0, weights, 33, rng, 3);
        for (std::size_t i = 1; i < fine.ts.size(); ++i)
            CHECK(fine.ts[i] >= fine.ts[i - 1]);
        CHECK(fine.ts.front() >= 0.0);
        CHECK(fine.ts.back() <= 1.0);
    }
    SUBCASE("negative weights are rejected") {
        std::vector<double> weights(10, 1.0);
        weights[3] = -0.1;
        CHECK_THROWS_AS(hierarchical_resample(coarse, 1.0, weights, 4, rng, 0),
                        InvalidArgument);
    }
}

TEST_CASE("render_spectrum_maps") {
    const int s_num = 3;
    FieldFn zero_field = [](const std::vector<Vec3>& pos, const std::vector<Vec3>&,
                            std::vector<double>& sigma, std::vector<double>& radiance) {
        sigma.assign(pos.size(), 0.0);
        radiance.assign(pos.size() * s_num * 3, 0.7);
    };
    Camera cam = test_camera(6, 4);
    RenderConfig cfg;
    cfg.n_coarse = 8;
    cfg.n_fine = 8;
    cfg.seed = 5;

    SUBCASE("zero density renders black; white background renders white") {
        auto [coarse, fine] = render_spectrum_maps(zero_field, zero_field, s_num, cam, cfg);
        CHECK(coarse.width == 6);
        CHECK(fine.bands == s_num);
        for (double v : coarse.data)
            CHECK(v == 0.0);
        for (double v : fine.data)
            CHECK(v == 0.0);
        RenderConfig white = cfg;
        white.white_background = true;
        auto [wc, wf] = render_spectrum_maps(zero_field, zero_field, s_num, cam, white);
        for (double v : wf.data)
            CHECK(v == doctest::Approx(1.0));
    }
    SUBCASE("deterministic and schedule independent") {
        AnalyticScene scene;
        scene.blobs = {{{0.0, 0.0, -2.0}, 0.4, 6.0, {550.0, 60.0, 0.9}}};
        BandPartition part = make_partition(s_num, 380.0, 780.0);
        FieldFn fn = analytic_field_fn(scene, part.centers_nm);
        RenderConfig jcfg = cfg;
        jcfg.jitter = true;
        jcfg.tile_rays = 7;
        auto [a_c, a_f] = render_spectrum_maps(fn, fn, s_num, cam, jcfg);
        auto [b_c, b_f] = render_spectrum_maps(fn, fn, s_num, cam, jcfg);
        CHECK(a_f.data == b_f.data);
        RenderConfig wcfg = jcfg;
        wcfg.workers = 3;
        auto [c_c, c_f] = render_spectrum_maps(fn, fn, s_num, cam, wcfg);
        CHECK(a_f.data == c_f.data);
        CHECK(a_c.data == c_c.data);
    }
}

TEST_CASE("quadrature converges to the dense oracle on a smooth field") {
    // Smooth single-blob medium along the principal ray; the renderer's
    // sample count sweep must approach the 4096-step reference.
    AnalyticScene scene;
    scene.blobs = {{{0.0, 0.0, -2.0}, 0.5, 4.0, {550.0, 80.0, 1.0}}};
    BandPartition part = make_partition(1, 380.0, 780.0);
    Camera cam = test_camera(1, 1);
    cam.cx = 0.5;
    cam.cy = 0.5;
    cam.t_near = 0.5;
    cam.t_far = 3.5;

    SpectrumStack ref = oracle_render(scene, cam, part, 4096);
    const double reference = ref.at(0, 0, 0, 0);
    FieldFn fn = analytic_field_fn(scene, part.centers_nm);

    double prev_err = -1.0;
    for (int n : {32, 64, 128, 256, 512}) {
        RenderConfig cfg;
        cfg.n_coarse = n;
        cfg.n_fine = 0;
        auto [coarse, fine] = render_spectrum_maps(fn, fn, 1, cam, cfg);
        const double err = std::abs(coarse.at(0, 0, 0, 0) - reference);
        if (prev_err >= 0.0)
            CHECK(err <= prev_err * 1.1);  // monotone within 10% noise
        prev_err = err;
    }
    CHECK(prev_err < 1e-5);
}

TEST_CASE("renderer matches the oracle for a perfectly known field") {
    AnalyticScene scene;
    scene.blobs = {
        {{0.3, 0.1, 0.0}, 0.35, 8.0, {620.0, 50.0, 0.9}},
        {{-0.3, -0.1, 0.2}, 0.3, 7.0, {480.0, 50.0, 0.85}},
    };
    BandPartition part = make_partition(4, 380.0, 780.0);
    Camera cam;
    cam.width = 16;
    cam.height = 16;
    cam.fx = cam.fy = 14.0;
    cam.cx = 8.0;
    cam.cy = 8.0;
    cam.pose = look_at({2.5, 0.5, 1.0}, {0, 0, 0}, {0, 1, 0});
    cam.t_near = 1.2;
    cam.t_far = 4.2;

    SpectrumStack gt = oracle_render(scene, cam, part, 4096);
    FieldFn fn = analytic_field_fn(scene, part.centers_nm);
    RenderConfig cfg;
    cfg.n_coarse = 64;
    cfg.n_fine = 128;
    auto [coarse, fine] = render_spectrum_maps(fn, fn, 4, cam, cfg);
    // Quadrature-only error: importance-sampled 192-point renders of the
    // analytic field must sit well above the acceptance floor.
    const double p = psnr(fine.data.data(), gt.data.data(), gt.data.size());
    CHECK(p >= 28.0);
}

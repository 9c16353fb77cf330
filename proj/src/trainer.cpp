#include "spnf/trainer.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "spnf/random.hpp"

namespace spnf {

namespace {

// Per-view targets flattened pixel-major with band-major channels,
// matching the radiance head layout.
struct TrainView {
    Camera camera;
    std::vector<double> rows;  // (H*W, 3*s_num)
};

std::vector<TrainView> load_train_views(const Dataset& dataset) {
    std::vector<TrainView> views;
    for (int v : dataset.views_with_split("train")) {
        TrainView tv;
        tv.camera = dataset.manifest.views[v].camera;
        SpectrumStack stack = dataset.load_stack(v);
        const std::size_t pixels = std::size_t(stack.width) * stack.height;
        const int k3 = stack.bands * 3;
        tv.rows.resize(pixels * k3);
        for (int k = 0; k < stack.bands; ++k)
            for (int y = 0; y < stack.height; ++y)
                for (int x = 0; x < stack.width; ++x)
                    for (int c = 0; c < 3; ++c)
                        tv.rows[(std::size_t(y) * stack.width + x) * k3 + k * 3 + c] =
                            stack.at(k, x, y, c);
        views.push_back(std::move(tv));
    }
    if (views.empty())
        throw InvalidArgument("train_field: dataset has no train views");
    return views;
}

void encode_batch(const std::vector<Vec3>& pts, const std::vector<Vec3>& dirs,
                  const EncodingConfig& enc, std::vector<double>& pos_buf,
                  std::vector<double>& dir_buf) {
    const std::size_t pw = enc.position_width(), dw = enc.direction_width();
    pos_buf.resize(pts.size() * pw);
    dir_buf.resize(pts.size() * dw);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        encode(pts[i], enc.num_freqs_position, enc.include_identity, pos_buf.data() + i * pw);
        encode(dirs[i], enc.num_freqs_direction, enc.include_identity,
               dir_buf.data() + i * dw);
    }
}

std::vector<double> band_psnr_of_batch(const double* pred, const double* target,
                                       std::size_t rays, int s_num) {
    std::vector<double> out(s_num);
    const std::size_t cols = std::size_t(s_num) * 3;
    for (int k = 0; k < s_num; ++k) {
        double se = 0.0;
        for (std::size_t r = 0; r < rays; ++r)
            for (int c = 0; c < 3; ++c) {
                const double d = pred[r * cols + k * 3 + c] - target[r * cols + k * 3 + c];
                se += d * d;
            }
        const double mse = se / double(rays * 3);
        out[k] = mse == 0.0 ? 60.0 : 10.0 * std::log10(1.0 / mse);
    }
    return out;
}

}  // namespace

FieldTrainState make_field_train_state(const FieldTrainConfig& cfg) {
    return {make_field(cfg.mlp, cfg.seed), make_spectral_weights(cfg.mlp.s_num), 0};
}

void train_field(const Dataset& dataset, const FieldTrainConfig& cfg,
                 FieldTrainState& state, std::ostream* log) {
    if (dataset.manifest.partition.s_num != cfg.mlp.s_num)
        throw BadPartition("train_field: dataset has " +
                           std::to_string(dataset.manifest.partition.s_num) +
                           " bands, model expects " + std::to_string(cfg.mlp.s_num));
    const std::vector<TrainView> views = load_train_views(dataset);
    const double t_near = views[0].camera.t_near;
    const double t_far = views[0].camera.t_far;
    for (const TrainView& v : views)
        if (v.camera.t_near != t_near || v.camera.t_far != t_far)
            throw InvalidArgument("train_field: views must share near/far bounds");

    const int s_num = cfg.mlp.s_num;
    const std::size_t k3 = std::size_t(s_num) * 3;
    const std::size_t rays = cfg.batch_rays;
    const int n_c = cfg.n_coarse;
    const int n_u = cfg.n_coarse + cfg.n_fine;  // fine pass: union of samples
    const CounterRng rng{cfg.seed};
    const std::size_t pixels_total =
        views.size() * std::size_t(views[0].camera.width) * views[0].camera.height;

    std::vector<Vec3> pts_c(rays * n_c), dirs_c(rays * n_c);
    std::vector<Vec3> pts_f(rays * n_u), dirs_f(rays * n_u);
    std::vector<double> ts_c(rays * n_c), ts_f(rays * n_u);
    std::vector<double> target_rows(rays * k3);
    std::vector<double> pos_buf, dir_buf;
    std::vector<std::pair<std::size_t, std::size_t>> batch_ids(rays);  // (view, pixel)
    std::vector<SampleSet> coarse_sets(rays);
    std::vector<double> quad_weights;

    for (int step = state.step; step < cfg.iterations; ++step) {
        // Batch assembly: counter-based draws keyed on the absolute step.
        for (std::size_t i = 0; i < rays; ++i) {
            const double u = rng.uniform(0x73656c, std::uint64_t(step), i);
            std::size_t idx = std::min(std::size_t(u * double(pixels_total)),
                                       pixels_total - 1);
            const std::size_t view = idx / (std::size_t(views[0].camera.width) *
                                            views[0].camera.height);
            const std::size_t pixel = idx % (std::size_t(views[0].camera.width) *
                                             views[0].camera.height);
            batch_ids[i] = {view, pixel};
            const Camera& cam = views[view].camera;
            const Ray ray = generate_ray(cam, int(pixel % cam.width), int(pixel / cam.width));
            const std::uint64_t ray_key = hash_combine(std::uint64_t(step), i);
            coarse_sets[i] = stratified_samples(t_near, t_far, n_c, /*jitter=*/true, rng,
                                                ray_key);
            for (int j = 0; j < n_c; ++j) {
                pts_c[i * n_c + j] = ray.origin + coarse_sets[i].ts[j] * ray.direction;
                dirs_c[i * n_c + j] = ray.direction;
                ts_c[i * n_c + j] = coarse_sets[i].ts[j];
            }
            std::copy_n(views[view].rows.data() + pixel * k3, k3,
                        target_rows.data() + i * k3);
        }

        encode_batch(pts_c, dirs_c, cfg.mlp.encoding, pos_buf, dir_buf);
        nn::Tensor xenc_c = nn::Tensor::from_data(
            {rays * n_c, std::size_t(cfg.mlp.encoding.position_width())}, pos_buf);
        nn::Tensor denc_c = nn::Tensor::from_data(
            {rays * n_c, std::size_t(cfg.mlp.encoding.direction_width())}, dir_buf);

        std::vector<double> noise;
        const std::vector<double>* noise_ptr = nullptr;
        if (cfg.sigma_noise_std > 0.0) {
            noise.resize(rays * n_c);
            for (std::size_t i = 0; i < noise.size(); ++i)
                noise[i] = cfg.sigma_noise_std *
                           rng.gaussian(0x6e6f6973, std::uint64_t(step), i);
            noise_ptr = &noise;
        }
        auto out_c = state.fields.coarse.forward(xenc_c, denc_c, noise_ptr);
        nn::Tensor pred_c = quadrature_batch(out_c.sigma, out_c.radiance, ts_c, rays, n_c,
                                             t_far, false, &quad_weights);

        // Importance-sample the fine pass from the coarse weights.
        for (std::size_t i = 0; i < rays; ++i) {
            const std::uint64_t ray_key = hash_combine(std::uint64_t(step), i);
            std::vector<double> w(quad_weights.begin() + i * n_c,
                                  quad_weights.begin() + (i + 1) * n_c);
            SampleSet uni = hierarchical_resample(coarse_sets[i], t_far, w, cfg.n_fine, rng,
                                                  ray_key);
            const auto [view, pixel] = batch_ids[i];
            const Camera& cam = views[view].camera;
            const Ray ray = generate_ray(cam, int(pixel % cam.width), int(pixel / cam.width));
            for (int j = 0; j < n_u; ++j) {
                pts_f[i * n_u + j] = ray.origin + uni.ts[j] * ray.direction;
                dirs_f[i * n_u + j] = ray.direction;
                ts_f[i * n_u + j] = uni.ts[j];
            }
        }
        encode_batch(pts_f, dirs_f, cfg.mlp.encoding, pos_buf, dir_buf);
        nn::Tensor xenc_f = nn::Tensor::from_data(
            {rays * n_u, std::size_t(cfg.mlp.encoding.position_width())}, pos_buf);
        nn::Tensor denc_f = nn::Tensor::from_data(
            {rays * n_u, std::size_t(cfg.mlp.encoding.direction_width())}, dir_buf);
        std::vector<double> noise_f;
        const std::vector<double>* noise_f_ptr = nullptr;
        if (cfg.sigma_noise_std > 0.0) {
            noise_f.resize(rays * n_u);
            for (std::size_t i = 0; i < noise_f.size(); ++i)
                noise_f[i] = cfg.sigma_noise_std *
                             rng.gaussian(0x6e6f6974, std::uint64_t(step), i);
            noise_f_ptr = &noise_f;
        }
        auto out_f = state.fields.fine.forward(xenc_f, denc_f, noise_f_ptr);
        nn::Tensor pred_f = quadrature_batch(out_f.sigma, out_f.radiance, ts_f, rays, n_u,
                                             t_far, false);

        nn::Tensor target = nn::Tensor::from_data({rays, k3}, target_rows);
        nn::Tensor loss = spectral_loss(pred_c, pred_f, target, state.ws);
        const double loss_value = loss.item();
        if (!std::isfinite(loss_value)) {
            std::ostringstream os;
            os << "train_field: non-finite loss at step " << step << "; batch indices";
            for (std::size_t i = 0; i < std::min<std::size_t>(rays, 8); ++i)
                os << " (view " << batch_ids[i].first << ", pixel " << batch_ids[i].second
                   << ")";
            throw NanLoss(os.str());
        }
        nn::backward(loss);
        nn::adam_step(state.fields.coarse.params(), cfg.lr);
        nn::adam_step(state.fields.fine.params(), cfg.lr);

        if ((step + 1) % cfg.loss.ws_update_interval == 0)
            update_ws(pred_c.data(), target_rows.data(), rays, s_num, state.ws, cfg.loss);

        state.step = step + 1;
        if (log && (cfg.log_interval > 0 && (step + 1) % cfg.log_interval == 0)) {
            auto band_psnr = band_psnr_of_batch(pred_f.data(), target_rows.data(), rays,
                                                s_num);
            (*log) << "step " << (step + 1) << " loss " << loss_value << " band_psnr";
            for (double p : band_psnr)
                (*log) << " " << p;
            (*log) << "\n";
        }
        if (!cfg.out_dir.empty() && cfg.checkpoint_interval > 0 &&
            (step + 1) % cfg.checkpoint_interval == 0 && (step + 1) < cfg.iterations) {
            std::ostringstream name;
            name << cfg.out_dir << "/field_" << (step + 1) << ".spnf";
            save_field_checkpoint(name.str(), cfg, state);
        }
    }
    if (!cfg.out_dir.empty())
        save_field_checkpoint(cfg.out_dir + "/field.spnf", cfg, state);
}

void save_field_checkpoint(const std::string& path, const FieldTrainConfig& cfg,
                           const FieldTrainState& state) {
    std::vector<nn::TensorRecord> records;
    state.fields.coarse.append_records("coarse/", records, true);
    state.fields.fine.append_records("fine/", records, true);
    records.push_back({"ws/p", {state.ws.p_lambda.size()}, state.ws.p_lambda});
    records.push_back({"ws/w", {state.ws.w_s.size()}, state.ws.w_s});
    records.push_back({"ws/init", {1}, {state.ws.initialized ? 1.0 : 0.0}});
    records.push_back({"meta/step", {1}, {double(state.step)}});
    nn::write_checkpoint(path, records);

    const auto& enc = cfg.mlp.encoding;
    std::ofstream side(path + ".cfg");
    if (!side)
        throw IoError("save_field_checkpoint: cannot open " + path + ".cfg");
    side << "depth " << cfg.mlp.depth << "\n"
         << "width " << cfg.mlp.width << "\n"
         << "skip_layer " << cfg.mlp.skip_layer << "\n"
         << "bottleneck " << cfg.mlp.bottleneck_width << "\n"
         << "snum " << cfg.mlp.s_num << "\n"
         << "freq_pos " << enc.num_freqs_position << "\n"
         << "freq_dir " << enc.num_freqs_direction << "\n"
         << "include_identity " << (enc.include_identity ? 1 : 0) << "\n"
         << "n_coarse " << cfg.n_coarse << "\n"
         << "n_fine " << cfg.n_fine << "\n"
         << "iterations " << cfg.iterations << "\n"
         << "batch_rays " << cfg.batch_rays << "\n"
         << "lr " << cfg.lr << "\n"
         << "sigma_noise_std " << cfg.sigma_noise_std << "\n"
         << "seed " << cfg.seed << "\n";
}

std::pair<FieldTrainConfig, FieldTrainState> load_field_checkpoint(const std::string& path) {
    std::ifstream side(path + ".cfg");
    if (!side)
        throw MissingFile("load_field_checkpoint: missing sidecar " + path + ".cfg");
    FieldTrainConfig cfg;
    std::string key;
    while (side >> key) {
        if (key == "depth") side >> cfg.mlp.depth;
        else if (key == "width") side >> cfg.mlp.width;
        else if (key == "skip_layer") side >> cfg.mlp.skip_layer;
        else if (key == "bottleneck") side >> cfg.mlp.bottleneck_width;
        else if (key == "snum") side >> cfg.mlp.s_num;
        else if (key == "freq_pos") side >> cfg.mlp.encoding.num_freqs_position;
        else if (key == "freq_dir") side >> cfg.mlp.encoding.num_freqs_direction;
        else if (key == "include_identity") {
            int v; side >> v; cfg.mlp.encoding.include_identity = v != 0;
        }
        else if (key == "n_coarse") side >> cfg.n_coarse;
        else if (key == "n_fine") side >> cfg.n_fine;
        else if (key == "iterations") side >> cfg.iterations;
        else if (key == "batch_rays") side >> cfg.batch_rays;
        else if (key == "lr") side >> cfg.lr;
        else if (key == "sigma_noise_std") side >> cfg.sigma_noise_std;
        else if (key == "seed") side >> cfg.seed;
        else throw IoError("load_field_checkpoint: unknown sidecar key '" + key + "'");
    }
    FieldTrainState state = make_field_train_state(cfg);
    const auto records = nn::read_checkpoint(path);
    state.fields.coarse.load_records("coarse/", records, true);
    state.fields.fine.load_records("fine/", records, true);
    for (const auto& r : records) {
        if (r.name == "ws/p") state.ws.p_lambda = r.data;
        else if (r.name == "ws/w") state.ws.w_s = r.data;
        else if (r.name == "ws/init") state.ws.initialized = r.data.at(0) != 0.0;
        else if (r.name == "meta/step") state.step = int(r.data.at(0));
    }
    if (int(state.ws.w_s.size()) != cfg.mlp.s_num)
        throw DimMismatch("load_field_checkpoint: w_s size does not match snum");
    return {std::move(cfg), std::move(state)};
}

FieldFn field_fn(const SpectralField& field) {
    return [&field](const std::vector<Vec3>& pos, const std::vector<Vec3>& dir,
                    std::vector<double>& sigma, std::vector<double>& radiance) {
        field.eval_raw(pos, dir, sigma, radiance);
    };
}

double train_fusion(const std::vector<SpectrumStack>& stacks,
                    const std::vector<RgbImage>& targets, const FusionTrainConfig& cfg,
                    SaUnet& unet, std::ostream* log) {
    if (stacks.empty() || stacks.size() != targets.size())
        throw InvalidArgument("train_fusion: need matching stacks and targets");
    std::vector<nn::Tensor> inputs, labels;
    for (std::size_t v = 0; v < stacks.size(); ++v) {
        inputs.push_back(SaUnet::stack_to_tensor(stacks[v]));
        labels.push_back(SaUnet::rgb_to_tensor(targets[v]));
    }
    double last = 0.0;
    for (int step = 0; step < cfg.iterations; ++step) {
        const std::size_t v = std::size_t(step) % stacks.size();
        nn::Tensor pred = unet.forward(inputs[v]);
        nn::Tensor loss = rgb_loss(pred, labels[v]);
        last = loss.item();
        if (!std::isfinite(last))
            throw NanLoss("train_fusion: non-finite loss at step " + std::to_string(step) +
                          " (view " + std::to_string(v) + ")");
        nn::backward(loss);
        nn::adam_step(unet.params(), cfg.lr);
        if (log && cfg.log_interval > 0 && (step + 1) % cfg.log_interval == 0)
            (*log) << "step " << (step + 1) << " rgb_loss " << last << " weighted "
                   << cfg.loss.lambda_rgb * last << "\n";
    }
    return last;
}

void save_fusion_checkpoint(const std::string& path, const SaUnetConfig& cfg,
                            const SaUnet& unet) {
    std::vector<nn::TensorRecord> records;
    unet.append_records("saunet/", records, true);
    nn::write_checkpoint(path, records);
    std::ofstream side(path + ".cfg");
    if (!side)
        throw IoError("save_fusion_checkpoint: cannot open " + path + ".cfg");
    side << "snum " << cfg.s_num << "\n"
         << "base_channels " << cfg.base_channels << "\n"
         << "se_reduction " << cfg.se_reduction << "\n"
         << "sa_placement";
    for (int e : cfg.sa_placement)
        side << " " << e;
    side << "\n";
}

std::pair<SaUnetConfig, std::shared_ptr<SaUnet>> load_fusion_checkpoint(
    const std::string& path) {
    std::ifstream side(path + ".cfg");
    if (!side)
        throw MissingFile("load_fusion_checkpoint: missing sidecar " + path + ".cfg");
    SaUnetConfig cfg;
    cfg.sa_placement.clear();
    std::string line, key;
    while (std::getline(side, line)) {
        std::istringstream ls(line);
        if (!(ls >> key))
            continue;
        if (key == "snum") ls >> cfg.s_num;
        else if (key == "base_channels") ls >> cfg.base_channels;
        else if (key == "se_reduction") ls >> cfg.se_reduction;
        else if (key == "sa_placement") {
            int e;
            while (ls >> e)
                cfg.sa_placement.push_back(e);
        }
        else throw IoError("load_fusion_checkpoint: unknown sidecar key '" + key + "'");
    }
    auto unet = std::make_shared<SaUnet>(cfg, 0);
    unet->load_records("saunet/", nn::read_checkpoint(path), true);
    return {cfg, unet};
}

JointLossReport train_joint(const Dataset& dataset, const JointTrainConfig& cfg,
                            FieldTrainState& state, SaUnet& unet, std::ostream* log) {
    if (dataset.manifest.partition.s_num != cfg.field.mlp.s_num ||
        cfg.fusion.unet.s_num != cfg.field.mlp.s_num)
        throw BadPartition("train_joint: band counts disagree");
    const std::vector<int> train_ids = dataset.views_with_split("train");
    if (train_ids.empty())
        throw InvalidArgument("train_joint: dataset has no train views");
    const int w = dataset.manifest.width;
    const int h = dataset.manifest.height;
    const std::size_t pixels = std::size_t(w) * h;
    const int s_num = cfg.field.mlp.s_num;
    const std::size_t k3 = std::size_t(s_num) * 3;
    const int n_c = cfg.field.n_coarse;
    const int n_u = cfg.field.n_coarse + cfg.field.n_fine;
    const CounterRng rng{cfg.field.seed};

    // Preload band targets (rows) and RGB targets per train view.
    std::vector<std::vector<double>> band_rows(train_ids.size());
    std::vector<nn::Tensor> rgb_targets;
    std::vector<Camera> cameras;
    for (std::size_t t = 0; t < train_ids.size(); ++t) {
        SpectrumStack stack = dataset.load_stack(train_ids[t]);
        band_rows[t].resize(pixels * k3);
        for (int k = 0; k < s_num; ++k)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    for (int c = 0; c < 3; ++c)
                        band_rows[t][(std::size_t(y) * w + x) * k3 + k * 3 + c] =
                            stack.at(k, x, y, c);
        rgb_targets.push_back(SaUnet::rgb_to_tensor(dataset.load_rgb(train_ids[t])));
        cameras.push_back(dataset.manifest.views[train_ids[t]].camera);
    }

    JointLossReport report;
    std::vector<Vec3> pts(pixels * n_u), dirs(pixels * n_u);
    std::vector<double> ts(pixels * n_u);
    std::vector<double> pos_buf, dir_buf, quad_weights;
    for (int step = 0; step < cfg.iterations; ++step) {
        const std::size_t t = std::size_t(rng.uniform(0x6a6f696e, std::uint64_t(step)) *
                                          double(train_ids.size())) %
                              train_ids.size();
        const Camera& cam = cameras[t];

        // Coarse pass over the whole view.
        for (std::size_t p = 0; p < pixels; ++p) {
            const Ray ray = generate_ray(cam, int(p % w), int(p / w));
            const std::uint64_t ray_key = hash_combine(std::uint64_t(step), p);
            SampleSet set = stratified_samples(cam.t_near, cam.t_far, n_c, true, rng, ray_key);
            for (int j = 0; j < n_c; ++j) {
                pts[p * n_c + j] = ray.origin + set.ts[j] * ray.direction;
                dirs[p * n_c + j] = ray.direction;
                ts[p * n_c + j] = set.ts[j];
            }
        }
        {
            std::vector<Vec3> pc(pts.begin(), pts.begin() + pixels * n_c);
            std::vector<Vec3> dc(dirs.begin(), dirs.begin() + pixels * n_c);
            encode_batch(pc, dc, cfg.field.mlp.encoding, pos_buf, dir_buf);
        }
        nn::Tensor xenc_c = nn::Tensor::from_data(
            {pixels * n_c, std::size_t(cfg.field.mlp.encoding.position_width())}, pos_buf);
        nn::Tensor denc_c = nn::Tensor::from_data(
            {pixels * n_c, std::size_t(cfg.field.mlp.encoding.direction_width())}, dir_buf);
        auto out_c = state.fields.coarse.forward(xenc_c, denc_c);
        std::vector<double> ts_c(ts.begin(), ts.begin() + pixels * n_c);
        nn::Tensor pred_c = quadrature_batch(out_c.sigma, out_c.radiance, ts_c, pixels, n_c,
                                             cam.t_far, false, &quad_weights);

        // Fine pass on the union samples.
        for (std::size_t p = 0; p < pixels; ++p) {
            const Ray ray = generate_ray(cam, int(p % w), int(p / w));
            const std::uint64_t ray_key = hash_combine(std::uint64_t(step), p);
            SampleSet coarse_set;
            coarse_set.ts.assign(ts_c.begin() + p * n_c, ts_c.begin() + (p + 1) * n_c);
            std::vector<double> wq(quad_weights.begin() + p * n_c,
                                   quad_weights.begin() + (p + 1) * n_c);
            SampleSet uni = hierarchical_resample(coarse_set, cam.t_far, wq, cfg.field.n_fine,
                                                  rng, ray_key);
            for (int j = 0; j < n_u; ++j) {
                pts[p * n_u + j] = ray.origin + uni.ts[j] * ray.direction;
                dirs[p * n_u + j] = ray.direction;
                ts[p * n_u + j] = uni.ts[j];
            }
        }
        encode_batch(pts, dirs, cfg.field.mlp.encoding, pos_buf, dir_buf);
        nn::Tensor xenc_f = nn::Tensor::from_data(
            {pixels * n_u, std::size_t(cfg.field.mlp.encoding.position_width())}, pos_buf);
        nn::Tensor denc_f = nn::Tensor::from_data(
            {pixels * n_u, std::size_t(cfg.field.mlp.encoding.direction_width())}, dir_buf);
        auto out_f = state.fields.fine.forward(xenc_f, denc_f);
        nn::Tensor pred_f = quadrature_batch(out_f.sigma, out_f.radiance, ts, pixels, n_u,
                                             cam.t_far, false);

        nn::Tensor target = nn::Tensor::from_data({pixels, k3}, band_rows[t]);
        nn::Tensor l_spec = spectral_loss(pred_c, pred_f, target, state.ws);
        nn::Tensor rgb_pred = unet.forward(nn::rows_to_nchw(pred_f, std::size_t(h),
                                                            std::size_t(w)));
        nn::Tensor l_rgb = rgb_loss(rgb_pred, rgb_targets[t]);
        nn::Tensor loss = total_loss(l_spec, l_rgb, cfg.fusion.loss);

        report.spectral = l_spec.item();
        report.rgb = l_rgb.item();
        report.total = loss.item();
        if (!std::isfinite(report.total))
            throw NanLoss("train_joint: non-finite loss at step " + std::to_string(step) +
                          " (view " + std::to_string(train_ids[t]) + ")");
        nn::backward(loss);
        nn::adam_step(state.fields.coarse.params(), cfg.field.lr);
        nn::adam_step(state.fields.fine.params(), cfg.field.lr);
        nn::adam_step(unet.params(), cfg.fusion.lr);
        state.step += 1;
        if (log && cfg.field.log_interval > 0 && (step + 1) % cfg.field.log_interval == 0)
            (*log) << "step " << (step + 1) << " spectral " << report.spectral << " rgb "
                   << report.rgb << " total " << report.total << "\n";
    }
    return report;
}

}  // namespace spnf

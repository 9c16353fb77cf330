// spnf command-line tool: dataset generation, field training, spectrum
// map rendering, fusion fitting/training, evaluation and the gradient
// verification harness.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "spnf/dataset_io.hpp"
#include "spnf/gradcheck.hpp"
#include "spnf/losses_metrics.hpp"
#include "spnf/random.hpp"
#include "spnf/trainer.hpp"
#include "spnf/verification.hpp"

namespace fs = std::filesystem;
using namespace spnf;

namespace {

// Every command echoes its resolved settings to stdout and, when an
// output directory exists, into <out>/config_echo.txt.
struct ConfigEcho {
    std::ostringstream lines;

    template <typename T>
    void add(const std::string& key, const T& value) {
        lines << key << " " << value << "\n";
    }
    void emit(const std::string& out_dir) const {
        std::cout << "-- resolved config --\n" << lines.str() << "---------------------\n";
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            std::ofstream f(fs::path(out_dir) / "config_echo.txt");
            f << lines.str();
        }
    }
};

std::vector<double> parse_centers(const std::string& csv) {
    std::vector<double> out;
    std::istringstream is(csv);
    std::string tok;
    while (std::getline(is, tok, ','))
        if (!tok.empty())
            out.push_back(std::stod(tok));
    return out;
}

std::vector<int> parse_placement(const std::string& csv) {
    std::vector<int> out;
    if (csv == "none" || csv.empty())
        return out;
    std::istringstream is(csv);
    std::string tok;
    while (std::getline(is, tok, ','))
        if (!tok.empty())
            out.push_back(std::stoi(tok));
    return out;
}

AnalyticScene builtin_scene(const std::string& name) {
    AnalyticScene scene;
    scene.domain_radius = 1.0;
    if (name == "blobs3") {
        scene.blobs = {
            {{0.45, 0.05, 0.0}, 0.32, 9.0, {610.0, 55.0, 0.95}},
            {{-0.35, 0.28, 0.12}, 0.30, 8.0, {540.0, 50.0, 0.90}},
            {{-0.05, -0.32, -0.28}, 0.34, 8.5, {460.0, 45.0, 0.95}},
        };
    } else if (name == "blob1") {
        scene.blobs = {{{0.0, 0.0, 0.0}, 0.4, 8.0, {560.0, 80.0, 0.9}}};
    } else if (name == "empty") {
        scene.blobs.clear();
    } else {
        throw InvalidArgument("unknown scene '" + name +
                              "' (available: blobs3, blob1, empty)");
    }
    return scene;
}

std::string view_stem(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "v%03d", index);
    return buf;
}

int run(int argc, char** argv) {
    CLI::App app{"spnf: spectral radiance field engine"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file whose keys mirror the long flag names");

    // ---- gen-synthetic ------------------------------------------------
    auto* gen = app.add_subcommand("gen-synthetic", "Render an analytic spectral dataset");
    struct {
        std::string out, scene = "blobs3", illuminant = "d65", mode = "baked", name;
        std::string explicit_centers;
        int snum = 11, width = 64, height = 64, train_views = 30, test_views = 10;
        int oracle_samples = 1024;
        double lambda_min = 380.0, lambda_max = 780.0;
        double radius = 3.2, fov = 50.0, near_t = 1.6, far_t = 4.8;
        std::uint64_t seed = 0;
    } g;
    gen->add_option("--out", g.out)->required();
    gen->add_option("--scene", g.scene);
    gen->add_option("--name", g.name);
    gen->add_option("--snum", g.snum);
    gen->add_option("--explicit-centers", g.explicit_centers,
                    "Comma-separated band centers (explicit partition mode)");
    gen->add_option("--lambda-min", g.lambda_min);
    gen->add_option("--lambda-max", g.lambda_max);
    gen->add_option("--width", g.width);
    gen->add_option("--height", g.height);
    gen->add_option("--train-views", g.train_views);
    gen->add_option("--test-views", g.test_views);
    gen->add_option("--illuminant", g.illuminant);
    gen->add_option("--illuminant-mode", g.mode)
        ->check(CLI::IsMember({"baked", "fusion"}));
    gen->add_option("--oracle-samples", g.oracle_samples);
    gen->add_option("--cam-radius", g.radius);
    gen->add_option("--fov", g.fov);
    gen->add_option("--near", g.near_t);
    gen->add_option("--far", g.far_t);
    gen->add_option("--seed", g.seed);

    // ---- train-field ---------------------------------------------------
    auto* tf = app.add_subcommand("train-field", "Train the coarse+fine SpectralMLP");
    struct {
        std::string dataset, out, resume;
        int iterations = 2000, batch_rays = 512, ncoarse = 64, nfine = 128;
        int depth = 8, width = 256, skip = 4, bottleneck = 128;
        int freq_pos = 10, freq_dir = 4;
        int log_interval = 100, ckpt_interval = 0, ws_interval = 100;
        double lr = 5e-4, sigma_noise = 0.0;
        std::uint64_t seed = 0;
    } f;
    tf->add_option("--dataset", f.dataset)->required();
    tf->add_option("--out", f.out)->required();
    tf->add_option("--resume", f.resume);
    tf->add_option("--iterations", f.iterations);
    tf->add_option("--batch-rays", f.batch_rays);
    tf->add_option("--ncoarse", f.ncoarse);
    tf->add_option("--nfine", f.nfine);
    tf->add_option("--depth", f.depth);
    tf->add_option("--mlp-width", f.width);
    tf->add_option("--skip-layer", f.skip);
    tf->add_option("--bottleneck", f.bottleneck);
    tf->add_option("--freq-pos", f.freq_pos);
    tf->add_option("--freq-dir", f.freq_dir);
    tf->add_option("--lr", f.lr);
    tf->add_option("--sigma-noise", f.sigma_noise);
    tf->add_option("--ws-interval", f.ws_interval);
    tf->add_option("--log-interval", f.log_interval);
    tf->add_option("--ckpt-interval", f.ckpt_interval);
    tf->add_option("--seed", f.seed);

    // ---- render-spectra --------------------------------------------------
    auto* rs = app.add_subcommand("render-spectra", "Render fine-model spectrum map stacks");
    struct {
        std::string checkpoint, dataset, out, split = "test";
        int ncoarse = 0, nfine = 0, workers = 1;
        std::uint64_t seed = 0;
    } r;
    rs->add_option("--checkpoint", r.checkpoint)->required();
    rs->add_option("--dataset", r.dataset)->required();
    rs->add_option("--out", r.out)->required();
    rs->add_option("--split", r.split)->check(CLI::IsMember({"train", "test", "all"}));
    rs->add_option("--ncoarse", r.ncoarse, "Override checkpoint sample count");
    rs->add_option("--nfine", r.nfine);
    rs->add_option("--workers", r.workers);
    rs->add_option("--seed", r.seed);

    // ---- fit-weights ----------------------------------------------------
    auto* fw = app.add_subcommand("fit-weights",
                                  "Least-squares per-band fusion weights from a dataset");
    struct {
        std::string dataset, out, split = "train", reference;
        bool per_channel = false;
    } q;
    fw->add_option("--dataset", q.dataset)->required();
    fw->add_option("--out", q.out)->required();
    fw->add_option("--split", q.split);
    fw->add_option("--reference", q.reference,
                   "Illuminant to correlate the fitted weights against");
    fw->add_flag("--per-channel", q.per_channel);

    // ---- train-fusion -----------------------------------------------------
    auto* tu = app.add_subcommand("train-fusion", "Train the SAUNet fusion network");
    struct {
        std::string dataset, stacks, out, field_checkpoint, sa_placement = "1,2";
        int iterations = 2000, base_channels = 16, se_reduction = 4, log_interval = 100;
        double lr = 1e-3, lambda_rgb = 1.1;
        bool joint = false;
        std::uint64_t seed = 0;
    } u;
    tu->add_option("--dataset", u.dataset)->required();
    tu->add_option("--stacks", u.stacks,
                   "Directory of rendered stacks (default: dataset ground-truth maps)");
    tu->add_option("--out", u.out)->required();
    tu->add_option("--iterations", u.iterations);
    tu->add_option("--lr", u.lr);
    tu->add_option("--lambda-rgb", u.lambda_rgb);
    tu->add_option("--base-channels", u.base_channels);
    tu->add_option("--sa-placement", u.sa_placement,
                   "Comma-separated encoder indices (1..3) or 'none'");
    tu->add_option("--se-reduction", u.se_reduction);
    tu->add_flag("--joint", u.joint, "Backpropagate the RGB loss into the field as well");
    tu->add_option("--field-checkpoint", u.field_checkpoint,
                   "Field checkpoint for joint mode");
    tu->add_option("--log-interval", u.log_interval);
    tu->add_option("--seed", u.seed);

    // ---- eval --------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "PSNR/SSIM/L1 metrics CSV");
    struct {
        std::string pred, dataset, out, split = "test", scene;
        bool l1_scale = false;
    } e;
    ev->add_option("--pred", e.pred)->required();
    ev->add_option("--dataset", e.dataset)->required();
    ev->add_option("--out", e.out)->required();
    ev->add_option("--split", e.split);
    ev->add_option("--scene", e.scene);
    ev->add_flag("--l1-scale", e.l1_scale, "Report L1 x 1e3 (comparison-table convention)");

    // ---- gradcheck -----------------------------------------------------------
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
    double gc_tol = 1e-4;
    gc->add_option("--tol", gc_tol);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;  // help/version exit 0, flag errors are validation
    }

    if (gen->parsed()) {
        SynthesisConfig cfg;
        cfg.scene = builtin_scene(g.scene);
        cfg.name = g.name.empty() ? g.scene : g.name;
        cfg.width = g.width;
        cfg.height = g.height;
        cfg.train_views = g.train_views;
        cfg.test_views = g.test_views;
        cfg.camera_radius = g.radius;
        cfg.fov_deg = g.fov;
        cfg.t_near = g.near_t;
        cfg.t_far = g.far_t;
        cfg.partition = g.explicit_centers.empty()
                            ? make_partition(g.snum, g.lambda_min, g.lambda_max)
                            : make_explicit_partition(parse_centers(g.explicit_centers));
        cfg.illuminant = g.illuminant;
        cfg.illuminant_mode = g.mode;
        cfg.oracle_samples = g.oracle_samples;
        cfg.seed = g.seed;

        ConfigEcho echo;
        echo.add("command", "gen-synthetic");
        echo.add("scene", g.scene);
        echo.add("snum", cfg.partition.s_num);
        echo.add("width", cfg.width);
        echo.add("height", cfg.height);
        echo.add("train_views", cfg.train_views);
        echo.add("test_views", cfg.test_views);
        echo.add("illuminant", cfg.illuminant);
        echo.add("illuminant_mode", cfg.illuminant_mode);
        echo.add("oracle_samples", cfg.oracle_samples);
        echo.add("seed", cfg.seed);
        echo.emit(g.out);

        SceneManifest m = gen_synthetic(cfg, g.out);
        std::cout << "wrote " << m.views.size() << " views to " << g.out << "\n";
        return 0;
    }

    if (tf->parsed()) {
        Dataset dataset = load_dataset(f.dataset);
        FieldTrainConfig cfg;
        cfg.mlp.depth = f.depth;
        cfg.mlp.width = f.width;
        cfg.mlp.skip_layer = f.skip;
        cfg.mlp.bottleneck_width = f.bottleneck;
        cfg.mlp.s_num = dataset.manifest.partition.s_num;
        cfg.mlp.encoding.num_freqs_position = f.freq_pos;
        cfg.mlp.encoding.num_freqs_direction = f.freq_dir;
        cfg.n_coarse = f.ncoarse;
        cfg.n_fine = f.nfine;
        cfg.iterations = f.iterations;
        cfg.batch_rays = f.batch_rays;
        cfg.lr = f.lr;
        cfg.sigma_noise_std = f.sigma_noise;
        cfg.loss.ws_update_interval = f.ws_interval;
        cfg.seed = f.seed;
        cfg.log_interval = f.log_interval;
        cfg.checkpoint_interval = f.ckpt_interval;
        cfg.out_dir = f.out;

        ConfigEcho echo;
        echo.add("command", "train-field");
        echo.add("dataset", f.dataset);
        echo.add("snum", cfg.mlp.s_num);
        echo.add("depth", cfg.mlp.depth);
        echo.add("mlp_width", cfg.mlp.width);
        echo.add("ncoarse", cfg.n_coarse);
        echo.add("nfine", cfg.n_fine);
        echo.add("iterations", cfg.iterations);
        echo.add("batch_rays", cfg.batch_rays);
        echo.add("lr", cfg.lr);
        echo.add("sigma_noise", cfg.sigma_noise_std);
        echo.add("ws_interval", cfg.loss.ws_update_interval);
        echo.add("seed", cfg.seed);
        echo.emit(f.out);

        FieldTrainState state = make_field_train_state(cfg);
        if (!f.resume.empty()) {
            auto [saved_cfg, saved_state] = load_field_checkpoint(f.resume);
            state = std::move(saved_state);
            std::cout << "resumed from " << f.resume << " at step " << state.step << "\n";
        }
        std::ofstream log_file(fs::path(f.out) / "train_log.txt");
        train_field(dataset, cfg, state, &log_file);
        std::cout << "trained to step " << state.step << "; checkpoint at " << f.out
                  << "/field.spnf\n";
        return 0;
    }

    if (rs->parsed()) {
        Dataset dataset = load_dataset(r.dataset);
        auto [cfg, state] = load_field_checkpoint(r.checkpoint);
        if (dataset.manifest.partition.s_num != cfg.mlp.s_num)
            throw BadPartition("render-spectra: checkpoint s_num does not match dataset");
        RenderConfig rc;
        rc.n_coarse = r.ncoarse > 0 ? r.ncoarse : cfg.n_coarse;
        rc.n_fine = r.nfine > 0 ? r.nfine : cfg.n_fine;
        rc.seed = r.seed;
        rc.workers = r.workers;

        ConfigEcho echo;
        echo.add("command", "render-spectra");
        echo.add("checkpoint", r.checkpoint);
        echo.add("split", r.split);
        echo.add("ncoarse", rc.n_coarse);
        echo.add("nfine", rc.n_fine);
        echo.add("workers", rc.workers);
        echo.add("seed", rc.seed);
        echo.emit(r.out);

        FieldFn coarse = field_fn(state.fields.coarse);
        FieldFn fine = field_fn(state.fields.fine);
        const auto& m = dataset.manifest;
        int rendered = 0;
        for (const ViewRecord& v : m.views) {
            if (r.split != "all" && v.split != r.split)
                continue;
            auto [stack_c, stack_f] = render_spectrum_maps(coarse, fine, m.partition.s_num,
                                                           v.camera, rc);
            stack_f.centers_nm = m.partition.centers_nm;
            for (int k = 0; k < m.partition.s_num; ++k) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "_b%02d.sfm", k);
                sfm_write((fs::path(r.out) / (view_stem(v.index) + buf)).string(),
                          sfm_from_band(stack_f, k));
            }
            RgbImage rgb = m.illuminant_mode == "fusion"
                               ? linear_fuse(stack_f, m.fusion_weights, 1.0)
                               : compose_rgb(stack_f, m.kappa);
            sfm_write((fs::path(r.out) / (view_stem(v.index) + "_rgb.sfm")).string(),
                      sfm_from_rgb(rgb));
            write_ppm((fs::path(r.out) / (view_stem(v.index) + "_rgb.ppm")).string(), rgb);
            ++rendered;
        }
        std::cout << "rendered " << rendered << " views to " << r.out << "\n";
        return 0;
    }

    if (fw->parsed()) {
        Dataset dataset = load_dataset(q.dataset);
        std::vector<SpectrumStack> stacks;
        std::vector<RgbImage> targets;
        for (int v : dataset.views_with_split(q.split)) {
            stacks.push_back(dataset.load_stack(v));
            targets.push_back(dataset.load_rgb(v));
        }
        ConfigEcho echo;
        echo.add("command", "fit-weights");
        echo.add("dataset", q.dataset);
        echo.add("split", q.split);
        echo.add("views", stacks.size());
        echo.add("per_channel", q.per_channel ? 1 : 0);
        echo.emit(fs::path(q.out).parent_path().string());

        LinearFusionWeights weights = fit_weights_least_squares(stacks, targets,
                                                                q.per_channel);
        save_linear_weights(q.out, dataset.manifest.partition.centers_nm, weights.w);
        std::cout << "residual_rms " << weights.residual_rms << "\n";
        if (!q.reference.empty()) {
            const Spd ref = resolve_illuminant(q.reference);
            const auto& centers = dataset.manifest.partition.centers_nm;
            const int s_num = int(centers.size());
            // Interior bands only; the edge bands carry almost no energy.
            double sw = 0, sr = 0, sww = 0, srr = 0, swr = 0;
            int n = 0;
            for (int k = 1; k + 1 < s_num; ++k) {
                const double a = weights.w[k];
                const double b = ref.sample(centers[k]);
                sw += a; sr += b; sww += a * a; srr += b * b; swr += a * b;
                ++n;
            }
            const double cov = swr - sw * sr / n;
            const double var_w = sww - sw * sw / n;
            const double var_r = srr - sr * sr / n;
            const double pearson = cov / std::sqrt(var_w * var_r);
            std::cout << "pearson_interior " << pearson << "\n";
        }
        return 0;
    }

    if (tu->parsed()) {
        Dataset dataset = load_dataset(u.dataset);
        const int s_num = dataset.manifest.partition.s_num;
        SaUnetConfig ucfg;
        ucfg.s_num = s_num;
        ucfg.base_channels = u.base_channels;
        ucfg.se_reduction = u.se_reduction;
        ucfg.sa_placement = parse_placement(u.sa_placement);

        ConfigEcho echo;
        echo.add("command", "train-fusion");
        echo.add("dataset", u.dataset);
        echo.add("stacks", u.stacks.empty() ? std::string("dataset") : u.stacks);
        echo.add("iterations", u.iterations);
        echo.add("lr", u.lr);
        echo.add("lambda_rgb", u.lambda_rgb);
        echo.add("base_channels", ucfg.base_channels);
        echo.add("sa_placement", u.sa_placement);
        echo.add("joint", u.joint ? 1 : 0);
        echo.add("seed", u.seed);
        echo.emit(u.out);

        std::ofstream log_file(fs::path(u.out) / "train_log.txt");
        if (u.joint) {
            JointTrainConfig jcfg;
            jcfg.fusion.unet = ucfg;
            jcfg.fusion.lr = u.lr;
            jcfg.fusion.loss.lambda_rgb = u.lambda_rgb;
            jcfg.fusion.seed = u.seed;
            jcfg.field.mlp.s_num = s_num;
            jcfg.field.seed = u.seed;
            jcfg.iterations = u.iterations;
            FieldTrainState state = make_field_train_state(jcfg.field);
            if (!u.field_checkpoint.empty()) {
                auto [fcfg, fstate] = load_field_checkpoint(u.field_checkpoint);
                jcfg.field = fcfg;
                state = std::move(fstate);
            }
            jcfg.field.log_interval = u.log_interval;
            SaUnet unet(ucfg, splitmix64(u.seed ^ 0x756e6574ull));
            JointLossReport rep = train_joint(dataset, jcfg, state, unet, &log_file);
            save_fusion_checkpoint(u.out + "/fusion.spnf", ucfg, unet);
            save_field_checkpoint(u.out + "/field.spnf", jcfg.field, state);
            std::cout << "joint final: spectral " << rep.spectral << " rgb " << rep.rgb
                      << " total " << rep.total << "\n";
            return 0;
        }

        std::vector<SpectrumStack> stacks;
        std::vector<RgbImage> targets;
        for (int v : dataset.views_with_split("train")) {
            targets.push_back(dataset.load_rgb(v));
            if (u.stacks.empty()) {
                stacks.push_back(dataset.load_stack(v));
            } else {
                SpectrumStack st(dataset.manifest.width, dataset.manifest.height, s_num);
                st.centers_nm = dataset.manifest.partition.centers_nm;
                for (int k = 0; k < s_num; ++k) {
                    char buf[32];
                    std::snprintf(buf, sizeof buf, "_b%02d.sfm", k);
                    SpectralFloatMap map = sfm_read(
                        (fs::path(u.stacks) / (view_stem(v) + buf)).string());
                    for (int y = 0; y < st.height; ++y)
                        for (int x = 0; x < st.width; ++x)
                            for (int c = 0; c < 3; ++c)
                                st.at(k, x, y, c) = map.at(x, y, c);
                }
                stacks.push_back(std::move(st));
            }
        }
        FusionTrainConfig cfg;
        cfg.unet = ucfg;
        cfg.iterations = u.iterations;
        cfg.lr = u.lr;
        cfg.loss.lambda_rgb = u.lambda_rgb;
        cfg.seed = u.seed;
        cfg.log_interval = u.log_interval;
        SaUnet unet(ucfg, splitmix64(u.seed ^ 0x756e6574ull));
        const double final_loss = train_fusion(stacks, targets, cfg, unet, &log_file);
        save_fusion_checkpoint(u.out + "/fusion.spnf", ucfg, unet);
        std::cout << "final rgb_loss " << final_loss << "\n";
        return 0;
    }

    if (ev->parsed()) {
        Dataset dataset = load_dataset(e.dataset);
        const std::string scene = e.scene.empty() ? dataset.manifest.name : e.scene;
        std::vector<MetricsRow> rows;
        for (int v : dataset.views_with_split(e.split)) {
            const std::string pred_path =
                (fs::path(e.pred) / (view_stem(v) + "_rgb.sfm")).string();
            RgbImage pred = rgb_from_sfm(sfm_read(pred_path));
            RgbImage gt = dataset.load_rgb(v);
            rows.push_back(evaluate_pair(scene, v, pred, gt, e.l1_scale));
        }
        if (rows.empty())
            throw InvalidArgument("eval: no views in split '" + e.split + "'");
        write_metrics_csv(e.out, rows);
        double mean_psnr = 0, mean_ssim = 0, mean_l1 = 0;
        for (const MetricsRow& row : rows) {
            mean_psnr += row.psnr;
            mean_ssim += row.ssim;
            mean_l1 += row.l1;
        }
        const double n = double(rows.size());
        std::cout << "views " << rows.size() << " mean psnr " << mean_psnr / n << " ssim "
                  << mean_ssim / n << " l1 " << mean_l1 / n << "\n";
        return 0;
    }

    if (gc->parsed()) {
        const auto reports = run_gradient_suite();
        bool ok = true;
        for (const auto& [name, rep] : reports) {
            const bool pass = rep.passed(gc_tol);
            ok = ok && pass;
            std::cout << name << ": max_rel_err " << rep.max_rel_err << " checked "
                      << rep.checked << " kinks " << rep.kinks << " -> "
                      << (pass ? "PASS" : "FAIL") << "\n";
        }
        if (!ok)
            throw NumericError("gradcheck: finite-difference suite failed at tol " +
                               std::to_string(gc_tol));
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const NumericError& err) {
        std::cerr << "numeric failure: " << err.what() << "\n";
        return 2;
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}

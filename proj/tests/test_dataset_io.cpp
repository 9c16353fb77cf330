#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "spnf/dataset_io.hpp"

using namespace spnf;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const char* name) {
    fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

AnalyticScene two_blob_scene() {
    AnalyticScene scene;
    scene.blobs = {
        {{0.3, 0.0, 0.0}, 0.35, 8.0, {600.0, 50.0, 0.9}},
        {{-0.3, 0.1, 0.1}, 0.3, 7.0, {470.0, 45.0, 0.8}},
    };
    return scene;
}

SynthesisConfig tiny_config(const std::string& mode = "baked") {
    SynthesisConfig cfg;
    cfg.scene = two_blob_scene();
    cfg.name = "tiny";
    cfg.width = 8;
    cfg.height = 8;
    cfg.train_views = 3;
    cfg.test_views = 2;
    cfg.partition = make_partition(4, 380.0, 780.0);
    cfg.illuminant_mode = mode;
    cfg.oracle_samples = 128;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("sfm container") {
    const std::string dir = temp_dir("spnf_sfm");
    SpectralFloatMap map;
    map.width = 3;
    map.height = 2;
    map.channels = 3;
    map.band_center_nm = 530.0f;
    map.data.resize(18);
    for (std::size_t i = 0; i < map.data.size(); ++i)
        map.data[i] = float(i) * 0.125f - 0.5f;

    SUBCASE("write-read round trip is bitwise exact") {
        sfm_write(dir + "/a.sfm", map);
        SpectralFloatMap back = sfm_read(dir + "/a.sfm");
        CHECK(back.width == 3);
        CHECK(back.height == 2);
        CHECK(back.channels == 3);
        CHECK(back.band_center_nm == 530.0f);
        CHECK(back.data == map.data);
        sfm_write(dir + "/b.sfm", back);
        CHECK(read_bytes(dir + "/a.sfm") == read_bytes(dir + "/b.sfm"));
    }
    SUBCASE("bad magic") {
        std::ofstream out(dir + "/bad.sfm", std::ios::binary);
        out << "NOPE" << std::string(32, '\0');
        out.close();
        CHECK_THROWS_AS(sfm_read(dir + "/bad.sfm"), BadMagic);
    }
    SUBCASE("declared channels exceed the payload") {
        sfm_write(dir + "/c.sfm", map);
        std::string bytes = read_bytes(dir + "/c.sfm");
        bytes.resize(bytes.size() - 4 * 6);  // drop one plane
        // Raise the channel count without supplying the plane: header says 3,
        // payload holds 2.
        std::ofstream out(dir + "/trunc.sfm", std::ios::binary);
        out.write(bytes.data(), std::streamsize(bytes.size()));
        out.close();
        CHECK_THROWS_AS(sfm_read(dir + "/trunc.sfm"), TruncatedFile);
    }
    SUBCASE("trailing bytes are rejected") {
        sfm_write(dir + "/d.sfm", map);
        std::ofstream out(dir + "/d.sfm", std::ios::binary | std::ios::app);
        out << "xx";
        out.close();
        CHECK_THROWS_AS(sfm_read(dir + "/d.sfm"), DimMismatch);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(sfm_read(dir + "/nothere.sfm"), MissingFile);
    }
}

TEST_CASE("oracle_render") {
    BandPartition part = make_partition(2, 380.0, 780.0);
    Camera cam;
    cam.width = 3;
    cam.height = 3;
    cam.fx = cam.fy = 3.0;
    cam.cx = cam.cy = 1.5;
    cam.t_near = 1.0;
    cam.t_far = 2.0;

    SUBCASE("empty scene renders black") {
        AnalyticScene scene;
        SpectrumStack stack = oracle_render(scene, cam, part, 64);
        for (double v : stack.data)
            CHECK(v == 0.0);
    }
    SUBCASE("constant-density slab matches the closed form") {
        // A blob with an enormous radius is constant over the view volume.
        AnalyticScene scene;
        scene.blobs = {{{0.0, 0.0, 0.0}, 1e7, 2.0, {580.0, 1e7, 1.0}}};
        SpectrumStack stack = oracle_render(scene, cam, part, 2048);
        const double expect = 1.0 - std::exp(-2.0);
        // Central pixel, unit depth along the axis.
        CHECK(std::abs(stack.at(0, 1, 1, 0) - expect) < 1e-4);
    }
    SUBCASE("self-convergence plateau") {
        AnalyticScene scene = two_blob_scene();
        Camera view = cam;
        view.pose = look_at({0.0, 0.3, 2.2}, {0, 0, 0}, {0, 1, 0});
        view.t_near = 1.0;
        view.t_far = 3.6;
        SpectrumStack a = oracle_render(scene, view, part, 2048);
        SpectrumStack b = oracle_render(scene, view, part, 4096);
        double max_dev = 0.0;
        for (std::size_t i = 0; i < a.data.size(); ++i)
            max_dev = std::max(max_dev, std::abs(a.data[i] - b.data[i]));
        CHECK(max_dev < 1e-5);
    }
}

TEST_CASE("gen_synthetic and load_dataset") {
    const std::string dir = temp_dir("spnf_ds");
    SynthesisConfig cfg = tiny_config();
    SceneManifest m = gen_synthetic(cfg, dir);

    SUBCASE("view layout and split") {
        CHECK(m.views.size() == 5);
        int train = 0, test = 0;
        for (const auto& v : m.views) {
            (v.split == "train" ? train : test) += 1;
            const Vec3 eye{v.camera.pose(0, 3), v.camera.pose(1, 3), v.camera.pose(2, 3)};
            CHECK(eye.norm() == doctest::Approx(cfg.camera_radius).epsilon(1e-9));
        }
        CHECK(train == 3);
        CHECK(test == 2);
    }
    SUBCASE("same seed reproduces identical bytes") {
        const std::string dir2 = temp_dir("spnf_ds2");
        gen_synthetic(cfg, dir2);
        for (const auto& entry : fs::recursive_directory_iterator(dir)) {
            if (!entry.is_regular_file())
                continue;
            const std::string rel = fs::relative(entry.path(), dir).string();
            CHECK(read_bytes(entry.path().string()) ==
                  read_bytes((fs::path(dir2) / rel).string()));
        }
    }
    SUBCASE("stored RGB is reproducible from the stored band maps") {
        Dataset ds = load_dataset(dir + "/manifest.txt");
        CHECK(dataset_self_consistency(ds) < 1e-6);
    }
    SUBCASE("manifest round-trips kappa and centers exactly") {
        Dataset ds = load_dataset(dir + "/manifest.txt");
        CHECK(ds.manifest.kappa == m.kappa);
        CHECK(ds.manifest.partition.centers_nm == m.partition.centers_nm);
        CHECK(ds.manifest.partition.delta_lambda_nm == m.partition.delta_lambda_nm);
        CHECK(ds.manifest.width == 8);
        CHECK(ds.manifest.views.size() == 5);
        // Re-serialize: identical file
        write_manifest(dir + "/manifest2.txt", ds.manifest);
        CHECK(read_bytes(dir + "/manifest.txt") == read_bytes(dir + "/manifest2.txt"));
    }
    SUBCASE("fusion mode records per-band weights and stays self-consistent") {
        const std::string fdir = temp_dir("spnf_ds_fusion");
        SceneManifest fm = gen_synthetic(tiny_config("fusion"), fdir);
        CHECK(fm.fusion_weights.size() == 4);
        Dataset ds = load_dataset(fdir + "/manifest.txt");
        CHECK(ds.manifest.fusion_weights == fm.fusion_weights);
        CHECK(dataset_self_consistency(ds) < 1e-6);
    }
    SUBCASE("missing band file is reported with its path") {
        const std::string broken = temp_dir("spnf_ds_broken");
        gen_synthetic(cfg, broken);
        fs::remove(fs::path(broken) / "maps/v001_b02.sfm");
        try {
            load_dataset(broken + "/manifest.txt");
            FAIL("expected MissingFile");
        } catch (const MissingFile& err) {
            CHECK(std::string(err.what()).find("v001_b02.sfm") != std::string::npos);
        }
    }
    SUBCASE("band count mismatch raises BadPartition") {
        const std::string broken = temp_dir("spnf_ds_badsnum");
        gen_synthetic(cfg, broken);
        // Rewrite the manifest with snum 5 while the views still carry 4 maps.
        std::ifstream in(broken + "/manifest.txt");
        std::string text((std::istreambuf_iterator<char>(in)), {});
        in.close();
        auto pos = text.find("snum 4");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 6, "snum 5");
        std::ofstream out(broken + "/manifest.txt");
        out << text;
        out.close();
        CHECK_THROWS_AS(load_dataset(broken + "/manifest.txt"), BadPartition);
    }
    SUBCASE("stack and rgb loaders validate dimensions") {
        Dataset ds = load_dataset(dir + "/manifest.txt");
        SpectrumStack stack = ds.load_stack(0);
        CHECK(stack.bands == 4);
        CHECK(stack.width == 8);
        RgbImage rgb = ds.load_rgb(0);
        CHECK(rgb.width == 8);
        // Values stay inside the storable range.
        for (double v : stack.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

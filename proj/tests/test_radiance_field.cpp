#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spnf/gradcheck.hpp"
#include "spnf/radiance_field.hpp"
#include "spnf/random.hpp"

using namespace spnf;

namespace {

SpectralMlpConfig small_config() {
    SpectralMlpConfig cfg;
    cfg.depth = 3;
    cfg.width = 12;
    cfg.skip_layer = 1;
    cfg.bottleneck_width = 8;
    cfg.s_num = 3;
    cfg.encoding.num_freqs_position = 2;
    cfg.encoding.num_freqs_direction = 1;
    return cfg;
}

}  // namespace

TEST_CASE("positional encoding") {
    SUBCASE("zero vector") {
        auto e = encode(Vec3{0, 0, 0}, 2, true);
        REQUIRE(e.size() == 3 * (1 + 2 * 2));
        for (int i = 0; i < 3; ++i)
            CHECK(e[i] == 0.0);  // identity part
        // sin blocks zero, cos blocks one
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 3; ++i) {
                CHECK(e[3 + 6 * k + i] == 0.0);
                CHECK(e[3 + 6 * k + 3 + i] == 1.0);
            }
    }
    SUBCASE("unit x at the base frequency") {
        auto e = encode(Vec3{1, 0, 0}, 1, true);
        REQUIRE(e.size() == 9);
        CHECK(e[0] == 1.0);
        CHECK(std::abs(e[3]) < 1e-12);       // sin(pi)
        CHECK(e[6] == doctest::Approx(-1.0)); // cos(pi)
    }
    SUBCASE("output width formula") {
        CHECK(encode(Vec3{0.3, -0.2, 0.9}, 10, true).size() == 63);
        EncodingConfig cfg;
        CHECK(cfg.position_width() == 63);
        CHECK(cfg.direction_width() == 27);
    }
}

TEST_CASE("field evaluation") {
    SpectralMlpConfig cfg = small_config();
    SpectralField field(cfg, 99);

    std::vector<Vec3> pos = {{0.1, 0.2, 0.3}, {-0.5, 0.0, 0.25}};
    std::vector<Vec3> dir = {Vec3{1, 0, 0}, Vec3{0.6, 0.8, 0.0}};

    SUBCASE("radiance stays inside (0,1) and shapes match the contract") {
        auto samples = field.eval(pos, dir);
        REQUIRE(samples.size() == 2);
        for (const auto& s : samples) {
            REQUIRE(s.radiance.size() == std::size_t(cfg.s_num));
            CHECK(s.sigma >= 0.0);
            for (const auto& band : s.radiance)
                for (double v : band) {
                    CHECK(v > 0.0);
                    CHECK(v < 1.0);
                }
        }
    }
    SUBCASE("zeroed density head gives zero sigma") {
        std::fill(field.params().get("sigma.w").values().begin(),
                  field.params().get("sigma.w").values().end(), 0.0);
        auto samples = field.eval(pos, dir);
        CHECK(samples[0].sigma == 0.0);
        CHECK(samples[1].sigma == 0.0);
    }
    SUBCASE("sigma does not depend on the viewing direction") {
        auto a = field.eval({pos[0]}, {Vec3{1, 0, 0}});
        auto b = field.eval({pos[0]}, {Vec3{0, 0, 1}});
        CHECK(a[0].sigma == b[0].sigma);
        CHECK(a[0].radiance != b[0].radiance);  // radiance is view-conditioned
    }
    SUBCASE("directions must be unit length") {
        CHECK_THROWS_AS(field.eval({pos[0]}, {Vec3{1.0, 0.5, 0.0}}), NotNormalized);
    }
}

TEST_CASE("make_field") {
    SpectralMlpConfig cfg = small_config();
    SUBCASE("deterministic initialization") {
        FieldPair a = make_field(cfg, 7);
        FieldPair b = make_field(cfg, 7);
        for (std::size_t i = 0; i < a.coarse.params().entries().size(); ++i)
            CHECK(a.coarse.params().entries()[i].tensor.values() ==
                  b.coarse.params().entries()[i].tensor.values());
        // coarse and fine differ
        bool any_diff = false;
        for (std::size_t i = 0; i < a.coarse.params().entries().size(); ++i)
            if (a.coarse.params().entries()[i].tensor.values() !=
                a.fine.params().entries()[i].tensor.values())
                any_diff = true;
        CHECK(any_diff);
    }
    SUBCASE("parameter count matches the closed form") {
        SpectralMlpConfig paper;
        paper.depth = 8;
        paper.width = 256;
        paper.skip_layer = 4;
        paper.bottleneck_width = 128;
        paper.s_num = 11;
        SpectralField field(paper, 1);
        CHECK(field.params().total_params() == spectral_mlp_param_count(paper));

        // Hand count: trunk 63->256 plus seven 256-wide layers (skip layer
        // consumes 256+63), sigma 256->1, feature 256->256,
        // bottleneck (256+27)->128, head 128->33.
        std::size_t expect = 0;
        auto dense_n = [](std::size_t i, std::size_t o) { return i * o + o; };
        expect += dense_n(63, 256);
        for (int i = 1; i < 8; ++i)
            expect += dense_n(i == 4 ? 256 + 63 : 256, 256);
        expect += dense_n(256, 1);
        expect += dense_n(256, 256);
        expect += dense_n(256 + 27, 128);
        expect += dense_n(128, 33);
        CHECK(field.params().total_params() == expect);
    }
    SUBCASE("band count only changes the head") {
        SpectralMlpConfig c4 = small_config();
        SpectralMlpConfig c7 = small_config();
        c7.s_num = 7;
        SpectralField f4(c4, 55);
        SpectralField f7(c7, 55);
        CHECK(f4.params().get("trunk.0.w").values() == f7.params().get("trunk.0.w").values());
        CHECK(f4.params().get("sigma.w").values() == f7.params().get("sigma.w").values());
        CHECK(f4.params().get("head.w").shape()[1] == 3 * 3);
        CHECK(f7.params().get("head.w").shape()[1] == 3 * 7);

        std::vector<Vec3> pos = {{0.2, -0.1, 0.4}};
        std::vector<Vec3> dir = {Vec3{0, 0, 1}};
        CHECK(f4.eval(pos, dir)[0].sigma == f7.eval(pos, dir)[0].sigma);
    }
}

TEST_CASE("gradient flows through the field") {
    SpectralMlpConfig cfg = small_config();
    SpectralField field(cfg, 3);
    SplitMixSequence seq(8);
    const std::size_t n = 3;
    std::vector<double> pe(n * cfg.encoding.position_width());
    std::vector<double> de(n * cfg.encoding.direction_width());
    for (double& v : pe)
        v = seq.next_symmetric(1.0);
    for (double& v : de)
        v = seq.next_symmetric(1.0);
    nn::Tensor xenc = nn::Tensor::from_data(
        {n, std::size_t(cfg.encoding.position_width())}, pe, true);
    nn::Tensor denc = nn::Tensor::from_data(
        {n, std::size_t(cfg.encoding.direction_width())}, de);
    std::vector<double> tr(n * 3 * cfg.s_num, 0.5);
    nn::Tensor target = nn::Tensor::from_data({n, std::size_t(3 * cfg.s_num)}, tr);
    auto f = [&](const nn::Tensor&) {
        auto out = field.forward(xenc, denc);
        return nn::add(nn::mse(out.radiance, target), nn::sum_all(out.sigma));
    };
    CHECK(nn::finite_diff_check(f, xenc).passed(1e-4));
    CHECK(nn::finite_diff_check(f, field.params().get("trunk.1.w")).passed(1e-4));
    CHECK(nn::finite_diff_check(f, field.params().get("bottleneck.w")).passed(1e-4));
}

TEST_CASE("field checkpoint round trip") {
    SpectralMlpConfig cfg = small_config();
    SpectralField a(cfg, 21);
    std::vector<nn::TensorRecord> records;
    a.append_records("f/", records, true);
    SpectralField b(cfg, 22);
    b.load_records("f/", records, true);
    for (std::size_t i = 0; i < a.params().entries().size(); ++i)
        CHECK(a.params().entries()[i].tensor.values() ==
              b.params().entries()[i].tensor.values());
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "spnf/checkpoint.hpp"
#include "spnf/gradcheck.hpp"
#include "spnf/optim.hpp"
#include "spnf/ops.hpp"
#include "spnf/random.hpp"

using namespace spnf;
using namespace spnf::nn;

namespace {

Tensor rand_tensor(SplitMixSequence& seq, Shape shape, double lo, double hi,
                   bool requires_grad = false) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v)
        x = lo + (hi - lo) * seq.next_unit();
    return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("dense") {
    SUBCASE("identity weights pass the input through") {
        Tensor x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
        std::vector<double> eye(9, 0.0);
        eye[0] = eye[4] = eye[8] = 1.0;
        Tensor w = Tensor::from_data({3, 3}, eye);
        Tensor b = Tensor::zeros({3});
        Tensor y = dense(x, w, b);
        for (std::size_t i = 0; i < 6; ++i)
            CHECK(y.data()[i] == x.data()[i]);
    }
    SUBCASE("hand dot product") {
        Tensor x = Tensor::from_data({1, 2}, {1.0, 2.0});
        Tensor w = Tensor::from_data({2, 1}, {1.0, 1.0});
        Tensor b = Tensor::from_data({1}, {0.5});
        CHECK(dense(x, w, b).item() == doctest::Approx(3.5));
    }
    SUBCASE("shape mismatch") {
        Tensor x = Tensor::from_data({1, 2}, {1.0, 2.0});
        Tensor w = Tensor::from_data({3, 1}, {1.0, 1.0, 1.0});
        CHECK_THROWS_AS(dense(x, w, Tensor::zeros({1})), ShapeMismatch);
    }
    SUBCASE("gradient vs central differences") {
        SplitMixSequence seq(7);
        Tensor x = rand_tensor(seq, {3, 4}, -1, 1, true);
        Tensor w = rand_tensor(seq, {4, 2}, -1, 1, true);
        Tensor b = rand_tensor(seq, {2}, -1, 1, true);
        Tensor t = rand_tensor(seq, {3, 2}, 0, 1);
        auto f = [&](const Tensor&) { return mse(dense(x, w, b), t); };
        CHECK(finite_diff_check(f, w).passed(1e-4));
        CHECK(finite_diff_check(f, x).passed(1e-4));
        CHECK(finite_diff_check(f, b).passed(1e-4));
    }
}

TEST_CASE("conv2d") {
    SUBCASE("1x1 unit kernel is the identity") {
        SplitMixSequence seq(3);
        Tensor x = rand_tensor(seq, {1, 1, 3, 4}, -1, 1);
        Tensor k = Tensor::from_data({1, 1, 1, 1}, {1.0});
        Tensor y = conv2d(x, k, Tensor::zeros({1}));
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(y.data()[i] == x.data()[i]);
    }
    SUBCASE("all-ones 3x3 kernel on a one-hot input") {
        std::vector<double> img(9, 0.0);
        img[4] = 1.0;  // center pixel
        Tensor x = Tensor::from_data({1, 1, 3, 3}, img);
        Tensor k = Tensor::full({1, 1, 3, 3}, 1.0);
        Tensor y = conv2d(x, k, Tensor::zeros({1}), 1, 1);
        for (int i = 0; i < 9; ++i)
            CHECK(y.data()[i] == 1.0);  // every window covers the hot pixel
    }
    SUBCASE("output spatial size follows the floor formula") {
        Tensor x = Tensor::zeros({1, 1, 7, 5});
        Tensor k = Tensor::zeros({2, 1, 3, 3});
        Tensor y = conv2d(x, k, Tensor::zeros({2}), 2, 1);
        CHECK(y.shape() == Shape{1, 2, 4, 3});  // floor((7+2-3)/2)+1, floor((5+2-3)/2)+1
    }
    SUBCASE("kernel larger than padded input") {
        Tensor x = Tensor::zeros({1, 1, 2, 2});
        Tensor k = Tensor::zeros({1, 1, 3, 3});
        CHECK_THROWS_AS(conv2d(x, k, Tensor::zeros({1}), 1, 0), ShapeMismatch);
    }
    SUBCASE("gradient vs central differences") {
        SplitMixSequence seq(11);
        Tensor x = rand_tensor(seq, {2, 2, 4, 4}, -1, 1, true);
        Tensor k = rand_tensor(seq, {3, 2, 3, 3}, -0.5, 0.5, true);
        Tensor b = rand_tensor(seq, {3}, -0.2, 0.2, true);
        Tensor t = rand_tensor(seq, {2, 3, 4, 4}, 0, 1);
        auto f = [&](const Tensor&) { return mse(conv2d(x, k, b, 1, 1), t); };
        CHECK(finite_diff_check(f, x).passed(1e-4));
        CHECK(finite_diff_check(f, k).passed(1e-4));
        CHECK(finite_diff_check(f, b).passed(1e-4));
    }
}

TEST_CASE("activations") {
    Tensor x = Tensor::from_data({1, 4}, {-1.0, 0.0, 2.0, 0.5});
    Tensor r = relu(x);
    CHECK(r.data()[0] == 0.0);
    CHECK(r.data()[1] == 0.0);
    CHECK(r.data()[2] == 2.0);
    Tensor s = sigmoid(Tensor::from_data({1}, {0.0}));
    CHECK(s.item() == doctest::Approx(0.5));

    SplitMixSequence seq(5);
    Tensor xr = rand_tensor(seq, {2, 5}, 0.2, 1.5, true);  // keep clear of the kink
    Tensor t = rand_tensor(seq, {2, 5}, 0, 1);
    CHECK(finite_diff_check([&](const Tensor&) { return mse(relu(xr), t); }, xr)
              .passed(1e-4));
    CHECK(finite_diff_check([&](const Tensor&) { return mse(sigmoid(xr), t); }, xr)
              .passed(1e-4));
}

TEST_CASE("pooling and resampling") {
    SUBCASE("global_avg_pool of a constant map") {
        Tensor x = Tensor::full({2, 3, 4, 4}, 0.7);
        Tensor y = global_avg_pool(x);
        CHECK(y.shape() == Shape{2, 3});
        for (std::size_t i = 0; i < y.size(); ++i)
            CHECK(y.data()[i] == doctest::Approx(0.7));
    }
    SUBCASE("downsample2 takes 2x2 means") {
        Tensor x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
        Tensor y = downsample2(x);
        CHECK(y.size() == 1);
        CHECK(y.item() == doctest::Approx(2.5));
    }
    SUBCASE("downsample2 requires even dims") {
        CHECK_THROWS_AS(downsample2(Tensor::zeros({1, 1, 3, 4})), ShapeMismatch);
    }
    SUBCASE("upsample2 then downsample2 on a constant image is identity") {
        Tensor x = Tensor::full({1, 2, 3, 3}, 0.25);
        Tensor y = downsample2(upsample2(x));
        REQUIRE(y.shape() == x.shape());
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(y.data()[i] == doctest::Approx(0.25));
    }
    SUBCASE("concat splits gradients correctly") {
        SplitMixSequence seq(13);
        Tensor a = rand_tensor(seq, {2, 3}, -1, 1, true);
        Tensor b = rand_tensor(seq, {2, 2}, -1, 1, true);
        Tensor t = rand_tensor(seq, {2, 5}, 0, 1);
        auto f = [&](const Tensor&) { return mse(concat(a, b, 1), t); };
        CHECK(finite_diff_check(f, a).passed(1e-4));
        CHECK(finite_diff_check(f, b).passed(1e-4));
        CHECK_THROWS_AS(concat(a, Tensor::zeros({3, 2}), 1), ShapeMismatch);
    }
}

TEST_CASE("mse") {
    Tensor p = Tensor::from_data({2}, {1.0, 1.0});
    Tensor t = Tensor::from_data({2}, {0.0, 0.0});
    CHECK(mse(p, t).item() == doctest::Approx(1.0));
    CHECK(mse(t, t).item() == 0.0);
    CHECK_THROWS_AS(mse(p, Tensor::zeros({3})), ShapeMismatch);

    SplitMixSequence seq(17);
    Tensor pr = rand_tensor(seq, {4, 3}, -1, 1, true);
    Tensor tr = rand_tensor(seq, {4, 3}, 0, 1);
    CHECK(finite_diff_check([&](const Tensor&) { return mse(pr, tr); }, pr).passed(1e-4));
}

TEST_CASE("graph mechanics") {
    SUBCASE("backward accumulates additively into leaves") {
        Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
        Tensor loss = sum_all(mul(x, x));
        backward(loss);
        CHECK(x.grad()[0] == doctest::Approx(2.0));
        CHECK(x.grad()[1] == doctest::Approx(4.0));
        backward(loss);  // no reset: gradients double
        CHECK(x.grad()[0] == doctest::Approx(4.0));
        CHECK(x.grad()[1] == doctest::Approx(8.0));
    }
    SUBCASE("resetting and re-running backward reproduces gradients exactly") {
        SplitMixSequence seq(23);
        Tensor x = rand_tensor(seq, {3, 3}, -1, 1, true);
        Tensor w = rand_tensor(seq, {3, 2}, -1, 1, true);
        Tensor t = rand_tensor(seq, {3, 2}, 0, 1);
        Tensor loss = mse(relu(dense(x, w, Tensor::zeros({2}))), t);
        const std::vector<double> saved_intermediate = loss.values();
        backward(loss);
        std::vector<double> g1 = x.grad();
        x.clear_grad();
        w.clear_grad();
        backward(loss);
        for (std::size_t i = 0; i < g1.size(); ++i)
            CHECK(x.grad()[i] == g1[i]);
        CHECK(loss.values() == saved_intermediate);  // forward state untouched
    }
    SUBCASE("no-grad mode records nothing") {
        Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
        NoGradGuard guard;
        Tensor y = sum_all(mul(x, x));
        CHECK_FALSE(y.requires_grad());
    }
    SUBCASE("backward demands a scalar that depends on parameters") {
        Tensor c = Tensor::from_data({2}, {1.0, 2.0});  // no grad
        CHECK_THROWS_AS(backward(sum_all(c)), MissingGradient);
        Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
        CHECK_THROWS_AS(backward(mul(x, x)), ShapeMismatch);  // non-scalar
    }
}

TEST_CASE("adam") {
    SUBCASE("first bias-corrected step moves by lr") {
        ParameterStore store;
        Tensor theta = store.create("theta", {1}, {0.0});
        theta.node()->ensure_grad();
        theta.node()->grad[0] = 1.0;
        theta.node()->grad_filled = true;
        adam_step(store, 0.001);
        CHECK(std::abs(theta.data()[0] - (-0.001)) < 1e-9);
    }
    SUBCASE("zero gradients leave parameters unchanged") {
        ParameterStore store;
        Tensor theta = store.create("theta", {3}, {0.5, -0.5, 1.0});
        theta.node()->ensure_grad();
        theta.node()->grad_filled = true;
        adam_step(store, 0.1);
        CHECK(theta.data()[0] == 0.5);
        CHECK(theta.data()[1] == -0.5);
        CHECK(theta.data()[2] == 1.0);
    }
    SUBCASE("missing gradient is an error") {
        ParameterStore store;
        store.create("theta", {1}, {0.0});
        CHECK_THROWS_AS(adam_step(store, 0.1), MissingGradient);
    }
    SUBCASE("identical runs are bit-identical") {
        auto run = [] {
            ParameterStore store;
            Tensor w = store.create("w", {2, 2}, {0.1, -0.2, 0.3, -0.4});
            Tensor x = Tensor::from_data({1, 2}, {1.0, -1.0});
            Tensor t = Tensor::from_data({1, 2}, {0.25, 0.75});
            for (int i = 0; i < 25; ++i) {
                Tensor loss = mse(dense(x, w, Tensor::zeros({2})), t);
                backward(loss);
                adam_step(store, 5e-3);
            }
            return w.values();
        };
        CHECK(run() == run());
    }
}

TEST_CASE("finite_diff_check harness") {
    SUBCASE("quadratic with known gradient") {
        Tensor x = Tensor::from_data({3}, {1.0, 2.0, 3.0}, true);
        auto f = [](const Tensor& v) { return sum_all(mul(v, v)); };
        Tensor y = f(x);
        backward(y);
        CHECK(x.grad()[0] == doctest::Approx(2.0));
        CHECK(x.grad()[1] == doctest::Approx(4.0));
        CHECK(x.grad()[2] == doctest::Approx(6.0));
        x.clear_grad();
        auto report = finite_diff_check(f, x);
        CHECK(report.kinks == 0);
        CHECK(report.passed(1e-6));
    }
    SUBCASE("two-layer dense network passes at 1e-4") {
        SplitMixSequence seq(31);
        Tensor x = rand_tensor(seq, {2, 3}, -1, 1, true);
        Tensor w1 = rand_tensor(seq, {3, 5}, -0.6, 0.6, true);
        Tensor b1 = rand_tensor(seq, {5}, -0.2, 0.2, true);
        Tensor w2 = rand_tensor(seq, {5, 2}, -0.6, 0.6, true);
        Tensor b2 = rand_tensor(seq, {2}, -0.2, 0.2, true);
        Tensor t = rand_tensor(seq, {2, 2}, 0, 1);
        auto f = [&](const Tensor&) {
            return mse(dense(relu(dense(x, w1, b1)), w2, b2), t);
        };
        CHECK(finite_diff_check(f, x).passed(1e-4));
        CHECK(finite_diff_check(f, w1).passed(1e-4));
        CHECK(finite_diff_check(f, w2).passed(1e-4));
    }
    SUBCASE("relu kink at exactly zero is flagged and excluded") {
        Tensor x = Tensor::from_data({2}, {0.0, 1.0}, true);
        auto f = [](const Tensor& v) { return sum_all(relu(v)); };
        auto report = finite_diff_check(f, x);
        CHECK(report.kinks == 1);
        CHECK(report.checked == 1);
        CHECK(report.passed(1e-6));  // the smooth element still verifies
    }
}

TEST_CASE("checkpoint container") {
    SplitMixSequence seq(41);
    std::vector<TensorRecord> records;
    records.push_back({"alpha", {2, 3}, {1.0, -2.5, 3.25, 0.0, 1e-300, 7.125}});
    std::vector<double> big(64);
    for (double& v : big)
        v = seq.next_unit() * 2.0 - 1.0;
    records.push_back({"beta/weights", {4, 4, 2, 2}, big});
    records.push_back({"scalar", {1}, {42.0}});

    const std::string path_a = temp_path("spnf_ckpt_a.spnf");
    const std::string path_b = temp_path("spnf_ckpt_b.spnf");
    write_checkpoint(path_a, records);
    auto loaded = read_checkpoint(path_a);
    REQUIRE(loaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].name == records[i].name);
        CHECK(loaded[i].shape == records[i].shape);
        CHECK(loaded[i].data == records[i].data);
    }
    write_checkpoint(path_b, loaded);

    std::ifstream fa(path_a, std::ios::binary), fb(path_b, std::ios::binary);
    std::string bytes_a((std::istreambuf_iterator<char>(fa)), {});
    std::string bytes_b((std::istreambuf_iterator<char>(fb)), {});
    CHECK(bytes_a == bytes_b);  // byte-exact round trip

    SUBCASE("bad magic") {
        const std::string path = temp_path("spnf_ckpt_bad.spnf");
        std::ofstream out(path, std::ios::binary);
        out << "NOPE" << std::string(16, '\0');
        out.close();
        CHECK_THROWS_AS(read_checkpoint(path), BadMagic);
    }
    SUBCASE("truncated payload") {
        const std::string path = temp_path("spnf_ckpt_trunc.spnf");
        std::ofstream out(path, std::ios::binary);
        out.write(bytes_a.data(), std::streamsize(bytes_a.size() - 5));
        out.close();
        CHECK_THROWS_AS(read_checkpoint(path), TruncatedFile);
    }
}

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "core/common/error.hpp"
#include "core/common/rng.hpp"
#include "core/grad/checkpoint.hpp"
#include "core/grad/fd_check.hpp"
#include "core/grad/ops.hpp"
#include "core/grad/tensor.hpp"

using namespace asn;
using namespace asn::grad;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool requires_grad = false) {
    Tensor t = Tensor::zeros(std::move(shape), requires_grad);
    for (auto& v : t.values()) v = uniform(rng, lo, hi);
    return t;
}

} // namespace

TEST_SUITE("gradcore") {

TEST_CASE("softmax of equal logits is uniform") {
    for (std::size_t k : {2u, 3u, 7u}) {
        Tensor z = Tensor::full({k}, 1.7);
        Tensor p = softmax(z);
        double row_sum = 0.0;
        for (double v : p.values()) {
            CHECK(v == doctest::Approx(1.0 / static_cast<double>(k)).epsilon(1e-12));
            row_sum += v;
        }
        CHECK(std::abs(row_sum - 1.0) < 1e-12);
    }
}

TEST_CASE("softmax rows sum to one") {
    Rng rng = make_rng(11, "softmax-rows");
    Tensor z = random_tensor({6, 5}, rng, -8.0, 8.0);
    Tensor p = softmax(z);
    for (std::size_t r = 0; r < 6; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < 5; ++j) s += p.values()[r * 5 + j];
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("dropout rate 0 is the identity") {
    Rng rng = make_rng(1);
    Tensor x = random_tensor({4, 3}, rng);
    Tensor y = dropout(x, 0.0, true, rng);
    CHECK(y.node() == x.node());
    Tensor z = dropout(x, 0.5, false, rng); // inference
    CHECK(z.node() == x.node());
}

TEST_CASE("dropout keeps expectation at train time") {
    // Monte-Carlo over 10,000 masks; expected output equals input within 1%.
    Rng rng = make_rng(2024, "dropout-mc");
    const double rate = 0.3;
    const std::size_t trials = 10000;
    Tensor x = Tensor::full({8}, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
        Tensor y = dropout(x, rate, true, rng);
        for (std::size_t j = 0; j < 8; ++j) acc += y.values()[j];
    }
    CHECK(std::abs(acc / (trials * 8.0) - 1.0) < 0.01);
}

TEST_CASE("matmul of unit matrices") {
    Tensor a = Tensor::full({2, 3}, 1.0);
    Tensor b = Tensor::full({3, 2}, 1.0);
    Tensor c = matmul(a, b);
    REQUIRE(c.shape() == Shape{2, 2});
    for (double v : c.values()) CHECK(v == doctest::Approx(3.0));
}

TEST_CASE("matmul shape mismatch names both shapes") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({4, 2});
    try {
        matmul(a, b);
        FAIL("expected error");
    } catch (const Error& e) {
        std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[4x2]") != std::string::npos);
    }
}

TEST_CASE("backward on a product recovers both factors") {
    Tensor x = Tensor::scalar(2.0, true);
    Tensor w = Tensor::scalar(3.0, true);
    Tensor loss = multiply(x, w);
    backward(loss);
    CHECK(w.grad()[0] == doctest::Approx(2.0));
    CHECK(x.grad()[0] == doctest::Approx(3.0));
}

TEST_CASE("gradient accumulates across backward calls") {
    Tensor x = Tensor::scalar(2.0, true);
    Tensor w = Tensor::scalar(3.0, true);
    Tensor loss = multiply(x, w);
    backward(loss);
    backward(loss);
    CHECK(w.grad()[0] == doctest::Approx(4.0));
    x.zero_grad();
    CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("sum of softmax has zero gradient") {
    Rng rng = make_rng(7);
    Tensor z = random_tensor({5}, rng, -2.0, 2.0, true);
    Tensor loss = sum_all(softmax(z));
    backward(loss);
    for (double g : z.grad()) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("backward requires a scalar loss") {
    Tensor z = Tensor::zeros({2, 2}, true);
    CHECK_THROWS_AS(backward(z), Error);
}

TEST_CASE("finite differences: linear function is exact") {
    Rng rng = make_rng(3);
    Tensor coeff = random_tensor({10}, rng);
    auto f = [&](const Tensor& x) { return sum_all(multiply(x, coeff)); };
    Tensor point = random_tensor({10}, rng);
    CHECK(finite_difference_check(f, point, 1e-5) < 1e-10);
}

TEST_CASE("finite differences: sigmoid near zero") {
    auto f = [](const Tensor& x) { return sum_all(sigmoid(x)); };
    Tensor point = Tensor::zeros({4});
    CHECK(finite_difference_check(f, point, 1e-5) < 1e-8);
}

TEST_CASE("finite differences: every primitive below 1e-6 at 100 random points") {
    Rng rng = make_rng(42, "primitive-sweep");

    struct Probe {
        const char* name;
        std::function<Tensor(const Tensor&)> f;
        Shape shape;
    };

    Tensor mat_b = random_tensor({4, 3}, rng);
    Tensor bias = random_tensor({4}, rng);
    Tensor mask_keys = Tensor::from_values({4}, {1, 1, 0, 1});
    Tensor row_mask = Tensor::from_values({3}, {1, 0, 1});
    Tensor gain = random_tensor({4}, rng, 0.5, 1.5);
    Tensor beta = random_tensor({4}, rng);
    Tensor mix_other = random_tensor({3, 4}, rng);
    Tensor div_denom = random_tensor({3, 4}, rng, 0.5, 2.0);
    Tensor weights = random_tensor({12}, rng);

    auto weighted_sum = [&](const Tensor& y) {
        return sum_all(multiply(reshape(y, {y.size()}),
                                slice(weights, 0, 0, y.size())));
    };

    std::vector<Probe> probes = {
        {"matmul", [&](const Tensor& x) { return weighted_sum(matmul(reshape(x, {3, 4}), mat_b)); }, {12}},
        {"matmul_tb", [&](const Tensor& x) { return weighted_sum(matmul(reshape(x, {3, 4}), mix_other, false, true)); }, {12}},
        {"matmul_ta", [&](const Tensor& x) { return weighted_sum(matmul(reshape(x, {4, 3}), mat_b, true, false)); }, {12}},
        {"add_bias", [&](const Tensor& x) { return weighted_sum(add(reshape(x, {3, 4}), bias)); }, {12}},
        {"sub", [&](const Tensor& x) { return weighted_sum(sub(reshape(x, {3, 4}), mix_other)); }, {12}},
        {"multiply", [&](const Tensor& x) { return weighted_sum(multiply(reshape(x, {3, 4}), mix_other)); }, {12}},
        {"divide", [&](const Tensor& x) { return weighted_sum(divide(reshape(x, {3, 4}), div_denom)); }, {12}},
        {"scale", [&](const Tensor& x) { return weighted_sum(scale(mix_other, sum_all(x))); }, {3}},
        {"concat", [&](const Tensor& x) { return weighted_sum(concat(reshape(x, {2, 3}), reshape(x, {2, 3}), 1)); }, {6}},
        {"slice", [&](const Tensor& x) { return weighted_sum(slice(reshape(x, {3, 4}), 1, 1, 3)); }, {12}},
        {"sigmoid", [&](const Tensor& x) { return weighted_sum(sigmoid(x)); }, {8}},
        {"tanh", [&](const Tensor& x) { return weighted_sum(tanh_op(x)); }, {8}},
        {"softmax", [&](const Tensor& x) { return weighted_sum(softmax(reshape(x, {2, 4}))); }, {8}},
        {"masked_softmax", [&](const Tensor& x) { return weighted_sum(masked_softmax(reshape(x, {2, 4}), mask_keys)); }, {8}},
        {"layer_norm", [&](const Tensor& x) { return weighted_sum(layer_norm(reshape(x, {2, 4}), gain, beta)); }, {8}},
        {"cross_entropy", [&](const Tensor& x) { return cross_entropy(reshape(x, {3, 4}), {1, 0, 3}); }, {12}},
        {"masked_mean_rows", [&](const Tensor& x) { return weighted_sum(masked_mean_rows(reshape(x, {3, 4}), row_mask)); }, {12}},
        {"mask_mix", [&](const Tensor& x) { return weighted_sum(mask_mix(row_mask, reshape(x, {3, 4}), mix_other)); }, {12}},
        {"log", [&](const Tensor& x) { return weighted_sum(log_op(add_const(multiply(x, x), 0.5))); }, {8}},
        {"embedding", [&](const Tensor& x) { return weighted_sum(embedding_lookup(reshape(x, {4, 3}), {0, 2, 2, 1})); }, {12}},
        {"gather_rows", [&](const Tensor& x) { return weighted_sum(gather_rows(reshape(x, {4, 3}), {3, 1, 1})); }, {12}},
        {"relu", [&](const Tensor& x) { return weighted_sum(relu(x)); }, {8}},
    };

    for (const auto& probe : probes) {
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            Tensor point = random_tensor(probe.shape, rng, -2.0, 2.0);
            if (std::string(probe.name) == "relu") {
                // keep probes away from the kink at 0
                for (auto& v : point.values())
                    if (std::abs(v) < 1e-3) v = v < 0 ? v - 1e-3 : v + 1e-3;
            }
            FdOptions opts;
            opts.abs_guard = 1e-9;
            worst = std::max(worst, finite_difference_check(probe.f, point, 1e-5, opts));
        }
        INFO("primitive: " << std::string(probe.name) << " worst " << worst);
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("three-layer MLP gradient matches finite differences") {
    Rng rng = make_rng(0, "mlp");
    const std::size_t in = 5, h1 = 6, h2 = 4;
    // one flat parameter vector, unpacked inside the function
    const std::size_t n_params = in * h1 + h1 * h2 + h2 * 1;
    Tensor input = random_tensor({1, in}, rng);
    auto f = [&](const Tensor& p) {
        std::size_t at = 0;
        Tensor w1 = reshape(slice(p, 0, at, at + in * h1), {in, h1});
        at += in * h1;
        Tensor w2 = reshape(slice(p, 0, at, at + h1 * h2), {h1, h2});
        at += h1 * h2;
        Tensor w3 = reshape(slice(p, 0, at, at + h2), {h2, 1});
        Tensor y = matmul(tanh_op(matmul(sigmoid(matmul(input, w1)), w2)), w3);
        return reshape(y, {});
    };
    Tensor point = random_tensor({n_params}, rng, -0.8, 0.8);
    CHECK(finite_difference_check(f, point, 1e-5) < 1e-6);
}

TEST_CASE("LSTM cell gradient, 8-dim, seed 0") {
    // Golden oracle run: measured max relative discrepancy 64-bit build,
    // epsilon 1e-5, seed 0. Contract bound is 1e-6.
    Rng rng = make_rng(0, "lstm-cell");
    const std::size_t d = 8, h = 8;
    Tensor x = random_tensor({1, d}, rng);
    const std::size_t n_params = d * 4 * h + h * 4 * h + 4 * h + 2 * h;
    auto f = [&](const Tensor& p) {
        std::size_t at = 0;
        Tensor wx = reshape(slice(p, 0, at, at + d * 4 * h), {d, 4 * h});
        at += d * 4 * h;
        Tensor wh = reshape(slice(p, 0, at, at + h * 4 * h), {h, 4 * h});
        at += h * 4 * h;
        Tensor b = slice(p, 0, at, at + 4 * h);
        at += 4 * h;
        Tensor h0 = reshape(slice(p, 0, at, at + h), {1, h});
        at += h;
        Tensor c0 = reshape(slice(p, 0, at, at + h), {1, h});
        Tensor z = add(add(matmul(x, wx), matmul(h0, wh)), b);
        Tensor i_g = sigmoid(slice(z, 1, 0, h));
        Tensor f_g = sigmoid(slice(z, 1, h, 2 * h));
        Tensor g_g = tanh_op(slice(z, 1, 2 * h, 3 * h));
        Tensor o_g = sigmoid(slice(z, 1, 3 * h, 4 * h));
        Tensor c1 = add(multiply(f_g, c0), multiply(i_g, g_g));
        Tensor h1 = multiply(o_g, tanh_op(c1));
        return sum_all(h1);
    };
    Tensor point = random_tensor({n_params}, rng, -0.5, 0.5);
    const double disc = finite_difference_check(f, point, 1e-5);
    CHECK(disc < 1e-6);
}

TEST_CASE("softmax + cross-entropy composite gradient equals p - onehot") {
    Rng rng = make_rng(9, "ce");
    Tensor z = random_tensor({4, 5}, rng, -3.0, 3.0, true);
    std::vector<std::size_t> targets = {2, 0, 4, 1};
    Tensor loss = cross_entropy(z, targets, Reduction::Sum);
    backward(loss);
    Tensor p = softmax(Tensor::from_values(z.shape(), z.values()));
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t j = 0; j < 5; ++j) {
            const double expect = p.values()[r * 5 + j] - (j == targets[r] ? 1.0 : 0.0);
            CHECK(z.grad()[r * 5 + j] == doctest::Approx(expect).epsilon(1e-13));
        }
}

TEST_CASE("backward is deterministic given seed and graph") {
    auto run = [](std::uint64_t seed) {
        Rng rng = make_rng(seed, "determinism");
        Tensor w = random_tensor({6, 6}, rng, -1, 1, true);
        Tensor x = random_tensor({2, 6}, rng);
        Tensor loss = cross_entropy(matmul(x, w), {1, 3});
        backward(loss);
        return w.grad();
    };
    CHECK(run(5) == run(5));
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    Rng rng = make_rng(17, "ckpt");
    std::vector<NamedTensor> tensors;
    tensors.push_back({"layer0.weight", {3, 4}, {}});
    tensors.push_back({"layer0.bias", {4}, {}});
    tensors.push_back({"alpha", {}, {}});
    for (auto& t : tensors) {
        t.values.resize(shape_size(t.shape));
        for (auto& v : t.values) v = gaussian(rng) * 1e3;
    }
    tensors[2].values[0] = 0.1 + 0.2; // not exactly representable; must survive

    const std::string path = (std::filesystem::temp_directory_path() / "asn_ckpt_test.asnt").string();
    save_checkpoint(path, tensors);
    auto loaded = load_checkpoint(path);
    REQUIRE(loaded.size() == tensors.size());
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        CHECK(loaded[i].name == tensors[i].name);
        CHECK(loaded[i].shape == tensors[i].shape);
        REQUIRE(loaded[i].values.size() == tensors[i].values.size());
        for (std::size_t j = 0; j < tensors[i].values.size(); ++j) {
            CHECK(std::memcmp(&loaded[i].values[j], &tensors[i].values[j], sizeof(double)) == 0);
        }
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint rejects foreign files") {
    const std::string path = (std::filesystem::temp_directory_path() / "asn_bad_ckpt.bin").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "not a checkpoint";
    }
    CHECK_THROWS_AS(load_checkpoint(path), Error);
    std::filesystem::remove(path);
}

} // TEST_SUITE

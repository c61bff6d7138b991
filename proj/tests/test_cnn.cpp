#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "gmc/network.hpp"

using namespace gmc;
using namespace gmc::cnn;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed,
                     double sigma = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sigma);
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = g(rng);
    return t;
}

// Brute-force `same` cross-correlation, kept deliberately dumb.
Tensor conv_oracle(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::size_t C = x.shape[0], H = x.shape[1], W = x.shape[2];
    const std::size_t O = w.shape[0], k = w.shape[2];
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((k - 1) / 2);
    Tensor y({O, H, W});
    for (std::size_t o = 0; o < O; ++o)
        for (std::size_t r = 0; r < H; ++r)
            for (std::size_t col = 0; col < W; ++col) {
                double acc = b.data[o];
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t kr = 0; kr < k; ++kr)
                        for (std::size_t kc = 0; kc < k; ++kc) {
                            const auto rr = static_cast<std::ptrdiff_t>(r + kr) - pad;
                            const auto cc = static_cast<std::ptrdiff_t>(col + kc) - pad;
                            if (rr < 0 || cc < 0 ||
                                rr >= static_cast<std::ptrdiff_t>(H) ||
                                cc >= static_cast<std::ptrdiff_t>(W))
                                continue;
                            acc += w.data[((o * C + c) * k + kr) * k + kc] *
                                   x.at3(c, static_cast<std::size_t>(rr),
                                         static_cast<std::size_t>(cc));
                        }
                y.at3(o, r, col) = acc;
            }
    return y;
}

Tensor pool_oracle(const Tensor& x, std::size_t p, std::size_t s) {
    const std::size_t C = x.shape[0], H = x.shape[1], W = x.shape[2];
    const std::size_t oh = (H - p) / s + 1, ow = (W - p) / s + 1;
    Tensor y({C, oh, ow});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t r = 0; r < oh; ++r)
            for (std::size_t col = 0; col < ow; ++col) {
                double best = x.at3(c, r * s, col * s);
                for (std::size_t pr = 0; pr < p; ++pr)
                    for (std::size_t pc = 0; pc < p; ++pc)
                        best = std::max(best, x.at3(c, r * s + pr, col * s + pc));
                y.at3(c, r, col) = best;
            }
    return y;
}

// Loss of the whole network for finite-difference probing.
double network_loss(const NetworkSpec& spec, const ModelState& state,
                    const Tensor& input, int label) {
    const Tensor logits = forward_logits(spec, state, input);
    return softmax_cross_entropy(logits, label).value;
}

NetworkSpec tiny_spec() {
    NetworkSpec spec;
    spec.input_shape = {2, 11, 11};
    spec.n_classes = 3;
    spec.layers = {LayerSpec::conv(2, 3, 3),  LayerSpec::relu(),
                   LayerSpec::maxpool(3, 2),  LayerSpec::flatten(),
                   LayerSpec::fully_connected(3 * 5 * 5, 10),
                   LayerSpec::relu(),
                   LayerSpec::fully_connected(10, 3),
                   LayerSpec::softmax()};
    spec.validate();
    return spec;
}

} // namespace

TEST_CASE("1x1 identity kernel passes the input through") {
    const auto x = random_tensor({1, 6, 6}, 1);
    Tensor w({1, 1, 1, 1});
    w.data[0] = 1.0;
    const Tensor b({1});
    const auto y = conv_forward(x, w, b, Padding::Same);
    REQUIRE(y.shape == x.shape);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(y.data[i] == doctest::Approx(x.data[i]));
}

TEST_CASE("3x3 averaging kernel on a constant image") {
    Tensor x({1, 8, 8});
    std::fill(x.data.begin(), x.data.end(), 2.0);
    Tensor w({1, 1, 3, 3});
    std::fill(w.data.begin(), w.data.end(), 1.0 / 9.0);
    const Tensor b({1});
    const auto y = conv_forward(x, w, b, Padding::Same);
    // interior cells see the full window, border cells a truncated one
    CHECK(y.at3(0, 4, 4) == doctest::Approx(2.0));
    CHECK(y.at3(0, 0, 0) == doctest::Approx(2.0 * 4.0 / 9.0));
    CHECK(y.at3(0, 0, 4) == doctest::Approx(2.0 * 6.0 / 9.0));
}

TEST_CASE("conv_forward matches the quadruple-loop oracle") {
    const auto x = random_tensor({3, 9, 7}, 11);
    const auto w = random_tensor({4, 3, 5, 5}, 12);
    const auto b = random_tensor({4}, 13);
    const auto fast = conv_forward(x, w, b, Padding::Same);
    const auto slow = conv_oracle(x, w, b);
    REQUIRE(fast.shape == slow.shape);
    for (std::size_t i = 0; i < fast.size(); ++i)
        CHECK(std::abs(fast.data[i] - slow.data[i]) < 1e-12);
}

TEST_CASE("conv rejects even kernels and channel mismatches") {
    CHECK_THROWS_AS(LayerSpec::conv(1, 1, 4), ParamError);
    const auto x = random_tensor({2, 5, 5}, 1);
    const auto w = random_tensor({1, 3, 3, 3}, 2);
    CHECK_THROWS_AS(conv_forward(x, w, Tensor({1}), Padding::Same), ParamError);
}

TEST_CASE("relu and its gradient gate") {
    Tensor x({1, 1, 4}, {-2.0, 0.0, 0.5, 3.0});
    const auto y = relu(x);
    CHECK(y.data == std::vector<double>{0.0, 0.0, 0.5, 3.0});
    Tensor g({1, 1, 4}, {1.0, 1.0, 1.0, 1.0});
    const auto gx = relu_backward(x, g);
    CHECK(gx.data == std::vector<double>{0.0, 0.0, 1.0, 1.0});
}

TEST_CASE("overlapping max pool on known grids") {
    // 4x4 ramp 1..16, p=3 s=2 -> out 1x1 holding the max
    Tensor a({1, 4, 4});
    std::iota(a.data.begin(), a.data.end(), 1.0);
    CHECK(maxpool_overlap(a, 3, 2).output.data == std::vector<double>{11.0});

    Tensor b({1, 5, 5});
    std::iota(b.data.begin(), b.data.end(), 1.0);
    const auto r = maxpool_overlap(b, 3, 2);
    CHECK(r.output.shape == std::vector<std::size_t>{1, 2, 2});
    CHECK(r.output.data == std::vector<double>{13.0, 15.0, 23.0, 25.0});
}

TEST_CASE("max pool matches the brute-force oracle") {
    const auto x = random_tensor({2, 8, 8}, 17);
    const auto fast = maxpool_overlap(x, 3, 2);
    const auto slow = pool_oracle(x, 3, 2);
    CHECK(fast.output.data == slow.data);
    // argmax really points at the winning element
    for (std::size_t i = 0; i < fast.argmax.size(); ++i)
        CHECK(x.data[fast.argmax[i]] == fast.output.data[i]);
    CHECK_THROWS_AS(maxpool_overlap(random_tensor({1, 2, 2}, 1), 3, 2),
                    ParamError);
}

TEST_CASE("pool backward routes gradient to the argmax only") {
    Tensor x({1, 3, 3}, {1, 2, 3, 4, 9, 6, 7, 8, 5});
    const auto r = maxpool_overlap(x, 3, 1);
    Tensor g({1, 1, 1}, {2.5});
    const auto gx = maxpool_backward(x.shape, r.argmax, g);
    for (std::size_t i = 0; i < gx.size(); ++i)
        CHECK(gx.data[i] == (i == 4 ? 2.5 : 0.0));
}

TEST_CASE("fully connected layer basics and oracle") {
    Tensor eye({3, 3});
    eye.data = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    Tensor x({3}, {1.5, -2.0, 0.25});
    Tensor b({3}, {0.0, 0.0, 0.0});
    CHECK(fc_forward(x, eye, b).data == x.data);
    Tensor zero({3}, {0.0, 0.0, 0.0});
    Tensor bias({3}, {3.0, -1.0, 0.5});
    CHECK(fc_forward(zero, eye, bias).data == bias.data);

    const auto w = random_tensor({6, 4}, 23);
    const auto xr = random_tensor({4}, 24);
    const auto br = random_tensor({6}, 25);
    const auto y = fc_forward(xr, w, br);
    for (std::size_t o = 0; o < 6; ++o) {
        double acc = br.data[o];
        for (std::size_t i = 0; i < 4; ++i)
            acc += w.data[o * 4 + i] * xr.data[i];
        CHECK(std::abs(y.data[o] - acc) < 1e-12);
    }
}

TEST_CASE("softmax cross-entropy values and analytic gradient") {
    Tensor uniform({4}, {0.7, 0.7, 0.7, 0.7});
    CHECK(softmax_cross_entropy(uniform, 2).value ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
    Tensor margin({4}, {20.0, 0.0, 0.0, 0.0});
    CHECK(softmax_cross_entropy(margin, 0).value < 1e-6);

    const auto logits = random_tensor({5}, 31);
    const auto res = softmax_cross_entropy(logits, 3);
    const double h = 1e-6;
    for (std::size_t i = 0; i < 5; ++i) {
        Tensor up = logits, dn = logits;
        up.data[i] += h;
        dn.data[i] -= h;
        const double fd = (softmax_cross_entropy(up, 3).value -
                           softmax_cross_entropy(dn, 3).value) /
                          (2.0 * h);
        CHECK(std::abs(res.grad_logits.data[i] - fd) < 1e-6);
    }
}

TEST_CASE("initialization statistics and bias rules") {
    const auto spec = NetworkSpec::paper({2, 64, 64});
    const auto state = init(spec, 99);
    std::size_t conv_idx = 0, fc_idx = 0;
    std::vector<double> weights;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (!state.layers[i].present) continue;
        const auto& p = state.layers[i];
        weights.insert(weights.end(), p.w.data.begin(), p.w.data.end());
        double expect_b = 0.0;
        if (spec.layers[i].type == LayerSpec::Type::Conv) {
            ++conv_idx;
            expect_b = (conv_idx == 1 || conv_idx == 3) ? 1.0 : 0.0;
        } else {
            ++fc_idx;
            expect_b = fc_idx == 1 ? 1.0 : 0.0; // hidden FC only
        }
        for (double v : p.b.data) CHECK(v == expect_b);
        for (double v : p.vw.data) CHECK(v == 0.0);
        for (double v : p.vb.data) CHECK(v == 0.0);
    }
    REQUIRE(weights.size() > 100000);
    double mean = 0.0;
    for (double v : weights) mean += v;
    mean /= static_cast<double>(weights.size());
    double var = 0.0;
    for (double v : weights) var += (v - mean) * (v - mean);
    var /= static_cast<double>(weights.size());
    CHECK(std::abs(mean) < 3.0 * 0.005 / std::sqrt(double(weights.size())));
    CHECK(std::sqrt(var) == doctest::Approx(0.005).epsilon(0.02));

    const auto again = init(spec, 99);
    for (std::size_t i = 0; i < state.layers.size(); ++i)
        CHECK(state.layers[i].w.data == again.layers[i].w.data);
    const auto other = init(spec, 100);
    CHECK(state.layers[0].w.data != other.layers[0].w.data);
}

TEST_CASE("sgd step arithmetic") {
    NetworkSpec spec;
    spec.input_shape = {1, 1, 2};
    spec.n_classes = 2;
    spec.layers = {LayerSpec::flatten(), LayerSpec::fully_connected(2, 2),
                   LayerSpec::softmax()};
    spec.validate();
    auto state = init(spec, 1);
    auto& p = state.layers[1];
    std::fill(p.w.data.begin(), p.w.data.end(), 1.0);
    std::fill(p.b.data.begin(), p.b.data.end(), 0.0);

    auto grads = zero_grads(state);
    std::fill(grads[1].w.data.begin(), grads[1].w.data.end(), 1.0);
    sgd_step(state, grads, 0.01);
    CHECK(p.vw.data[0] == doctest::Approx(-0.010005).epsilon(1e-12));
    CHECK(p.w.data[0] == doctest::Approx(0.989995).epsilon(1e-12));

    // zero gradient, zero weight: momentum decays geometrically
    std::fill(p.w.data.begin(), p.w.data.end(), 0.0);
    std::fill(p.vw.data.begin(), p.vw.data.end(), 1.0);
    auto zg = zero_grads(state);
    sgd_step(state, zg, 0.01);
    CHECK(p.vw.data[0] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(p.w.data[0] == doctest::Approx(0.9).epsilon(1e-12));

    auto bad = zero_grads(state);
    bad[1].w.data[0] = std::nan("");
    CHECK_THROWS_AS(sgd_step(state, bad, 0.01), std::runtime_error);
}

TEST_CASE("predict returns a proper distribution and the argmax") {
    const auto spec = tiny_spec();
    const auto state = init(spec, 3);
    const auto x = random_tensor({2, 11, 11}, 4);
    const auto pred = predict(spec, state, x);
    REQUIRE(pred.probabilities.size() == 3);
    double sum = 0.0;
    for (double v : pred.probabilities) {
        CHECK(v >= 0.0);
        sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    const auto best = std::max_element(pred.probabilities.begin(),
                                       pred.probabilities.end());
    CHECK(pred.label == best - pred.probabilities.begin());
}

TEST_CASE("backprop matches central finite differences") {
    const auto spec = tiny_spec();
    for (std::uint64_t seed : {5u, 6u, 7u}) {
        auto state = init(spec, seed);
        // break bias symmetry so gradients are generic
        for (auto& l : state.layers)
            if (l.present)
                for (std::size_t i = 0; i < l.b.size(); ++i)
                    l.b.data[i] += 0.01 * static_cast<double>(i % 5);
        const auto x = random_tensor({2, 11, 11}, seed + 100);
        const int label = static_cast<int>(seed % 3);

        ForwardCache cache;
        const auto logits = forward_logits(spec, state, x, &cache);
        const auto loss = softmax_cross_entropy(logits, label);
        const auto grads = backward(spec, state, cache, loss.grad_logits);

        const double h = 1e-5;
        std::mt19937_64 pick(seed);
        for (std::size_t li = 0; li < grads.size(); ++li) {
            if (!grads[li].present) continue;
            for (int probes = 0; probes < 12; ++probes) {
                const bool use_w = probes % 3 != 2;
                auto& param = use_w ? state.layers[li].w : state.layers[li].b;
                const auto& g = use_w ? grads[li].w : grads[li].b;
                const std::size_t i = pick() % param.size();
                const double keep = param.data[i];
                param.data[i] = keep + h;
                const double up = network_loss(spec, state, x, label);
                param.data[i] = keep - h;
                const double dn = network_loss(spec, state, x, label);
                param.data[i] = keep;
                const double fd = (up - dn) / (2.0 * h);
                const double denom = std::max({std::abs(fd), std::abs(g.data[i]), 1e-4});
                CHECK(std::abs(g.data[i] - fd) / denom < 1e-4);
            }
        }
    }
}

TEST_CASE("profile shape chaining") {
    const auto desk = NetworkSpec::desk({2, 64, 64});
    const auto shapes = desk.validate();
    // 64 -> pool 31 -> pool 15
    CHECK(shapes[2] == std::vector<std::size_t>{8, 31, 31});
    CHECK(shapes[5] == std::vector<std::size_t>{16, 15, 15});
    CHECK(shapes[shapes.size() - 2] == std::vector<std::size_t>{4});

    const auto paper = NetworkSpec::paper({2, 256, 600});
    const auto ps = paper.validate();
    CHECK(ps[2] == std::vector<std::size_t>{64, 127, 299});
    CHECK(ps.back().empty() == false);

    NetworkSpec broken = desk;
    broken.layers.pop_back(); // drop the softmax
    CHECK_THROWS_AS(broken.validate(), ParamError);
}

TEST_CASE("checkpoint round-trip preserves the model") {
    const auto spec = tiny_spec();
    auto state = init(spec, 12);
    state.iteration = 321;
    // put something nontrivial in the momentum buffers
    for (auto& l : state.layers)
        if (l.present)
            for (std::size_t i = 0; i < l.vw.size(); ++i)
                l.vw.data[i] = 0.001 * static_cast<double>(i % 7);

    const std::string path = "/tmp/gmc_ckpt_test.gmc";
    save_checkpoint(path, spec, state, 777);
    const auto back = load_checkpoint(path);
    CHECK(back.seed == 777);
    CHECK(back.state.iteration == 321);
    REQUIRE(back.state.layers.size() == state.layers.size());
    for (std::size_t li = 0; li < state.layers.size(); ++li) {
        if (!state.layers[li].present) continue;
        for (std::size_t i = 0; i < state.layers[li].w.size(); ++i)
            CHECK(back.state.layers[li].w.data[i] ==
                  doctest::Approx(state.layers[li].w.data[i]).epsilon(1e-6));
        for (std::size_t i = 0; i < state.layers[li].vw.size(); ++i)
            CHECK(back.state.layers[li].vw.data[i] ==
                  doctest::Approx(state.layers[li].vw.data[i]).epsilon(1e-6));
    }
    // predictions survive the float32 round-trip
    const auto x = random_tensor({2, 11, 11}, 50);
    const auto a = predict(spec, state, x);
    const auto b = predict(back.spec, back.state, x);
    CHECK(a.label == b.label);
    std::remove(path.c_str());
}

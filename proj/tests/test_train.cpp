#include <doctest.h>

#include <cmath>
#include <random>

#include "gmc/train.hpp"

using namespace gmc;
using namespace gmc::cnn;

namespace {

NetworkSpec toy_spec() {
    NetworkSpec spec;
    spec.input_shape = {1, 1, 2};
    spec.n_classes = 2;
    spec.layers = {LayerSpec::flatten(), LayerSpec::fully_connected(2, 2),
                   LayerSpec::softmax()};
    spec.validate();
    return spec;
}

// Two Gaussian blobs on the plane; `spread` controls class overlap.
std::vector<LabeledSample> blobs(std::size_t n_per_class, std::uint64_t seed,
                                 double spread = 0.35, double center = 1.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, spread);
    std::vector<LabeledSample> out;
    for (std::size_t i = 0; i < n_per_class; ++i)
        for (int label = 0; label < 2; ++label) {
            const double cx = label == 0 ? -center : center;
            Tensor x({1, 1, 2}, {cx + g(rng), g(rng)});
            out.push_back({std::move(x), label});
        }
    return out;
}

} // namespace

TEST_CASE("toy problem trains to perfect accuracy") {
    const auto spec = toy_spec();
    const auto train_set = blobs(40, 1);
    const auto val_set = blobs(10, 2);
    TrainConfig cfg;
    cfg.lr0 = 0.1;
    cfg.max_epochs = 60;
    cfg.batch_size = 8;
    cfg.seed = 5;
    cfg.threads = 2;
    const auto res = train(spec, train_set, val_set, cfg);
    REQUIRE(!res.history.empty());
    const auto train_eval = evaluate(spec, res.best_state, train_set, 2);
    CHECK(train_eval.accuracy == doctest::Approx(1.0));
    CHECK(res.best_val_error == doctest::Approx(0.0));
    CHECK(res.best_epoch >= 1);
    // history bookkeeping: 1-based contiguous epochs, finite losses
    for (std::size_t i = 0; i < res.history.size(); ++i) {
        CHECK(res.history[i].epoch == i + 1);
        CHECK(std::isfinite(res.history[i].train_loss));
        CHECK(res.history[i].lr > 0.0);
    }
}

TEST_CASE("plateau schedule walks the lr down and stops at the floor") {
    const auto spec = toy_spec();
    const auto data = blobs(8, 3, 1.2, 0.1); // heavy class overlap
    TrainConfig cfg;
    cfg.plateau_patience = 1;
    cfg.improve_threshold = 1e18; // nothing ever counts as an improvement
    cfg.max_epochs = 100;
    cfg.seed = 9;
    cfg.threads = 1;
    const auto res = train(spec, data, data, cfg);
    // epoch 1 establishes the best; every later epoch plateaus, so the lr
    // drops 10x per epoch from epoch 3 on until the next value would cross
    // the floor: exactly three reductions, then stop.
    std::vector<double> lrs;
    for (const auto& r : res.history) lrs.push_back(r.lr);
    REQUIRE(lrs.size() == 5);
    CHECK(lrs[0] == doctest::Approx(0.01));
    CHECK(lrs[1] == doctest::Approx(0.01));
    CHECK(lrs[2] == doctest::Approx(0.001));
    CHECK(lrs[3] == doctest::Approx(1e-4));
    CHECK(lrs[4] == doctest::Approx(1e-5));
}

TEST_CASE("training is deterministic for a fixed seed") {
    const auto spec = toy_spec();
    const auto train_set = blobs(16, 11);
    const auto val_set = blobs(4, 12);
    TrainConfig cfg;
    cfg.max_epochs = 8;
    cfg.seed = 77;
    cfg.threads = 3;
    const auto a = train(spec, train_set, val_set, cfg);
    const auto b = train(spec, train_set, val_set, cfg);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        CHECK(a.history[i].val_loss == b.history[i].val_loss);
    }
    for (std::size_t li = 0; li < a.best_state.layers.size(); ++li)
        CHECK(a.best_state.layers[li].w.data == b.best_state.layers[li].w.data);

    TrainConfig other = cfg;
    other.seed = 78;
    const auto c = train(spec, train_set, val_set, other);
    CHECK(a.history[0].train_loss != c.history[0].train_loss);
}

TEST_CASE("full-batch steps decrease the loss almost always") {
    const auto spec = toy_spec();
    const auto data = blobs(16, 21, 1.2, 0.1); // inseparable, one batch
    TrainConfig cfg;
    cfg.lr0 = 0.02;
    cfg.momentum = 0.0; // plain descent: convex loss falls monotonically
    cfg.batch_size = data.size();
    cfg.max_epochs = 30;
    cfg.improve_threshold = 0.0; // effectively never reduce
    cfg.plateau_patience = 1000;
    cfg.seed = 4;
    cfg.threads = 2;
    const auto res = train(spec, data, data, cfg);
    REQUIRE(res.history.size() >= 10);
    std::size_t decreases = 0;
    for (std::size_t i = 1; i < res.history.size(); ++i)
        if (res.history[i].train_loss < res.history[i - 1].train_loss)
            ++decreases;
    CHECK(decreases * 10 >= (res.history.size() - 1) * 9);
}

TEST_CASE("degenerate inputs are rejected or flagged") {
    const auto spec = toy_spec();
    const auto data = blobs(4, 31);
    TrainConfig cfg;
    cfg.max_epochs = 2;
    CHECK_THROWS_AS(train(spec, {}, data, cfg), ParamError);
    CHECK_THROWS_AS(train(spec, data, {}, cfg), ParamError);

    TrainConfig bad = cfg;
    bad.plateau_patience = 0;
    CHECK_THROWS_AS(train(spec, data, data, bad), ParamError);
    bad = cfg;
    bad.batch_size = 0;
    CHECK_THROWS_AS(train(spec, data, data, bad), ParamError);

    // all-one-class validation sets are legal but flagged
    std::vector<LabeledSample> one_class;
    for (const auto& s : data)
        if (s.label == 0) one_class.push_back(s);
    const auto res = train(spec, data, one_class, cfg);
    CHECK(res.single_class_validation);
    const auto ok = train(spec, data, data, cfg);
    CHECK(!ok.single_class_validation);
}

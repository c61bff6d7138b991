#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "gmc/experiment.hpp"

using namespace gmc;
using namespace gmc::pipeline;

namespace {

DatasetConfig small_config() {
    DatasetConfig cfg;
    cfg.per_class = 6;
    cfg.rows = 16;
    cfg.cols = 16;
    cfg.seed = 42;
    cfg.snr_db = 20.0;
    cfg.threads = 4;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("factorial build produces the expected census") {
    auto cfg = small_config();
    cfg.distances = {0.2, 0.4};
    const auto ds = build_dataset(cfg);
    CHECK(ds.samples.size() == 4 * 2 * 1 * 6);
    std::array<std::size_t, 4> per_label{};
    std::set<double> dists;
    for (const auto& s : ds.samples) {
        ++per_label[static_cast<std::size_t>(s.label)];
        dists.insert(s.meta.params.distance_d);
        CHECK(s.input.shape == std::vector<std::size_t>{2, 16, 16});
        CHECK(s.meta.snr_db.has_value());
    }
    for (auto n : per_label) CHECK(n == 2 * 6);
    CHECK(dists == std::set<double>{0.2, 0.4});
    // the full campaign grid: 4 gestures x 3 distances x 2 scales x
    // 4 speed groups x 50 repeats
    CHECK(4 * 3 * 2 * 4 * 50 == 4800);
}

TEST_CASE("range-scaled snr follows the fourth-power law") {
    CHECK(range_scaled_snr(10.0, 0.1) == doctest::Approx(10.0));
    CHECK(range_scaled_snr(10.0, 0.2) == doctest::Approx(10.0 - 40.0 * std::log10(2.0)));
    CHECK(range_scaled_snr(10.0, 1.0) == doctest::Approx(-30.0));
}

TEST_CASE("dataset persistence is byte-stable and lossless") {
    auto cfg = small_config();
    cfg.per_class = 2;
    const auto ds = build_dataset(cfg);
    const std::string m1 = "/tmp/gmc_ds_a.json", m2 = "/tmp/gmc_ds_b.json";
    save_dataset(ds, m1);
    const auto again = build_dataset(cfg);
    save_dataset(again, m2);
    CHECK(slurp(m1) == slurp(m2));
    CHECK(slurp(m1 + ".blob") == slurp(m2 + ".blob"));

    const auto back = load_dataset(m1);
    REQUIRE(back.samples.size() == ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(back.samples[i].label == ds.samples[i].label);
        for (std::size_t k = 0; k < ds.samples[i].input.size(); ++k)
            CHECK(back.samples[i].input.data[k] ==
                  doctest::Approx(ds.samples[i].input.data[k]).epsilon(1e-6));
    }
    for (const auto& p : {m1, m2, m1 + ".blob", m2 + ".blob"})
        std::remove(p.c_str());
}

TEST_CASE("stratified split is disjoint, complete and balanced") {
    auto cfg = small_config();
    cfg.per_class = 25; // 100 samples total
    const auto ds = build_dataset(cfg);
    const auto idx = split(ds, 0.8, 7);
    CHECK(idx.train.size() == 80);
    CHECK(idx.test.size() == 20);
    std::set<std::size_t> all(idx.train.begin(), idx.train.end());
    all.insert(idx.test.begin(), idx.test.end());
    CHECK(all.size() == 100);
    std::array<std::size_t, 4> train_per_class{}, test_per_class{};
    for (auto i : idx.train)
        ++train_per_class[static_cast<std::size_t>(ds.samples[i].label)];
    for (auto i : idx.test)
        ++test_per_class[static_cast<std::size_t>(ds.samples[i].label)];
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(train_per_class[c] == 20);
        CHECK(test_per_class[c] == 5);
    }
    // seeded: same seed reproduces, different seed reshuffles
    const auto same = split(ds, 0.8, 7);
    CHECK(same.train == idx.train);
    const auto other = split(ds, 0.8, 8);
    CHECK(other.train != idx.train);
}

TEST_CASE("normalization comes from the training split only") {
    auto cfg = small_config();
    cfg.per_class = 4;
    auto ds = build_dataset(cfg);
    const auto idx = split(ds, 0.75, 1);
    const auto norm = compute_normalization(ds, idx.train);
    // mutating only test samples must not move the statistics
    for (auto i : idx.test)
        for (auto& v : ds.samples[i].input.data) v += 100.0;
    const auto norm2 = compute_normalization(ds, idx.train);
    CHECK(norm.mean == norm2.mean);
    CHECK(norm.std_dev == norm2.std_dev);
    // train-split inputs are standardized at build time, so the global
    // stats are already centered
    CHECK(std::abs(norm.mean) < 1e-9);
    CHECK(norm.std_dev == doctest::Approx(1.0).epsilon(1e-6));

    Tensor t({1, 1, 4}, {1.0, 2.0, 3.0, 4.0});
    const auto n = normalize(t, Normalization{2.0, 0.5});
    CHECK(n.data == std::vector<double>{-2.0, 0.0, 2.0, 4.0});
}

TEST_CASE("per-sample standardization cancels amplitude scaling") {
    Tensor a({2, 3, 3});
    for (std::size_t i = 0; i < a.size(); ++i)
        a.data[i] = 0.1 * static_cast<double>(i * i % 13);
    Tensor b = a;
    for (auto& v : b.data) v *= 2.0; // gain change upstream of the TF map
    standardize_per_sample(a);
    standardize_per_sample(b);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-12));
    double mean = 0.0, var = 0.0;
    for (double v : a.data) mean += v;
    mean /= static_cast<double>(a.size());
    for (double v : a.data) var += (v - mean) * (v - mean);
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::sqrt(var / static_cast<double>(a.size())) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("run_experiment wires split, training and the confusion matrix") {
    auto cfg = small_config();
    cfg.per_class = 10;
    const auto ds = build_dataset(cfg);
    cnn::TrainConfig tc;
    tc.max_epochs = 3;
    tc.seed = 5;
    tc.threads = 4;
    const auto res = run_experiment(ds, NetworkProfile::Desk, tc);
    CHECK(res.metrics.history.size() <= 3);
    CHECK(!res.metrics.history.empty());
    std::size_t total = 0, diag = 0;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) {
            total += res.metrics.confusion[r][c];
            if (r == c) diag += res.metrics.confusion[r][c];
        }
    CHECK(total == 8); // 20% of 40
    CHECK(res.metrics.test_accuracy ==
          doctest::Approx(static_cast<double>(diag) / static_cast<double>(total)));
    CHECK(res.metrics.epochs_to_threshold >= 1);
    CHECK(res.metrics.epochs_to_threshold <= res.metrics.history.size() + 1);

    const std::string path = "/tmp/gmc_metrics.csv";
    export_metrics_csv(res.metrics.history, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "epoch,lr,train_loss,train_acc,test_loss,test_acc");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++rows;
    CHECK(rows == res.metrics.history.size());
    std::remove(path.c_str());
}

TEST_CASE("epochs_to_threshold definition") {
    std::vector<cnn::EpochRecord> hist(4);
    for (std::size_t i = 0; i < 4; ++i) {
        hist[i].epoch = i + 1;
        hist[i].val_acc = 0.2 * static_cast<double>(i + 1);
    }
    CHECK(epochs_to_threshold(hist, 0.55) == 3);
    CHECK(epochs_to_threshold(hist, 0.8) == 4);
    CHECK(epochs_to_threshold(hist, 0.95) == 5); // never reached
}

TEST_CASE("tf-map export artifacts") {
    GestureParams p;
    p.cls = GestureClass::Circle;
    p.scale_r = 0.2;
    p.distance_d = 0.2;
    p.seed = 3;
    auto cfg = small_config();
    tfa::TimeFrequencyMap raw;
    const auto input = synthesize_input(p, std::nullopt, 0, cfg, &raw);
    CHECK(input.shape == std::vector<std::size_t>{2, 16, 16});
    REQUIRE(raw.rows() > 0);

    const std::string pgm = "/tmp/gmc_map.pgm";
    tfa::export_pgm(raw, pgm);
    const auto bytes = slurp(pgm);
    CHECK(bytes.rfind("P5\n", 0) == 0);
    std::remove(pgm.c_str());
}

TEST_CASE("cwt-backed datasets build too") {
    auto cfg = small_config();
    cfg.per_class = 1;
    cfg.tf_method = TfMethod::Cwt;
    const auto ds = build_dataset(cfg);
    CHECK(ds.samples.size() == 4);
    for (const auto& s : ds.samples) {
        CHECK(s.input.shape == std::vector<std::size_t>{2, 16, 16});
        s.input.check_finite("cwt dataset");
    }
}

TEST_CASE("config validation and json round-trip") {
    auto cfg = small_config();
    const auto j = cfg.to_json();
    const auto back = DatasetConfig::from_json(j);
    CHECK(back.per_class == cfg.per_class);
    CHECK(back.rows == cfg.rows);
    CHECK(back.snr_db == cfg.snr_db);
    CHECK(back.seed == cfg.seed);

    auto bad = cfg;
    bad.per_class = 0;
    CHECK_THROWS_AS(bad.validate(), ParamError);
    bad = cfg;
    bad.distances = {0.0};
    CHECK_THROWS_AS(bad.validate(), ParamError);
    bad = cfg;
    bad.rows = 0;
    CHECK_THROWS_AS(bad.validate(), ParamError);

    CHECK(profile_from_string("desk") == NetworkProfile::Desk);
    CHECK(profile_from_string("paper") == NetworkProfile::Paper);
    CHECK_THROWS_AS(profile_from_string("tiny"), ParamError);
}

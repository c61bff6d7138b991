#include "gmc/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace gmc::pipeline {

NetworkProfile profile_from_string(const std::string& name) {
    if (name == "desk") return NetworkProfile::Desk;
    if (name == "paper") return NetworkProfile::Paper;
    throw ParamError("unknown network profile: " + name);
}

std::size_t epochs_to_threshold(const std::vector<cnn::EpochRecord>& history,
                                double theta) {
    for (const auto& rec : history)
        if (rec.val_acc >= theta) return rec.epoch;
    return history.size() + 1;
}

void export_metrics_csv(const std::vector<cnn::EpochRecord>& history,
                        const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "epoch,lr,train_loss,train_acc,test_loss,test_acc\n";
    char buf[160];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                      r.epoch, r.lr, r.train_loss, r.train_acc, r.val_loss,
                      r.val_acc);
        f << buf;
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

ExperimentResult run_experiment(const Dataset& dataset, NetworkProfile profile,
                                const cnn::TrainConfig& config,
                                double train_fraction,
                                std::uint64_t split_seed) {
    if (dataset.samples.empty()) throw ParamError("empty dataset");
    const auto idx = split(dataset, train_fraction, split_seed);
    const auto norm = compute_normalization(dataset, idx.train);

    auto make_set = [&](const std::vector<std::size_t>& ids) {
        std::vector<cnn::LabeledSample> set;
        set.reserve(ids.size());
        for (std::size_t i : ids)
            set.push_back({normalize(dataset.samples[i].input, norm),
                           dataset.samples[i].label});
        return set;
    };
    const auto train_set = make_set(idx.train);
    const auto test_set = make_set(idx.test);

    const std::array<std::size_t, 3> in_shape{2, dataset.config.rows,
                                              dataset.config.cols};
    const auto spec = profile == NetworkProfile::Desk
                          ? cnn::NetworkSpec::desk(in_shape)
                          : cnn::NetworkSpec::paper(in_shape);

    auto trained = cnn::train(spec, train_set, test_set, config);

    ExperimentResult res;
    res.spec = spec;
    res.normalization = norm;
    res.metrics.history = trained.history;
    res.metrics.single_class_validation = trained.single_class_validation;
    res.metrics.epochs_to_threshold =
        epochs_to_threshold(trained.history, 0.9);

    const auto eval = cnn::evaluate(spec, trained.best_state, test_set,
                                    config.threads);
    res.metrics.test_accuracy = eval.accuracy;
    res.metrics.test_loss = eval.mean_loss;
    for (std::size_t i = 0; i < test_set.size(); ++i)
        ++res.metrics.confusion[static_cast<std::size_t>(test_set[i].label)]
                               [static_cast<std::size_t>(eval.predictions[i])];
    res.best_state = std::move(trained.best_state);
    return res;
}

std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<double>& values,
                            const DatasetConfig& base, NetworkProfile profile,
                            const cnn::TrainConfig& train_config,
                            const std::vector<std::uint64_t>& seeds,
                            double threshold) {
    if (values.empty()) throw ParamError("sweep needs at least one value");
    if (seeds.empty()) throw ParamError("sweep needs at least one seed");

    std::vector<SweepRow> rows;
    for (double value : values) {
        DatasetConfig cfg = base;
        if (axis == SweepAxis::Distance)
            cfg.distances = {value};
        else
            cfg.scales = {value};

        std::vector<double> epochs, accs;
        for (std::uint64_t seed : seeds) {
            cfg.seed = seed;
            auto tc = train_config;
            tc.seed = seed;
            const auto ds = build_dataset(cfg);
            const auto res = run_experiment(ds, profile, tc, 0.8, seed);
            epochs.push_back(static_cast<double>(
                epochs_to_threshold(res.metrics.history, threshold)));
            accs.push_back(res.metrics.test_accuracy);
        }

        auto mean_std = [](const std::vector<double>& xs) {
            double m = 0.0;
            for (double x : xs) m += x;
            m /= static_cast<double>(xs.size());
            double v = 0.0;
            for (double x : xs) v += (x - m) * (x - m);
            v /= static_cast<double>(xs.size());
            return std::pair<double, double>{m, std::sqrt(v)};
        };
        SweepRow row;
        row.value = value;
        row.n_seeds = seeds.size();
        std::tie(row.mean_epochs, row.std_epochs) = mean_std(epochs);
        std::tie(row.mean_accuracy, row.std_accuracy) = mean_std(accs);
        rows.push_back(row);
    }
    return rows;
}

void export_sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows,
                      const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << (axis == SweepAxis::Distance ? "distance" : "scale")
      << ",mean_epochs_to_0.9,std_epochs_to_0.9,mean_accuracy,std_accuracy,"
         "seeds\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%zu\n",
                      r.value, r.mean_epochs, r.std_epochs, r.mean_accuracy,
                      r.std_accuracy, r.n_seeds);
        f << buf;
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

} // namespace gmc::pipeline

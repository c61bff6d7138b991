#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gmc/experiment.hpp"

namespace {

using namespace gmc;

int cmd_synth(const pipeline::DatasetConfig& cfg, const std::string& out) {
    const auto ds = pipeline::build_dataset(cfg);
    pipeline::save_dataset(ds, out);
    std::printf("wrote %zu samples to %s (+.blob)\n", ds.samples.size(),
                out.c_str());
    return 0;
}

int cmd_inspect(const std::string& data, const std::vector<std::size_t>& indices,
                const std::string& out_prefix) {
    const auto ds = pipeline::load_dataset(data);
    for (std::size_t idx : indices) {
        if (idx >= ds.samples.size())
            throw ParamError("sample index out of range: " + std::to_string(idx));
        const auto& s = ds.samples[idx];
        for (std::size_t ch = 0; ch < 2; ++ch) {
            tfa::TimeFrequencyMap map;
            map.kind = ds.config.tf_method == pipeline::TfMethod::Stft
                           ? tfa::MapKind::StftMag
                           : tfa::MapKind::CwtMag;
            map.values.assign(ds.config.rows,
                              std::vector<double>(ds.config.cols, 0.0));
            map.freq_axis.resize(ds.config.rows);
            map.time_axis.resize(ds.config.cols);
            for (std::size_t r = 0; r < ds.config.rows; ++r) {
                map.freq_axis[r] = static_cast<double>(r);
                for (std::size_t c = 0; c < ds.config.cols; ++c)
                    map.values[r][c] = s.input.at3(ch, r, c);
            }
            for (std::size_t c = 0; c < ds.config.cols; ++c)
                map.time_axis[c] = static_cast<double>(c);
            const std::string base = out_prefix + "_s" + std::to_string(idx) +
                                     "_rx" + std::to_string(ch + 1);
            tfa::export_pgm(map, base + ".pgm");
            tfa::export_csv(map, base + ".csv");
            std::printf("sample %zu (%s) -> %s.{pgm,csv}\n", idx,
                        to_string(s.meta.params.cls), base.c_str());
        }
    }
    return 0;
}

int cmd_train(const std::string& data, const std::string& profile_name,
              const cnn::TrainConfig& tc, std::uint64_t split_seed,
              const std::string& out) {
    const auto ds = pipeline::load_dataset(data);
    const auto profile = pipeline::profile_from_string(profile_name);
    const auto res = pipeline::run_experiment(ds, profile, tc, 0.8, split_seed);
    cnn::save_checkpoint(out, res.spec, res.best_state, tc.seed);
    pipeline::export_metrics_csv(res.metrics.history, out + ".metrics.csv");
    std::printf("epochs=%zu test_acc=%.4f test_loss=%.4f checkpoint=%s\n",
                res.metrics.history.size(), res.metrics.test_accuracy,
                res.metrics.test_loss, out.c_str());
    return 0;
}

int cmd_eval(const std::string& data, const std::string& checkpoint,
             std::uint64_t split_seed) {
    const auto ds = pipeline::load_dataset(data);
    const auto ck = cnn::load_checkpoint(checkpoint);
    const auto idx = pipeline::split(ds, 0.8, split_seed);
    const auto norm = pipeline::compute_normalization(ds, idx.train);
    std::vector<cnn::LabeledSample> test_set;
    for (std::size_t i : idx.test)
        test_set.push_back({pipeline::normalize(ds.samples[i].input, norm),
                            ds.samples[i].label});
    const auto eval = cnn::evaluate(ck.spec, ck.state, test_set);
    std::array<std::array<std::size_t, 4>, 4> confusion{};
    for (std::size_t i = 0; i < test_set.size(); ++i)
        ++confusion[static_cast<std::size_t>(test_set[i].label)]
                   [static_cast<std::size_t>(eval.predictions[i])];
    std::printf("test_acc=%.4f test_loss=%.4f (n=%zu)\n", eval.accuracy,
                eval.mean_loss, test_set.size());
    std::printf("confusion (rows=true, cols=predicted):\n");
    for (int r = 0; r < 4; ++r) {
        std::printf("  %-6s", to_string(gesture_from_label(r)));
        for (int c = 0; c < 4; ++c) std::printf(" %5zu", confusion[r][c]);
        std::printf("\n");
    }
    return 0;
}

int cmd_sweep(const std::string& axis_name, const std::vector<double>& values,
              const std::vector<std::uint64_t>& seeds,
              const pipeline::DatasetConfig& base,
              const std::string& profile_name, const cnn::TrainConfig& tc,
              const std::string& out) {
    const auto axis = [&] {
        if (axis_name == "distance") return pipeline::SweepAxis::Distance;
        if (axis_name == "scale") return pipeline::SweepAxis::Scale;
        throw ParamError("unknown sweep axis: " + axis_name);
    }();
    const auto rows =
        pipeline::sweep(axis, values, base,
                        pipeline::profile_from_string(profile_name), tc, seeds);
    pipeline::export_sweep_csv(axis, rows, out);
    for (const auto& r : rows)
        std::printf("%s=%.3g epochs_to_0.9=%.2f+-%.2f acc=%.4f+-%.4f\n",
                    axis_name.c_str(), r.value, r.mean_epochs, r.std_epochs,
                    r.mean_accuracy, r.std_accuracy);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Doppler-radar gesture recognition pipeline"};
    app.require_subcommand(1);

    using namespace gmc;
    pipeline::DatasetConfig cfg;
    cnn::TrainConfig tc;
    std::string out, data, checkpoint, profile = "desk", tf = "stft";
    std::string dims = "64x64", axis = "distance";
    std::vector<std::size_t> indices;
    std::vector<double> values;
    std::vector<std::uint64_t> seeds;
    double snr_db = 0.0;
    bool have_snr = false;
    std::uint64_t seed = 0;

    auto parse_dims = [&](pipeline::DatasetConfig& c) {
        const auto x = dims.find('x');
        if (x == std::string::npos)
            throw ParamError("--dims must look like 64x64");
        c.rows = std::stoul(dims.substr(0, x));
        c.cols = std::stoul(dims.substr(x + 1));
    };

    auto* synth = app.add_subcommand("synth", "build a gesture dataset");
    synth->add_option("--classes", cfg.n_classes, "number of gesture classes");
    synth->add_option("--per-class", cfg.per_class,
                      "samples per class/distance/scale cell");
    synth->add_option("--distances", cfg.distances, "distances in meters");
    synth->add_option("--scales", cfg.scales, "gesture scales in meters");
    synth->add_option("--snr-db", snr_db, "SNR in dB at d=0.1 m reference")
        ->trigger_on_parse();
    synth->add_option("--tf", tf, "time-frequency method: stft|cwt");
    synth->add_option("--dims", dims, "CNN input dims, RxC");
    synth->add_option("--seed", cfg.seed, "master seed");
    synth->add_option("--threads", cfg.threads, "worker threads");
    synth->add_option("--out", out, "manifest output path")->required();

    auto* inspect = app.add_subcommand("inspect", "export sample heatmaps");
    inspect->add_option("--data", data, "dataset manifest")->required();
    inspect->add_option("--indices", indices, "sample indices")->required();
    inspect->add_option("--out", out, "output path prefix")->required();

    auto* train = app.add_subcommand("train", "train a classifier");
    train->add_option("--data", data, "dataset manifest")->required();
    train->add_option("--profile", profile, "network profile: desk|paper");
    train->add_option("--epochs", tc.max_epochs, "max epochs");
    train->add_option("--lr", tc.lr0, "initial learning rate");
    train->add_option("--momentum", tc.momentum, "momentum coefficient");
    train->add_option("--batch", tc.batch_size, "mini-batch size");
    train->add_option("--seed", seed, "training and split seed");
    train->add_option("--threads", tc.threads, "worker threads");
    train->add_option("--out", out, "checkpoint output path")->required();

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("--data", data, "dataset manifest")->required();
    eval->add_option("--checkpoint", checkpoint, "GMC1 checkpoint")->required();
    eval->add_option("--seed", seed, "split seed used at training time");

    auto* sweep = app.add_subcommand("sweep", "distance or scale sweep");
    sweep->add_option("--axis", axis, "sweep axis: distance|scale");
    sweep->add_option("--values", values, "axis values")->required();
    sweep->add_option("--seeds", seeds, "seeds, one run each")->required();
    sweep->add_option("--per-class", cfg.per_class, "samples per cell");
    sweep->add_option("--snr-db", snr_db, "SNR in dB at d=0.1 m reference");
    sweep->add_option("--tf", tf, "time-frequency method: stft|cwt");
    sweep->add_option("--dims", dims, "CNN input dims, RxC");
    sweep->add_option("--distance", cfg.distances.front(),
                      "fixed distance for scale sweeps");
    sweep->add_option("--scale", cfg.scales.front(),
                      "fixed scale for distance sweeps");
    sweep->add_option("--profile", profile, "network profile: desk|paper");
    sweep->add_option("--epochs", tc.max_epochs, "max epochs per run");
    sweep->add_option("--batch", tc.batch_size, "mini-batch size");
    sweep->add_option("--threads", tc.threads, "worker threads");
    sweep->add_option("--out", out, "sweep table CSV path")->required();

    try {
        app.parse(argc, argv);
        have_snr = (synth->count("--snr-db") || sweep->count("--snr-db")) > 0;
        if (have_snr) cfg.snr_db = snr_db;
        cfg.tf_method =
            tf == "cwt" ? pipeline::TfMethod::Cwt : pipeline::TfMethod::Stft;
        if (tf != "cwt" && tf != "stft")
            throw ParamError("--tf must be stft or cwt");
        tc.seed = seed;

        if (synth->parsed()) {
            parse_dims(cfg);
            return cmd_synth(cfg, out);
        }
        if (inspect->parsed()) return cmd_inspect(data, indices, out);
        if (train->parsed()) return cmd_train(data, profile, tc, seed, out);
        if (eval->parsed()) return cmd_eval(data, checkpoint, seed);
        if (sweep->parsed()) {
            parse_dims(cfg);
            cfg.threads = tc.threads;
            return cmd_sweep(axis, values, seeds, cfg, profile, tc, out);
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const ParamError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

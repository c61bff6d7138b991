#include "gmc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <thread>

namespace gmc::pipeline {

void DatasetConfig::validate() const {
    if (n_classes < 1 || n_classes > 4)
        throw ParamError("n_classes must be in 1..4");
    if (per_class < 1) throw ParamError("per_class must be >= 1");
    if (distances.empty()) throw ParamError("distances must be non-empty");
    for (double d : distances)
        if (!(d >= 0.05)) throw ParamError("distances must be >= 0.05 m");
    if (scales.empty()) throw ParamError("scales must be non-empty");
    for (double s : scales)
        if (!(s > 0.0)) throw ParamError("scales must be > 0");
    if (rows < 1 || cols < 1) throw ParamError("input dims must be >= 1");
    if (!(sample_rate > 0.0)) throw ParamError("sample_rate must be > 0");
    if (!(duration > 0.0)) throw ParamError("duration must be > 0");
    if (jitter_groups < 1) throw ParamError("jitter_groups must be >= 1");
}

nlohmann::json DatasetConfig::to_json() const {
    nlohmann::json j;
    j["n_classes"] = n_classes;
    j["per_class"] = per_class;
    j["distances"] = distances;
    j["scales"] = scales;
    if (snr_db)
        j["snr_db"] = *snr_db;
    else
        j["snr_db"] = nullptr;
    if (dither_snr_db)
        j["dither_snr_db"] = *dither_snr_db;
    else
        j["dither_snr_db"] = nullptr;
    j["tf_method"] = tf_method == TfMethod::Stft ? "stft" : "cwt";
    j["rows"] = rows;
    j["cols"] = cols;
    j["seed"] = seed;
    j["sample_rate"] = sample_rate;
    j["duration"] = duration;
    j["jitter_groups"] = jitter_groups;
    return j;
}

DatasetConfig DatasetConfig::from_json(const nlohmann::json& j) {
    DatasetConfig c;
    if (j.contains("n_classes")) c.n_classes = j.at("n_classes").get<std::size_t>();
    c.per_class = j.at("per_class").get<std::size_t>();
    c.distances = j.at("distances").get<std::vector<double>>();
    c.scales = j.at("scales").get<std::vector<double>>();
    if (!j.at("snr_db").is_null()) c.snr_db = j.at("snr_db").get<double>();
    if (j.contains("dither_snr_db")) {
        if (j.at("dither_snr_db").is_null())
            c.dither_snr_db.reset();
        else
            c.dither_snr_db = j.at("dither_snr_db").get<double>();
    }
    c.tf_method = j.at("tf_method").get<std::string>() == "cwt" ? TfMethod::Cwt
                                                                : TfMethod::Stft;
    c.rows = j.at("rows").get<std::size_t>();
    c.cols = j.at("cols").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.sample_rate = j.at("sample_rate").get<double>();
    c.duration = j.at("duration").get<double>();
    c.jitter_groups = j.at("jitter_groups").get<std::size_t>();
    c.validate();
    return c;
}

double range_scaled_snr(double snr_db, double distance_m) {
    return snr_db + 40.0 * std::log10(kSnrReferenceDistance / distance_m);
}

namespace {

// Speed-jitter level per "volunteer" group.
double jitter_for_group(std::size_t group, std::size_t n_groups) {
    if (n_groups <= 1) return 0.1;
    return 0.05 + 0.30 * static_cast<double>(group) /
                      static_cast<double>(n_groups - 1);
}

tfa::TimeFrequencyMap tf_map_for_channel(
    const std::vector<std::complex<double>>& channel, double fs,
    TfMethod method) {
    tfa::TimeFrequencyMap map;
    if (method == TfMethod::Stft) {
        tfa::WindowSpec win{tfa::WindowKind::Hann, 128, 0.0};
        const auto s = tfa::stft(channel, fs, win, 6, 256);
        map = tfa::spectrogram(s, /*log_scale=*/false);
    } else {
        const auto spec = tfa::geometric_scales(1.0, 100.0, 256, fs);
        const auto c = tfa::cwt(channel, fs, spec, /*use_fft=*/true);
        map = tfa::scalogram(c, /*log_scale=*/false);
    }
    // Power (squared magnitude) keeps the Doppler ridge sparse and
    // high-contrast, which the small-variance weight init needs to get
    // usable first-layer pre-activation swings.
    for (auto& row : map.values)
        for (auto& v : row) v *= v;
    return map;
}

} // namespace

void standardize_per_sample(Tensor& input) {
    double sum = 0.0, sq = 0.0;
    for (double v : input.data) {
        sum += v;
        sq += v * v;
    }
    const double n = static_cast<double>(input.data.size());
    const double mean = sum / n;
    const double sd = std::sqrt(std::max(sq / n - mean * mean, 1e-24));
    for (auto& v : input.data) v = (v - mean) / sd;
}

namespace {

// Power-combine the link SNR with the augmentation noise floor: two
// independent AWGN sources add in power.
std::optional<double> combined_snr(std::optional<double> link,
                                   std::optional<double> floor) {
    if (!link) return floor;
    if (!floor) return link;
    const double p =
        std::pow(10.0, -*link / 10.0) + std::pow(10.0, -*floor / 10.0);
    return -10.0 * std::log10(p);
}

} // namespace

Tensor synthesize_input(const GestureParams& params,
                        std::optional<double> effective_snr_db,
                        std::uint64_t noise_seed, const DatasetConfig& config,
                        tfa::TimeFrequencyMap* raw_maps) {
    const RadarGeometry geometry;
    const auto traj = generate_trajectory(params, geometry, config.sample_rate);
    const auto sig = simulate_baseband(
        traj, geometry, AmplitudeModel::InverseR2,
        combined_snr(effective_snr_db, config.dither_snr_db), noise_seed);
    const auto channels = complex_channels(sig);

    Tensor input({2, config.rows, config.cols});
    for (int k = 0; k < 2; ++k) {
        auto map = tf_map_for_channel(channels[k], sig.sample_rate,
                                      config.tf_method);
        if (raw_maps && k == 0) *raw_maps = map;
        const auto resized = tfa::resize_bilinear(map, config.rows, config.cols);
        for (std::size_t r = 0; r < config.rows; ++r)
            for (std::size_t c = 0; c < config.cols; ++c)
                input.at3(static_cast<std::size_t>(k), r, c) =
                    resized.values[r][c];
    }
    standardize_per_sample(input);
    return input;
}

Dataset build_dataset(const DatasetConfig& config) {
    config.validate();
    Dataset ds;
    ds.config = config;

    struct Plan {
        GestureParams params;
        std::optional<double> snr;
        std::uint64_t noise_seed;
        int label;
    };
    std::vector<Plan> plans;
    std::size_t idx = 0;
    for (int cls = 0; cls < static_cast<int>(config.n_classes); ++cls) {
        for (double d : config.distances) {
            for (double r : config.scales) {
                for (std::size_t rep = 0; rep < config.per_class; ++rep) {
                    Plan p;
                    p.params.cls = gesture_from_label(cls);
                    p.params.scale_r = r;
                    p.params.distance_d = d;
                    p.params.duration = config.duration;
                    p.params.speed_jitter = jitter_for_group(
                        rep % config.jitter_groups, config.jitter_groups);
                    p.params.seed = mix_seed(config.seed, 2 * idx);
                    p.noise_seed = mix_seed(config.seed, 2 * idx + 1);
                    if (config.snr_db)
                        p.snr = range_scaled_snr(*config.snr_db, d);
                    p.label = cls;
                    plans.push_back(p);
                    ++idx;
                }
            }
        }
    }

    ds.samples.resize(plans.size());
    const unsigned t = std::max(1u, std::min<unsigned>(
        config.threads, static_cast<unsigned>(plans.size())));
    std::vector<std::thread> pool;
    std::exception_ptr err;
    const std::size_t chunk = (plans.size() + t - 1) / t;
    for (unsigned ti = 0; ti < t; ++ti) {
        const std::size_t lo = std::min(ti * chunk, plans.size());
        const std::size_t hi = std::min(lo + chunk, plans.size());
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) {
                    Sample s;
                    s.input = synthesize_input(plans[i].params, plans[i].snr,
                                               plans[i].noise_seed, config);
                    s.label = plans[i].label;
                    s.meta.params = plans[i].params;
                    s.meta.snr_db = plans[i].snr;
                    s.meta.noise_seed = plans[i].noise_seed;
                    ds.samples[i] = std::move(s);
                }
            } catch (...) {
                err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
    return ds;
}

SplitIndices split(const Dataset& dataset, double train_fraction,
                   std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ParamError("train_fraction must be in (0, 1)");
    std::vector<std::vector<std::size_t>> by_class(4);
    for (std::size_t i = 0; i < dataset.samples.size(); ++i)
        by_class[static_cast<std::size_t>(dataset.samples[i].label)].push_back(i);

    SplitIndices out;
    for (std::size_t cls = 0; cls < 4; ++cls) {
        auto& idx = by_class[cls];
        if (idx.empty()) continue;
        if (idx.size() < 2)
            throw ParamError("class with fewer than 2 samples cannot be split");
        std::mt19937_64 rng(mix_seed(seed, cls));
        std::shuffle(idx.begin(), idx.end(), rng);
        std::size_t n_train = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(idx.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        out.train.insert(out.train.end(), idx.begin(), idx.begin() + n_train);
        out.test.insert(out.test.end(), idx.begin() + n_train, idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

Normalization compute_normalization(const Dataset& dataset,
                                    const std::vector<std::size_t>& train_idx) {
    if (train_idx.empty()) throw ParamError("empty training split");
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i : train_idx) {
        for (double v : dataset.samples[i].input.data) {
            sum += v;
            sq += v * v;
            ++n;
        }
    }
    Normalization norm;
    norm.mean = sum / static_cast<double>(n);
    const double var = sq / static_cast<double>(n) - norm.mean * norm.mean;
    norm.std_dev = std::sqrt(std::max(var, 1e-24));
    return norm;
}

Tensor normalize(const Tensor& input, const Normalization& norm) {
    Tensor out = input;
    for (auto& v : out.data) v = (v - norm.mean) / norm.std_dev;
    return out;
}

void save_dataset(const Dataset& dataset, const std::string& manifest_path) {
    const std::string blob_path = manifest_path + ".blob";
    std::ofstream blob(blob_path, std::ios::binary);
    if (!blob) throw std::runtime_error("cannot open for writing: " + blob_path);

    nlohmann::json manifest;
    manifest["format"] = "GDS1";
    manifest["version"] = 1;
    manifest["config"] = dataset.config.to_json();
    manifest["input_shape"] = {std::size_t{2}, dataset.config.rows,
                               dataset.config.cols};
    auto arr = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& s : dataset.samples) {
        nlohmann::json sj;
        sj["label"] = s.label;
        sj["class"] = to_string(s.meta.params.cls);
        sj["distance"] = s.meta.params.distance_d;
        sj["scale"] = s.meta.params.scale_r;
        sj["duration"] = s.meta.params.duration;
        sj["speed_jitter"] = s.meta.params.speed_jitter;
        sj["seed"] = s.meta.params.seed;
        sj["noise_seed"] = s.meta.noise_seed;
        if (s.meta.snr_db)
            sj["snr_db"] = *s.meta.snr_db;
        else
            sj["snr_db"] = nullptr;
        sj["offset"] = offset;
        arr.push_back(std::move(sj));
        for (double v : s.input.data) {
            const float x = static_cast<float>(v);
            blob.write(reinterpret_cast<const char*>(&x), sizeof x);
        }
        offset += s.input.size();
    }
    manifest["samples"] = std::move(arr);
    if (!blob) throw std::runtime_error("write failed: " + blob_path);

    std::ofstream mf(manifest_path);
    if (!mf) throw std::runtime_error("cannot open for writing: " + manifest_path);
    mf << manifest.dump(2) << '\n';
    if (!mf) throw std::runtime_error("write failed: " + manifest_path);
}

Dataset load_dataset(const std::string& manifest_path) {
    std::ifstream mf(manifest_path);
    if (!mf) throw std::runtime_error("cannot open: " + manifest_path);
    nlohmann::json manifest;
    mf >> manifest;
    if (manifest.at("format").get<std::string>() != "GDS1")
        throw std::runtime_error("bad dataset format tag");

    Dataset ds;
    ds.config = DatasetConfig::from_json(manifest.at("config"));
    const auto shape = manifest.at("input_shape").get<std::vector<std::size_t>>();

    const std::string blob_path = manifest_path + ".blob";
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw std::runtime_error("cannot open: " + blob_path);

    for (const auto& sj : manifest.at("samples")) {
        Sample s;
        s.label = sj.at("label").get<int>();
        s.meta.params.cls = gesture_from_label(s.label);
        s.meta.params.distance_d = sj.at("distance").get<double>();
        s.meta.params.scale_r = sj.at("scale").get<double>();
        s.meta.params.duration = sj.at("duration").get<double>();
        s.meta.params.speed_jitter = sj.at("speed_jitter").get<double>();
        s.meta.params.seed = sj.at("seed").get<std::uint64_t>();
        s.meta.noise_seed = sj.at("noise_seed").get<std::uint64_t>();
        if (!sj.at("snr_db").is_null())
            s.meta.snr_db = sj.at("snr_db").get<double>();
        s.input = Tensor({shape[0], shape[1], shape[2]});
        blob.seekg(static_cast<std::streamoff>(
            sj.at("offset").get<std::size_t>() * sizeof(float)));
        for (auto& v : s.input.data) {
            float x = 0.0f;
            blob.read(reinterpret_cast<char*>(&x), sizeof x);
            v = static_cast<double>(x);
        }
        if (!blob) throw std::runtime_error("truncated dataset blob");
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

} // namespace gmc::pipeline

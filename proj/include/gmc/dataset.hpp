#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gmc/signal_synth.hpp"
#include "gmc/tfa.hpp"
#include "gmc/tensor.hpp"

#include <json.hpp>

namespace gmc::pipeline {

enum class TfMethod { Stft, Cwt };

struct DatasetConfig {
    std::size_t n_classes = 4; // first n of the four gesture classes
    std::size_t per_class = 25;
    std::vector<double> distances{0.2};
    std::vector<double> scales{0.2};
    std::optional<double> snr_db;      // anchored at d_ref = 0.1 m
    // Optional noise-injection floor (augmentation): when set, seeded
    // AWGN at this SNR is always present, power-combined with the link
    // noise above.
    std::optional<double> dither_snr_db;
    TfMethod tf_method = TfMethod::Stft;
    std::size_t rows = 64, cols = 64;  // CNN input dims per channel
    std::uint64_t seed = 0;
    double sample_rate = 600.0;
    double duration = 1.0;
    std::size_t jitter_groups = 4;     // "volunteer" speed-jitter groups
    unsigned threads = 4;

    void validate() const;
    nlohmann::json to_json() const;
    static DatasetConfig from_json(const nlohmann::json& j);
};

inline constexpr double kSnrReferenceDistance = 0.1; // m

// SNR falls off with the two-way 1/d^4 return-power law.
double range_scaled_snr(double snr_db, double distance_m);

struct SampleMeta {
    GestureParams params;
    std::optional<double> snr_db; // effective, after range scaling
    std::uint64_t noise_seed = 0;
};

struct Sample {
    Tensor input; // (2, rows, cols): one TF map per receiver
    int label = 0;
    SampleMeta meta;
};

struct Normalization {
    double mean = 0.0;
    double std_dev = 1.0;
};

struct Dataset {
    std::vector<Sample> samples;
    DatasetConfig config;
    std::optional<Normalization> normalization; // train-split stats only
};

// Full factorial over classes x distances x scales x per_class; each
// sample runs the synth -> complex channels -> TF -> resize chain.
Dataset build_dataset(const DatasetConfig& config);

// Zero-mean/unit-std standardization over one sample's own values.
// Applied at build time so that channel amplitude scaling upstream of
// the TF map cancels out.
void standardize_per_sample(Tensor& input);

// Builds the (2, rows, cols) input tensor for one parameter set.
Tensor synthesize_input(const GestureParams& params,
                        std::optional<double> effective_snr_db,
                        std::uint64_t noise_seed, const DatasetConfig& config,
                        tfa::TimeFrequencyMap* raw_maps = nullptr);

struct SplitIndices {
    std::vector<std::size_t> train, test;
};
// Stratified, seeded, disjoint.
SplitIndices split(const Dataset& dataset, double train_fraction,
                   std::uint64_t seed);

Normalization compute_normalization(const Dataset& dataset,
                                    const std::vector<std::size_t>& train_idx);
Tensor normalize(const Tensor& input, const Normalization& norm);

// "GDS1" container: JSON manifest plus a little-endian float32 blob of
// the stacked sample tensors. blob path = manifest path with ".blob".
void save_dataset(const Dataset& dataset, const std::string& manifest_path);
Dataset load_dataset(const std::string& manifest_path);

} // namespace gmc::pipeline

#pragma once

#include <cstdint>
#include <vector>

#include "gmc/network.hpp"

namespace gmc::cnn {

struct LabeledSample {
    Tensor input;
    int label = 0;
};

struct TrainConfig {
    double lr0 = 0.01;
    double momentum = 0.9;
    double wd_coupling = 0.0005; // weight decay times lr in the update
    double lr_drop_factor = 0.1;
    double lr_floor = 1e-5;
    double improve_threshold = 1e-4;
    std::size_t plateau_patience = 3; // epochs without improvement
    std::size_t max_epochs = 50;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    unsigned threads = 4;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    double lr = 0.0;
    double train_loss = 0.0, train_acc = 0.0;
    double val_loss = 0.0, val_acc = 0.0;
};

struct TrainResult {
    ModelState best_state;          // lowest validation error seen
    std::size_t best_epoch = 0;     // 1-based
    double best_val_error = 1.0;
    std::vector<EpochRecord> history;
    bool single_class_validation = false;
};

struct EvalResult {
    double mean_loss = 0.0;
    double accuracy = 0.0;
    std::vector<int> predictions;
};

EvalResult evaluate(const NetworkSpec& spec, const ModelState& state,
                    const std::vector<LabeledSample>& samples,
                    unsigned threads = 4);

// Mini-batch SGD with seeded shuffling, plateau-triggered lr drops and
// the stop rules: zero validation error, lr under the floor, max epochs.
TrainResult train(const NetworkSpec& spec,
                  const std::vector<LabeledSample>& train_set,
                  const std::vector<LabeledSample>& val_set,
                  const TrainConfig& config);

} // namespace gmc::cnn

#pragma once

#include <array>
#include <string>
#include <vector>

#include "gmc/dataset.hpp"
#include "gmc/train.hpp"

namespace gmc::pipeline {

enum class NetworkProfile { Desk, Paper };

NetworkProfile profile_from_string(const std::string& name);

struct Metrics {
    std::vector<cnn::EpochRecord> history;
    std::array<std::array<std::size_t, 4>, 4> confusion{}; // [true][pred]
    double test_accuracy = 0.0;
    double test_loss = 0.0;
    std::size_t epochs_to_threshold = 0; // history.size()+1 if never reached
    bool single_class_validation = false;
};

// First epoch (1-based) whose validation accuracy reaches theta, or
// history.size()+1 when it never does.
std::size_t epochs_to_threshold(const std::vector<cnn::EpochRecord>& history,
                                double theta);

// Columns fixed: epoch,lr,train_loss,train_acc,test_loss,test_acc.
void export_metrics_csv(const std::vector<cnn::EpochRecord>& history,
                        const std::string& path);

struct ExperimentResult {
    Metrics metrics;
    cnn::NetworkSpec spec;
    cnn::ModelState best_state;
    Normalization normalization;
};

// Splits 80/20 (stratified, split_seed), normalizes on the training
// split, trains per the config and evaluates the best state on the
// test split.
ExperimentResult run_experiment(const Dataset& dataset, NetworkProfile profile,
                                const cnn::TrainConfig& config,
                                double train_fraction = 0.8,
                                std::uint64_t split_seed = 0);

enum class SweepAxis { Distance, Scale };

struct SweepRow {
    double value = 0.0;
    double mean_epochs = 0.0, std_epochs = 0.0;
    double mean_accuracy = 0.0, std_accuracy = 0.0;
    std::size_t n_seeds = 0;
};

// Per axis value and seed: build an otherwise-identical dataset, train,
// and aggregate epochs_to_threshold(0.9) and final test accuracy.
std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<double>& values,
                            const DatasetConfig& base, NetworkProfile profile,
                            const cnn::TrainConfig& train_config,
                            const std::vector<std::uint64_t>& seeds,
                            double threshold = 0.9);

void export_sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows,
                      const std::string& path);

} // namespace gmc::pipeline

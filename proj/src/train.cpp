#include "gmc/train.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace gmc::cnn {

void TrainConfig::validate() const {
    if (!(lr0 > lr_floor && lr_floor > 0.0))
        throw ParamError("need lr0 > lr_floor > 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw ParamError("momentum must be in [0, 1)");
    if (!(lr_drop_factor > 0.0 && lr_drop_factor < 1.0))
        throw ParamError("lr_drop_factor must be in (0, 1)");
    if (plateau_patience < 1) throw ParamError("plateau_patience must be >= 1");
    if (max_epochs < 1) throw ParamError("max_epochs must be >= 1");
    if (batch_size < 1) throw ParamError("batch_size must be >= 1");
    if (threads < 1) throw ParamError("threads must be >= 1");
}

namespace {

// Chunked parallel-for; chunk partition and reduction order are fixed
// by (n, threads) so results are deterministic.
template <typename Fn>
void parallel_chunks(std::size_t n, unsigned threads, Fn&& fn) {
    const unsigned t = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1)));
    if (t <= 1) {
        fn(0u, std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + t - 1) / t;
    for (unsigned i = 0; i < t; ++i) {
        const std::size_t lo = std::min<std::size_t>(i * chunk, n);
        const std::size_t hi = std::min<std::size_t>(lo + chunk, n);
        if (lo >= hi) break;
        pool.emplace_back([&, i, lo, hi] { fn(i, lo, hi); });
    }
    for (auto& th : pool) th.join();
}

} // namespace

EvalResult evaluate(const NetworkSpec& spec, const ModelState& state,
                    const std::vector<LabeledSample>& samples,
                    unsigned threads) {
    if (samples.empty()) throw ParamError("empty evaluation set");
    EvalResult res;
    res.predictions.assign(samples.size(), -1);
    std::vector<double> losses(samples.size(), 0.0);
    std::exception_ptr err;
    parallel_chunks(samples.size(), threads,
                    [&](unsigned, std::size_t lo, std::size_t hi) {
        try {
            for (std::size_t i = lo; i < hi; ++i) {
                const Tensor logits =
                    forward_logits(spec, state, samples[i].input);
                losses[i] = softmax_cross_entropy(logits, samples[i].label).value;
                res.predictions[i] = static_cast<int>(
                    std::max_element(logits.data.begin(), logits.data.end()) -
                    logits.data.begin());
            }
        } catch (...) {
            err = std::current_exception();
        }
    });
    if (err) std::rethrow_exception(err);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        res.mean_loss += losses[i];
        if (res.predictions[i] == samples[i].label) ++correct;
    }
    res.mean_loss /= static_cast<double>(samples.size());
    res.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
    return res;
}

TrainResult train(const NetworkSpec& spec,
                  const std::vector<LabeledSample>& train_set,
                  const std::vector<LabeledSample>& val_set,
                  const TrainConfig& config) {
    config.validate();
    if (train_set.empty()) throw ParamError("empty training set");
    if (val_set.empty()) throw ParamError("empty validation set");
    for (const auto& s : train_set)
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= spec.n_classes)
            throw ParamError("training label out of range");

    TrainResult result;
    result.single_class_validation =
        std::all_of(val_set.begin(), val_set.end(), [&](const LabeledSample& s) {
            return s.label == val_set.front().label;
        });

    ModelState state = init(spec, config.seed);
    std::mt19937_64 shuffle_rng(mix_seed(config.seed, 0x51u));

    double lr = config.lr0;
    double best_plateau_loss = std::numeric_limits<double>::infinity();
    std::size_t epochs_since_improve = 0;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double train_loss_sum = 0.0;
        std::size_t train_correct = 0;

        for (std::size_t start = 0; start < order.size();
             start += config.batch_size) {
            const std::size_t count =
                std::min(config.batch_size, order.size() - start);
            const unsigned t = std::min<unsigned>(
                config.threads, static_cast<unsigned>(count));
            std::vector<GradList> partial(t);
            std::vector<double> partial_loss(t, 0.0);
            std::vector<std::size_t> partial_correct(t, 0);
            std::exception_ptr err;
            parallel_chunks(count, config.threads,
                            [&](unsigned ti, std::size_t lo, std::size_t hi) {
                try {
                    GradList acc = zero_grads(state);
                    for (std::size_t i = lo; i < hi; ++i) {
                        const auto& s = train_set[order[start + i]];
                        ForwardCache cache;
                        const Tensor logits =
                            forward_logits(spec, state, s.input, &cache);
                        const auto loss = softmax_cross_entropy(logits, s.label);
                        partial_loss[ti] += loss.value;
                        const int pred = static_cast<int>(
                            std::max_element(logits.data.begin(),
                                             logits.data.end()) -
                            logits.data.begin());
                        if (pred == s.label) ++partial_correct[ti];
                        accumulate(acc,
                                   backward(spec, state, cache, loss.grad_logits));
                    }
                    partial[ti] = std::move(acc);
                } catch (...) {
                    err = std::current_exception();
                }
            });
            if (err) std::rethrow_exception(err);

            GradList batch_grads = std::move(partial[0]);
            for (unsigned ti = 1; ti < t; ++ti)
                accumulate(batch_grads, partial[ti]);
            scale_grads(batch_grads, 1.0 / static_cast<double>(count));
            sgd_step(state, batch_grads, lr, config.momentum,
                     config.wd_coupling);

            for (unsigned ti = 0; ti < t; ++ti) {
                train_loss_sum += partial_loss[ti];
                train_correct += partial_correct[ti];
            }
        }

        const auto val = evaluate(spec, state, val_set, config.threads);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        rec.train_loss = train_loss_sum / static_cast<double>(train_set.size());
        rec.train_acc = static_cast<double>(train_correct) /
                        static_cast<double>(train_set.size());
        rec.val_loss = val.mean_loss;
        rec.val_acc = val.accuracy;
        result.history.push_back(rec);

        const double val_error = 1.0 - val.accuracy;
        if (result.history.size() == 1 || val_error < result.best_val_error) {
            result.best_val_error = val_error;
            result.best_epoch = epoch;
            result.best_state = state;
        }

        if (val_error == 0.0) break;

        if (val.mean_loss < best_plateau_loss - config.improve_threshold) {
            best_plateau_loss = val.mean_loss;
            epochs_since_improve = 0;
        } else {
            ++epochs_since_improve;
            if (epochs_since_improve >= config.plateau_patience) {
                const double next_lr = lr * config.lr_drop_factor;
                epochs_since_improve = 0;
                if (next_lr < config.lr_floor) break; // schedule exhausted
                lr = next_lr;
            }
        }
    }
    return result;
}

} // namespace gmc::cnn

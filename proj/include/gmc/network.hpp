#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gmc/layers.hpp"

#include <json.hpp>

namespace gmc::cnn {

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    std::array<std::size_t, 3> input_shape{}; // channels, rows, cols
    std::size_t n_classes = 4;

    // Validates shape chaining and the final-softmax invariant; returns
    // the per-layer output shapes.
    std::vector<std::vector<std::size_t>> validate() const;

    // Conv/Pool x2 + FC x2, 8->16 maps; for small inputs.
    static NetworkSpec desk(std::array<std::size_t, 3> input,
                            std::size_t n_classes = 4);
    // Conv/Pool x4 + FC x2, 64 maps throughout.
    static NetworkSpec paper(std::array<std::size_t, 3> input,
                             std::size_t n_classes = 4);

    nlohmann::json to_json() const;
    static NetworkSpec from_json(const nlohmann::json& j);
};

// Per-parameter-layer weights, biases and momentum buffers (Eq-style
// velocity terms), aligned by index with NetworkSpec::layers.
struct ModelState {
    struct Params {
        Tensor w, b, vw, vb;
        bool present = false;
    };
    std::vector<Params> layers;
    std::uint64_t iteration = 0;
};

// Weights ~ N(0, 0.005^2); biases 1 in conv layers #1 and #3 and in
// hidden FC layers, 0 elsewhere; momentum buffers zeroed.
ModelState init(const NetworkSpec& spec, std::uint64_t seed);

struct ForwardCache {
    std::vector<Tensor> inputs;                   // input to each layer
    std::vector<std::vector<std::size_t>> argmax; // per pool layer index
    Tensor logits;
};

// Runs every layer up to (not including) the final Softmax.
Tensor forward_logits(const NetworkSpec& spec, const ModelState& state,
                      const Tensor& input, ForwardCache* cache = nullptr);

using GradList = std::vector<ModelState::Params>; // only w/b used as grads

// Reverse-mode gradients for all parameters given a cached forward pass.
GradList backward(const NetworkSpec& spec, const ModelState& state,
                  const ForwardCache& cache, const Tensor& grad_logits);

void accumulate(GradList& into, const GradList& grads);
void scale_grads(GradList& grads, double factor);
GradList zero_grads(const ModelState& state);

// v <- momentum*v - wd_coupling*lr*w - lr*g; w <- w + v. Applied to
// biases as well. Non-finite gradients are a hard error.
void sgd_step(ModelState& state, const GradList& grads, double lr,
              double momentum = 0.9, double wd_coupling = 0.0005);

struct Prediction {
    int label = 0;
    std::vector<double> probabilities;
};
Prediction predict(const NetworkSpec& spec, const ModelState& state,
                   const Tensor& input);

// Checkpoint: "GMC1" magic line, one-line JSON header, then per-layer
// little-endian float32 blobs (weights, biases, then both momenta).
void save_checkpoint(const std::string& path, const NetworkSpec& spec,
                     const ModelState& state, std::uint64_t seed);
struct Checkpoint {
    NetworkSpec spec;
    ModelState state;
    std::uint64_t seed = 0;
};
Checkpoint load_checkpoint(const std::string& path);

} // namespace gmc::cnn

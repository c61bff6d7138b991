#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmc/tensor.hpp"

namespace gmc::cnn {

enum class Padding { Same, Valid };

struct LayerSpec {
    enum class Type { Conv, ReLU, MaxPoolOverlap, Flatten, FullyConnected, Softmax };
    Type type = Type::ReLU;

    // Conv
    std::size_t in_maps = 0, out_maps = 0, kernel = 0;
    Padding padding = Padding::Same;
    // MaxPoolOverlap
    std::size_t pool_p = 0, pool_s = 0;
    // FullyConnected
    std::size_t fc_in = 0, fc_out = 0;

    static LayerSpec conv(std::size_t in, std::size_t out, std::size_t k,
                          Padding pad = Padding::Same);
    static LayerSpec relu();
    static LayerSpec maxpool(std::size_t p, std::size_t s);
    static LayerSpec flatten();
    static LayerSpec fully_connected(std::size_t in, std::size_t out);
    static LayerSpec softmax();
};

// --- layer ops ------------------------------------------------------

// Cross-correlation (no kernel flip) summed over input maps, plus bias.
// `same` zero-pads by (k-1)/2 and preserves rows x cols.
Tensor conv_forward(const Tensor& input, const Tensor& weights,
                    const Tensor& bias, Padding padding);

struct ConvGrads {
    Tensor grad_input, grad_weights, grad_bias;
};
ConvGrads conv_backward(const Tensor& input, const Tensor& weights,
                        Padding padding, const Tensor& grad_output);

Tensor relu(const Tensor& input);
// Gradient gates on the sign of the pre-activation; exactly 0 passes 0.
Tensor relu_backward(const Tensor& pre_activation, const Tensor& grad_output);

struct PoolResult {
    Tensor output;
    std::vector<std::size_t> argmax; // flat input index per output element
};
// p x p windows with stride s per map; out dim = floor((n-p)/s)+1.
// Ties break toward the lowest flat index.
PoolResult maxpool_overlap(const Tensor& input, std::size_t p, std::size_t s);
Tensor maxpool_backward(const std::vector<std::size_t>& input_shape,
                        const std::vector<std::size_t>& argmax,
                        const Tensor& grad_output);

// y = W x + b with W of shape (out, in).
Tensor fc_forward(const Tensor& input, const Tensor& weights,
                  const Tensor& bias);
struct FcGrads {
    Tensor grad_input, grad_weights, grad_bias;
};
FcGrads fc_backward(const Tensor& input, const Tensor& weights,
                    const Tensor& grad_output);

std::vector<double> softmax(const std::vector<double>& logits);

struct LossResult {
    double value = 0.0;
    Tensor grad_logits;
};
// Softmax cross-entropy with max-subtraction stabilization.
LossResult softmax_cross_entropy(const Tensor& logits, int label);

} // namespace gmc::cnn

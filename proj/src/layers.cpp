#include "gmc/layers.hpp"

#include <algorithm>
#include <limits>

namespace gmc::cnn {

LayerSpec LayerSpec::conv(std::size_t in, std::size_t out, std::size_t k,
                          Padding pad) {
    if (in == 0 || out == 0) throw ParamError("conv map counts must be > 0");
    if (k == 0 || k % 2 == 0) throw ParamError("conv kernel must be odd-sized");
    LayerSpec s;
    s.type = Type::Conv;
    s.in_maps = in;
    s.out_maps = out;
    s.kernel = k;
    s.padding = pad;
    return s;
}

LayerSpec LayerSpec::relu() {
    LayerSpec s;
    s.type = Type::ReLU;
    return s;
}

LayerSpec LayerSpec::maxpool(std::size_t p, std::size_t s_) {
    if (p < 1 || s_ < 1) throw ParamError("pool p and s must be >= 1");
    LayerSpec s;
    s.type = Type::MaxPoolOverlap;
    s.pool_p = p;
    s.pool_s = s_;
    return s;
}

LayerSpec LayerSpec::flatten() {
    LayerSpec s;
    s.type = Type::Flatten;
    return s;
}

LayerSpec LayerSpec::fully_connected(std::size_t in, std::size_t out) {
    if (in == 0 || out == 0) throw ParamError("fc dims must be > 0");
    LayerSpec s;
    s.type = Type::FullyConnected;
    s.fc_in = in;
    s.fc_out = out;
    return s;
}

LayerSpec LayerSpec::softmax() {
    LayerSpec s;
    s.type = Type::Softmax;
    return s;
}

Tensor conv_forward(const Tensor& input, const Tensor& weights,
                    const Tensor& bias, Padding padding) {
    if (input.shape.size() != 3 || weights.shape.size() != 4)
        throw ParamError("conv expects (C,H,W) input and (O,C,k,k) weights");
    const std::size_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
    const std::size_t O = weights.shape[0], k = weights.shape[2];
    if (weights.shape[1] != C) throw ParamError("conv channel mismatch");
    if (weights.shape[3] != k || bias.size() != O)
        throw ParamError("conv weight/bias shape mismatch");

    const std::size_t pad = padding == Padding::Same ? (k - 1) / 2 : 0;
    if (H + 2 * pad < k || W + 2 * pad < k)
        throw ParamError("conv kernel larger than padded input");
    const std::size_t oh = H + 2 * pad - k + 1, ow = W + 2 * pad - k + 1;

    Tensor out({O, oh, ow});
    for (std::size_t o = 0; o < O; ++o) {
        for (std::size_t r = 0; r < oh; ++r) {
            for (std::size_t c = 0; c < ow; ++c) {
                double acc = bias.data[o];
                for (std::size_t ci = 0; ci < C; ++ci) {
                    for (std::size_t kr = 0; kr < k; ++kr) {
                        const long ir = static_cast<long>(r + kr) - static_cast<long>(pad);
                        if (ir < 0 || ir >= static_cast<long>(H)) continue;
                        const double* in_row =
                            &input.data[(ci * H + static_cast<std::size_t>(ir)) * W];
                        const double* w_row =
                            &weights.data[((o * C + ci) * k + kr) * k];
                        for (std::size_t kc = 0; kc < k; ++kc) {
                            const long ic = static_cast<long>(c + kc) - static_cast<long>(pad);
                            if (ic < 0 || ic >= static_cast<long>(W)) continue;
                            acc += in_row[ic] * w_row[kc];
                        }
                    }
                }
                out.at3(o, r, c) = acc;
            }
        }
    }
    return out;
}

ConvGrads conv_backward(const Tensor& input, const Tensor& weights,
                        Padding padding, const Tensor& grad_output) {
    const std::size_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
    const std::size_t O = weights.shape[0], k = weights.shape[2];
    const std::size_t pad = padding == Padding::Same ? (k - 1) / 2 : 0;
    const std::size_t oh = grad_output.shape[1], ow = grad_output.shape[2];
    if (grad_output.shape[0] != O) throw ParamError("conv grad shape mismatch");

    ConvGrads g{Tensor(input.shape), Tensor(weights.shape),
                Tensor({O})};
    for (std::size_t o = 0; o < O; ++o) {
        for (std::size_t r = 0; r < oh; ++r) {
            for (std::size_t c = 0; c < ow; ++c) {
                const double go = grad_output.at3(o, r, c);
                g.grad_bias.data[o] += go;
                for (std::size_t ci = 0; ci < C; ++ci) {
                    for (std::size_t kr = 0; kr < k; ++kr) {
                        const long ir = static_cast<long>(r + kr) - static_cast<long>(pad);
                        if (ir < 0 || ir >= static_cast<long>(H)) continue;
                        for (std::size_t kc = 0; kc < k; ++kc) {
                            const long ic = static_cast<long>(c + kc) - static_cast<long>(pad);
                            if (ic < 0 || ic >= static_cast<long>(W)) continue;
                            const std::size_t in_idx =
                                (ci * H + static_cast<std::size_t>(ir)) * W +
                                static_cast<std::size_t>(ic);
                            const std::size_t w_idx = ((o * C + ci) * k + kr) * k + kc;
                            g.grad_weights.data[w_idx] += go * input.data[in_idx];
                            g.grad_input.data[in_idx] += go * weights.data[w_idx];
                        }
                    }
                }
            }
        }
    }
    return g;
}

Tensor relu(const Tensor& input) {
    Tensor out = input;
    for (auto& v : out.data) v = std::max(0.0, v);
    return out;
}

Tensor relu_backward(const Tensor& pre_activation, const Tensor& grad_output) {
    if (!pre_activation.same_shape(grad_output))
        throw ParamError("relu backward shape mismatch");
    Tensor g = grad_output;
    for (std::size_t i = 0; i < g.data.size(); ++i)
        if (pre_activation.data[i] <= 0.0) g.data[i] = 0.0;
    return g;
}

PoolResult maxpool_overlap(const Tensor& input, std::size_t p, std::size_t s) {
    if (input.shape.size() != 3) throw ParamError("pool expects (C,H,W) input");
    const std::size_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
    if (p > H || p > W) throw ParamError("pool window larger than input");
    if (s < 1) throw ParamError("pool stride must be >= 1");
    const std::size_t oh = (H - p) / s + 1, ow = (W - p) / s + 1;

    PoolResult res{Tensor({C, oh, ow}), {}};
    res.argmax.resize(C * oh * ow);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t r = 0; r < oh; ++r) {
            for (std::size_t col = 0; col < ow; ++col) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_idx = 0;
                for (std::size_t pr = 0; pr < p; ++pr) {
                    for (std::size_t pc = 0; pc < p; ++pc) {
                        const std::size_t idx =
                            (c * H + r * s + pr) * W + col * s + pc;
                        if (input.data[idx] > best) { // ties keep lowest flat index
                            best = input.data[idx];
                            best_idx = idx;
                        }
                    }
                }
                res.output.at3(c, r, col) = best;
                res.argmax[(c * oh + r) * ow + col] = best_idx;
            }
        }
    }
    return res;
}

Tensor maxpool_backward(const std::vector<std::size_t>& input_shape,
                        const std::vector<std::size_t>& argmax,
                        const Tensor& grad_output) {
    Tensor g{input_shape};
    if (argmax.size() != grad_output.size())
        throw ParamError("pool backward argmax/grad mismatch");
    for (std::size_t i = 0; i < argmax.size(); ++i)
        g.data[argmax[i]] += grad_output.data[i];
    return g;
}

Tensor fc_forward(const Tensor& input, const Tensor& weights,
                  const Tensor& bias) {
    if (weights.shape.size() != 2) throw ParamError("fc weights must be 2-D");
    const std::size_t out_n = weights.shape[0], in_n = weights.shape[1];
    if (input.size() != in_n || bias.size() != out_n)
        throw ParamError("fc dim mismatch");
    Tensor out({out_n});
    for (std::size_t o = 0; o < out_n; ++o) {
        double acc = bias.data[o];
        const double* w = &weights.data[o * in_n];
        for (std::size_t i = 0; i < in_n; ++i) acc += w[i] * input.data[i];
        out.data[o] = acc;
    }
    return out;
}

FcGrads fc_backward(const Tensor& input, const Tensor& weights,
                    const Tensor& grad_output) {
    const std::size_t out_n = weights.shape[0], in_n = weights.shape[1];
    if (grad_output.size() != out_n || input.size() != in_n)
        throw ParamError("fc backward dim mismatch");
    FcGrads g{Tensor(input.shape), Tensor(weights.shape), Tensor({out_n})};
    for (std::size_t o = 0; o < out_n; ++o) {
        const double go = grad_output.data[o];
        g.grad_bias.data[o] = go;
        const double* w = &weights.data[o * in_n];
        double* gw = &g.grad_weights.data[o * in_n];
        for (std::size_t i = 0; i < in_n; ++i) {
            gw[i] = go * input.data[i];
            g.grad_input.data[i] += go * w[i];
        }
    }
    return g;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw ParamError("empty logits");
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, int label) {
    const std::size_t n = logits.size();
    if (label < 0 || static_cast<std::size_t>(label) >= n)
        throw ParamError("label out of range");
    const auto p = softmax(logits.data);
    LossResult res;
    res.value = -std::log(std::max(p[static_cast<std::size_t>(label)],
                                   std::numeric_limits<double>::min()));
    res.grad_logits = Tensor(logits.shape);
    for (std::size_t i = 0; i < n; ++i)
        res.grad_logits.data[i] =
            p[i] - (static_cast<int>(i) == label ? 1.0 : 0.0);
    return res;
}

} // namespace gmc::cnn

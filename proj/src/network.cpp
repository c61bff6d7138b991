#include "gmc/network.hpp"

#include <algorithm>
#include <fstream>
#include <random>

namespace gmc::cnn {

namespace {

std::vector<std::size_t> pooled_shape(const std::vector<std::size_t>& in,
                                      std::size_t p, std::size_t s) {
    if (in.size() != 3) throw ParamError("pool layer needs a 3-D input");
    if (p > in[1] || p > in[2])
        throw ParamError("pool window larger than layer input");
    return {in[0], (in[1] - p) / s + 1, (in[2] - p) / s + 1};
}

} // namespace

std::vector<std::vector<std::size_t>> NetworkSpec::validate() const {
    if (layers.empty()) throw ParamError("network has no layers");
    std::vector<std::vector<std::size_t>> shapes;
    std::vector<std::size_t> cur{input_shape[0], input_shape[1], input_shape[2]};
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        switch (l.type) {
            case LayerSpec::Type::Conv: {
                if (cur.size() != 3 || cur[0] != l.in_maps)
                    throw ParamError("conv input maps mismatch at layer " +
                                     std::to_string(i));
                if (l.kernel % 2 == 0 || l.kernel == 0)
                    throw ParamError("conv kernel must be odd-sized");
                const std::size_t pad =
                    l.padding == Padding::Same ? (l.kernel - 1) / 2 : 0;
                if (cur[1] + 2 * pad < l.kernel || cur[2] + 2 * pad < l.kernel)
                    throw ParamError("conv kernel exceeds input at layer " +
                                     std::to_string(i));
                cur = {l.out_maps, cur[1] + 2 * pad - l.kernel + 1,
                       cur[2] + 2 * pad - l.kernel + 1};
                break;
            }
            case LayerSpec::Type::ReLU:
                break;
            case LayerSpec::Type::MaxPoolOverlap:
                cur = pooled_shape(cur, l.pool_p, l.pool_s);
                break;
            case LayerSpec::Type::Flatten: {
                std::size_t n = 1;
                for (std::size_t d : cur) n *= d;
                cur = {n};
                break;
            }
            case LayerSpec::Type::FullyConnected: {
                std::size_t n = 1;
                for (std::size_t d : cur) n *= d;
                if (cur.size() != 1 || n != l.fc_in)
                    throw ParamError("fc input size mismatch at layer " +
                                     std::to_string(i));
                cur = {l.fc_out};
                break;
            }
            case LayerSpec::Type::Softmax:
                if (i + 1 != layers.size())
                    throw ParamError("softmax must be the final layer");
                if (cur.size() != 1 || cur[0] != n_classes)
                    throw ParamError("softmax input must equal n_classes");
                break;
        }
        shapes.push_back(cur);
    }
    if (layers.back().type != LayerSpec::Type::Softmax)
        throw ParamError("network must end with softmax");
    return shapes;
}

namespace {

NetworkSpec stacked_profile(std::array<std::size_t, 3> input,
                            std::size_t n_classes,
                            const std::vector<std::size_t>& maps,
                            std::size_t fc_hidden) {
    NetworkSpec spec;
    spec.input_shape = input;
    spec.n_classes = n_classes;
    std::size_t ch = input[0], h = input[1], w = input[2];
    for (std::size_t m : maps) {
        spec.layers.push_back(LayerSpec::conv(ch, m, 5));
        spec.layers.push_back(LayerSpec::relu());
        spec.layers.push_back(LayerSpec::maxpool(3, 2));
        ch = m;
        h = (h - 3) / 2 + 1;
        w = (w - 3) / 2 + 1;
    }
    spec.layers.push_back(LayerSpec::flatten());
    spec.layers.push_back(LayerSpec::fully_connected(ch * h * w, fc_hidden));
    spec.layers.push_back(LayerSpec::relu());
    spec.layers.push_back(LayerSpec::fully_connected(fc_hidden, n_classes));
    spec.layers.push_back(LayerSpec::softmax());
    spec.validate();
    return spec;
}

} // namespace

NetworkSpec NetworkSpec::desk(std::array<std::size_t, 3> input,
                              std::size_t n_classes) {
    return stacked_profile(input, n_classes, {8, 16}, 64);
}

NetworkSpec NetworkSpec::paper(std::array<std::size_t, 3> input,
                               std::size_t n_classes) {
    return stacked_profile(input, n_classes, {64, 64, 64, 64}, 128);
}

nlohmann::json NetworkSpec::to_json() const {
    nlohmann::json j;
    j["input_shape"] = input_shape;
    j["n_classes"] = n_classes;
    auto arr = nlohmann::json::array();
    for (const auto& l : layers) {
        nlohmann::json lj;
        switch (l.type) {
            case LayerSpec::Type::Conv:
                lj["type"] = "conv";
                lj["in"] = l.in_maps;
                lj["out"] = l.out_maps;
                lj["kernel"] = l.kernel;
                lj["padding"] = l.padding == Padding::Same ? "same" : "valid";
                break;
            case LayerSpec::Type::ReLU:
                lj["type"] = "relu";
                break;
            case LayerSpec::Type::MaxPoolOverlap:
                lj["type"] = "maxpool";
                lj["p"] = l.pool_p;
                lj["s"] = l.pool_s;
                break;
            case LayerSpec::Type::Flatten:
                lj["type"] = "flatten";
                break;
            case LayerSpec::Type::FullyConnected:
                lj["type"] = "fc";
                lj["in"] = l.fc_in;
                lj["out"] = l.fc_out;
                break;
            case LayerSpec::Type::Softmax:
                lj["type"] = "softmax";
                break;
        }
        arr.push_back(std::move(lj));
    }
    j["layers"] = std::move(arr);
    return j;
}

NetworkSpec NetworkSpec::from_json(const nlohmann::json& j) {
    NetworkSpec spec;
    const auto in = j.at("input_shape");
    spec.input_shape = {in.at(0).get<std::size_t>(), in.at(1).get<std::size_t>(),
                        in.at(2).get<std::size_t>()};
    spec.n_classes = j.at("n_classes").get<std::size_t>();
    for (const auto& lj : j.at("layers")) {
        const std::string t = lj.at("type").get<std::string>();
        if (t == "conv")
            spec.layers.push_back(LayerSpec::conv(
                lj.at("in").get<std::size_t>(), lj.at("out").get<std::size_t>(),
                lj.at("kernel").get<std::size_t>(),
                lj.at("padding").get<std::string>() == "same" ? Padding::Same
                                                              : Padding::Valid));
        else if (t == "relu")
            spec.layers.push_back(LayerSpec::relu());
        else if (t == "maxpool")
            spec.layers.push_back(LayerSpec::maxpool(
                lj.at("p").get<std::size_t>(), lj.at("s").get<std::size_t>()));
        else if (t == "flatten")
            spec.layers.push_back(LayerSpec::flatten());
        else if (t == "fc")
            spec.layers.push_back(LayerSpec::fully_connected(
                lj.at("in").get<std::size_t>(), lj.at("out").get<std::size_t>()));
        else if (t == "softmax")
            spec.layers.push_back(LayerSpec::softmax());
        else
            throw ParamError("unknown layer type in spec JSON: " + t);
    }
    spec.validate();
    return spec;
}

ModelState init(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    ModelState state;
    state.layers.resize(spec.layers.size());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.005);

    // Count conv and fc layers to apply the bias-1 rule.
    std::size_t n_fc = 0;
    for (const auto& l : spec.layers)
        if (l.type == LayerSpec::Type::FullyConnected) ++n_fc;

    std::size_t conv_idx = 0, fc_idx = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        auto& p = state.layers[i];
        double bias_value = 0.0;
        if (l.type == LayerSpec::Type::Conv) {
            ++conv_idx;
            p.w = Tensor({l.out_maps, l.in_maps, l.kernel, l.kernel});
            p.b = Tensor({l.out_maps});
            bias_value = (conv_idx == 1 || conv_idx == 3) ? 1.0 : 0.0;
        } else if (l.type == LayerSpec::Type::FullyConnected) {
            ++fc_idx;
            p.w = Tensor({l.fc_out, l.fc_in});
            p.b = Tensor({l.fc_out});
            bias_value = fc_idx < n_fc ? 1.0 : 0.0; // hidden FC layers only
        } else {
            continue;
        }
        p.present = true;
        for (auto& v : p.w.data) v = gauss(rng);
        std::fill(p.b.data.begin(), p.b.data.end(), bias_value);
        p.vw = Tensor(p.w.shape);
        p.vb = Tensor(p.b.shape);
    }
    return state;
}

Tensor forward_logits(const NetworkSpec& spec, const ModelState& state,
                      const Tensor& input, ForwardCache* cache) {
    if (input.shape != std::vector<std::size_t>{spec.input_shape[0],
                                                spec.input_shape[1],
                                                spec.input_shape[2]})
        throw ParamError("input shape does not match network spec");
    Tensor cur = input;
    if (cache) {
        cache->inputs.assign(spec.layers.size(), Tensor{});
        cache->argmax.assign(spec.layers.size(), {});
    }
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        if (l.type == LayerSpec::Type::Softmax) break;
        if (cache) cache->inputs[i] = cur;
        switch (l.type) {
            case LayerSpec::Type::Conv:
                cur = conv_forward(cur, state.layers[i].w, state.layers[i].b,
                                   l.padding);
                break;
            case LayerSpec::Type::ReLU:
                cur = relu(cur);
                break;
            case LayerSpec::Type::MaxPoolOverlap: {
                auto res = maxpool_overlap(cur, l.pool_p, l.pool_s);
                if (cache) cache->argmax[i] = std::move(res.argmax);
                cur = std::move(res.output);
                break;
            }
            case LayerSpec::Type::Flatten: {
                const std::size_t flat = cur.size();
                cur = Tensor({flat}, std::move(cur.data));
                break;
            }
            case LayerSpec::Type::FullyConnected:
                cur = fc_forward(cur, state.layers[i].w, state.layers[i].b);
                break;
            case LayerSpec::Type::Softmax:
                break;
        }
        cur.check_finite("forward pass");
    }
    if (cache) cache->logits = cur;
    return cur;
}

GradList backward(const NetworkSpec& spec, const ModelState& state,
                  const ForwardCache& cache, const Tensor& grad_logits) {
    GradList grads = zero_grads(state);
    Tensor g = grad_logits;
    for (std::size_t ii = spec.layers.size(); ii-- > 0;) {
        const auto& l = spec.layers[ii];
        switch (l.type) {
            case LayerSpec::Type::Softmax:
                continue; // folded into the loss gradient
            case LayerSpec::Type::Conv: {
                auto cg = conv_backward(cache.inputs[ii], state.layers[ii].w,
                                        l.padding, g);
                grads[ii].w = std::move(cg.grad_weights);
                grads[ii].b = std::move(cg.grad_bias);
                g = std::move(cg.grad_input);
                break;
            }
            case LayerSpec::Type::ReLU:
                g = relu_backward(cache.inputs[ii], g);
                break;
            case LayerSpec::Type::MaxPoolOverlap:
                g = maxpool_backward(cache.inputs[ii].shape, cache.argmax[ii], g);
                break;
            case LayerSpec::Type::Flatten:
                g = Tensor(cache.inputs[ii].shape, std::move(g.data));
                break;
            case LayerSpec::Type::FullyConnected: {
                auto fg = fc_backward(cache.inputs[ii], state.layers[ii].w, g);
                grads[ii].w = std::move(fg.grad_weights);
                grads[ii].b = std::move(fg.grad_bias);
                g = std::move(fg.grad_input);
                break;
            }
        }
        g.check_finite("backward pass");
    }
    return grads;
}

GradList zero_grads(const ModelState& state) {
    GradList grads(state.layers.size());
    for (std::size_t i = 0; i < state.layers.size(); ++i) {
        if (!state.layers[i].present) continue;
        grads[i].present = true;
        grads[i].w = Tensor(state.layers[i].w.shape);
        grads[i].b = Tensor(state.layers[i].b.shape);
    }
    return grads;
}

void accumulate(GradList& into, const GradList& grads) {
    for (std::size_t i = 0; i < into.size(); ++i) {
        if (!into[i].present) continue;
        for (std::size_t k = 0; k < into[i].w.data.size(); ++k)
            into[i].w.data[k] += grads[i].w.data[k];
        for (std::size_t k = 0; k < into[i].b.data.size(); ++k)
            into[i].b.data[k] += grads[i].b.data[k];
    }
}

void scale_grads(GradList& grads, double factor) {
    for (auto& g : grads) {
        if (!g.present) continue;
        for (auto& v : g.w.data) v *= factor;
        for (auto& v : g.b.data) v *= factor;
    }
}

void sgd_step(ModelState& state, const GradList& grads, double lr,
              double momentum, double wd_coupling) {
    for (std::size_t i = 0; i < state.layers.size(); ++i) {
        auto& p = state.layers[i];
        if (!p.present) continue;
        auto step = [&](Tensor& w, Tensor& v, const Tensor& g) {
            for (std::size_t k = 0; k < w.data.size(); ++k) {
                if (!std::isfinite(g.data[k]))
                    throw std::runtime_error("non-finite gradient in sgd_step");
                v.data[k] = momentum * v.data[k] - wd_coupling * lr * w.data[k] -
                            lr * g.data[k];
                w.data[k] += v.data[k];
            }
        };
        step(p.w, p.vw, grads[i].w);
        step(p.b, p.vb, grads[i].b);
    }
    ++state.iteration;
}

Prediction predict(const NetworkSpec& spec, const ModelState& state,
                   const Tensor& input) {
    const Tensor logits = forward_logits(spec, state, input);
    Prediction pred;
    pred.probabilities = softmax(logits.data);
    pred.label = static_cast<int>(
        std::max_element(pred.probabilities.begin(), pred.probabilities.end()) -
        pred.probabilities.begin());
    return pred;
}

namespace {

void write_blob_f32(std::ofstream& f, const Tensor& t) {
    for (double v : t.data) {
        const float x = static_cast<float>(v);
        f.write(reinterpret_cast<const char*>(&x), sizeof x);
    }
}

void read_blob_f32(std::ifstream& f, Tensor& t) {
    for (auto& v : t.data) {
        float x = 0.0f;
        f.read(reinterpret_cast<char*>(&x), sizeof x);
        v = static_cast<double>(x);
    }
    if (!f) throw std::runtime_error("truncated checkpoint blob");
}

} // namespace

void save_checkpoint(const std::string& path, const NetworkSpec& spec,
                     const ModelState& state, std::uint64_t seed) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    nlohmann::json header;
    header["version"] = 1;
    header["spec"] = spec.to_json();
    header["seed"] = seed;
    header["iteration"] = state.iteration;
    f << "GMC1\n" << header.dump() << '\n';
    for (const auto& p : state.layers) {
        if (!p.present) continue;
        write_blob_f32(f, p.w);
        write_blob_f32(f, p.b);
        write_blob_f32(f, p.vw);
        write_blob_f32(f, p.vb);
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic, header_line;
    std::getline(f, magic);
    if (magic != "GMC1") throw std::runtime_error("bad checkpoint magic");
    std::getline(f, header_line);
    const auto header = nlohmann::json::parse(header_line);

    Checkpoint ck;
    ck.spec = NetworkSpec::from_json(header.at("spec"));
    ck.seed = header.at("seed").get<std::uint64_t>();
    ck.state = init(ck.spec, 0); // shapes only; values overwritten below
    ck.state.iteration = header.at("iteration").get<std::uint64_t>();
    for (auto& p : ck.state.layers) {
        if (!p.present) continue;
        read_blob_f32(f, p.w);
        read_blob_f32(f, p.b);
        read_blob_f32(f, p.vw);
        read_blob_f32(f, p.vb);
    }
    return ck;
}

} // namespace gmc::cnn

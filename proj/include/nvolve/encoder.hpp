#pragma once

// Voxel-wise encoding head: an MLP from a flattened embedding to N voxel
// responses. Hidden layers use ReLU, the readout is affine. Gradients are
// hand-written reverse mode over the affine/ReLU chain.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "nvolve/embedding.hpp"
#include "nvolve/error.hpp"
#include "nvolve/matrix.hpp"
#include "nvolve/rng.hpp"

namespace nvolve {

struct EncoderArchitecture {
    std::size_t input_len = 16 * 768;
    std::vector<std::size_t> hidden{2048, 1024, 512};
    std::size_t n_voxels = 1;

    /// Input width, then each hidden width, then n_voxels.
    [[nodiscard]] std::vector<std::size_t> widths() const {
        std::vector<std::size_t> w;
        w.reserve(hidden.size() + 2);
        w.push_back(input_len);
        w.insert(w.end(), hidden.begin(), hidden.end());
        w.push_back(n_voxels);
        return w;
    }

    [[nodiscard]] std::size_t num_layers() const noexcept { return hidden.size() + 1; }

    void validate() const {
        for (auto w : widths())
            if (w == 0) throw InvalidArgument("encoder architecture has a zero-width layer");
    }

    friend bool operator==(const EncoderArchitecture&, const EncoderArchitecture&) = default;
};

/// Affine layer y = W x + b with W stored out x in, row-major.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in_, std::size_t out_) : in(in_), out(out_), weight(in_ * out_, 0.0), bias(out_, 0.0) {}

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Parameters of every layer, in network order. Also used as the container
/// for gradients and optimizer moments, which share the model's shape.
using LayerStack = std::vector<DenseLayer>;

inline LayerStack zeros_like(const LayerStack& layers) {
    LayerStack out;
    out.reserve(layers.size());
    for (const auto& l : layers) out.emplace_back(l.in, l.out);
    return out;
}

struct EncoderModel {
    EncoderArchitecture arch;
    LayerStack layers;

    /// All parameters zero.
    static EncoderModel zeros(const EncoderArchitecture& arch) {
        arch.validate();
        EncoderModel m{arch, {}};
        const auto w = arch.widths();
        for (std::size_t i = 0; i + 1 < w.size(); ++i) m.layers.emplace_back(w[i], w[i + 1]);
        return m;
    }

    /// Weights i.i.d. uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases 0.
    static EncoderModel initialize(const EncoderArchitecture& arch, std::uint64_t seed) {
        auto m = zeros(arch);
        Rng rng(seed);
        for (auto& layer : m.layers) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
            for (auto& w : layer.weight) w = rng.uniform(-bound, bound);
        }
        return m;
    }

    [[nodiscard]] std::size_t num_parameters() const noexcept {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weight.size() + l.bias.size();
        return n;
    }

    /// Throws when the layer stack does not match the architecture.
    void validate() const {
        arch.validate();
        const auto w = arch.widths();
        if (layers.size() + 1 != w.size()) throw ShapeError("encoder layer count", w.size() - 1, layers.size());
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& l = layers[i];
            const std::string name = "layer " + std::to_string(i);
            if (l.in != w[i]) throw ShapeError(name + " input width", w[i], l.in);
            if (l.out != w[i + 1]) throw ShapeError(name + " output width", w[i + 1], l.out);
            if (l.weight.size() != l.in * l.out) throw ShapeError(name + " weight size", l.in * l.out, l.weight.size());
            if (l.bias.size() != l.out) throw ShapeError(name + " bias size", l.out, l.bias.size());
        }
    }

    friend bool operator==(const EncoderModel&, const EncoderModel&) = default;
};

namespace detail {

inline bool is_hidden(const EncoderModel& m, std::size_t layer_index) { return layer_index + 1 < m.layers.size(); }

// z = W x + b for one sample.
inline void affine(const DenseLayer& l, std::span<const double> x, std::span<double> z) {
    for (std::size_t o = 0; o < l.out; ++o) {
        const double* w = l.weight.data() + o * l.in;
        double s = 0.0;
        for (std::size_t i = 0; i < l.in; ++i) s += w[i] * x[i];
        z[o] = s + l.bias[o];
    }
}

inline void relu_inplace(std::span<double> v) {
    for (auto& x : v) x = x > 0.0 ? x : 0.0;
}

inline void check_input(const EncoderModel& m, std::size_t len) {
    if (len != m.arch.input_len) throw ShapeError("encoder input length", m.arch.input_len, len);
}

}  // namespace detail

/// Activations kept from a forward pass for use by the backward pass.
/// pre[l] is layer l's affine output; post[l] is its input.
struct ForwardTrace {
    std::vector<std::vector<double>> post;
    std::vector<std::vector<double>> pre;

    [[nodiscard]] const std::vector<double>& output() const { return pre.back(); }
};

inline ForwardTrace forward_trace(const EncoderModel& model, std::span<const double> x) {
    detail::check_input(model, x.size());
    ForwardTrace t;
    t.post.reserve(model.layers.size());
    t.pre.reserve(model.layers.size());
    t.post.emplace_back(x.begin(), x.end());
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const auto& layer = model.layers[li];
        std::vector<double> z(layer.out);
        detail::affine(layer, t.post.back(), z);
        t.pre.push_back(z);
        if (detail::is_hidden(model, li)) {
            detail::relu_inplace(z);
            t.post.push_back(std::move(z));
        }
    }
    return t;
}

/// Predicted voxel responses for one flattened embedding.
inline std::vector<double> forward(const EncoderModel& model, std::span<const double> x) {
    detail::check_input(model, x.size());
    std::vector<double> cur(x.begin(), x.end());
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const auto& layer = model.layers[li];
        std::vector<double> z(layer.out);
        detail::affine(layer, cur, z);
        if (detail::is_hidden(model, li)) detail::relu_inplace(z);
        cur = std::move(z);
    }
    return cur;
}

inline std::vector<double> forward(const EncoderModel& model, const Embedding& e) { return forward(model, e.flat()); }

/// Row-wise forward over a batch (rows = samples).
inline Matrix forward_batch(const EncoderModel& model, const Matrix& inputs) {
    detail::check_input(model, inputs.cols);
    Matrix out(inputs.rows, model.arch.n_voxels);
    for (std::size_t r = 0; r < inputs.rows; ++r) {
        auto y = forward(model, inputs.row(r));
        std::copy(y.begin(), y.end(), out.row(r).begin());
    }
    return out;
}

namespace detail {

// Backpropagates `grad_out` (dL/d pre[last]) through the trace. When
// `params` is non-null, parameter gradients are accumulated into it.
// Returns dL/d input.
inline std::vector<double> backward(const EncoderModel& model, const ForwardTrace& trace,
                                    std::vector<double> grad_pre, LayerStack* params) {
    for (std::size_t li = model.layers.size(); li-- > 0;) {
        const auto& layer = model.layers[li];
        const auto& input = trace.post[li];
        if (params) {
            auto& g = (*params)[li];
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double d = grad_pre[o];
                g.bias[o] += d;
                if (d == 0.0) continue;
                double* gw = g.weight.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) gw[i] += d * input[i];
            }
        }
        std::vector<double> grad_in(layer.in, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double d = grad_pre[o];
            if (d == 0.0) continue;
            const double* w = layer.weight.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) grad_in[i] += d * w[i];
        }
        if (li > 0) {
            // ReLU derivative of the previous hidden layer; 0 at the kink.
            const auto& z = trace.pre[li - 1];
            for (std::size_t i = 0; i < grad_in.size(); ++i)
                if (!(z[i] > 0.0)) grad_in[i] = 0.0;
        }
        grad_pre = std::move(grad_in);
    }
    return grad_pre;
}

}  // namespace detail

/// Vector-Jacobian product J^T * cotangent, J = d forward / d input.
inline std::vector<double> input_gradient(const EncoderModel& model, std::span<const double> x,
                                          std::span<const double> cotangent) {
    if (cotangent.size() != model.arch.n_voxels)
        throw ShapeError("cotangent length", model.arch.n_voxels, cotangent.size());
    const auto trace = forward_trace(model, x);
    return detail::backward(model, trace, {cotangent.begin(), cotangent.end()}, nullptr);
}

inline std::vector<double> input_gradient(const EncoderModel& model, const Embedding& e,
                                          std::span<const double> cotangent) {
    return input_gradient(model, e.flat(), cotangent);
}

struct LossAndGradients {
    double loss = 0.0;
    LayerStack gradients;
};

/// MSE over the batch and all voxels, L = mean((forward(x) - r)^2), and its
/// gradient with respect to every parameter. Rows of `inputs` and `targets`
/// are paired samples.
inline LossAndGradients parameter_gradients(const EncoderModel& model, const Matrix& inputs, const Matrix& targets) {
    if (inputs.rows == 0) throw InvalidArgument("parameter_gradients needs a non-empty batch");
    if (targets.rows != inputs.rows) throw ShapeError("target rows", inputs.rows, targets.rows);
    if (targets.cols != model.arch.n_voxels) throw ShapeError("target width", model.arch.n_voxels, targets.cols);
    detail::check_input(model, inputs.cols);

    LossAndGradients out{0.0, zeros_like(model.layers)};
    const double scale = 1.0 / static_cast<double>(inputs.rows * targets.cols);
    for (std::size_t r = 0; r < inputs.rows; ++r) {
        const auto trace = forward_trace(model, inputs.row(r));
        const auto& y = trace.output();
        const auto target = targets.row(r);
        std::vector<double> grad(y.size());
        for (std::size_t v = 0; v < y.size(); ++v) {
            const double diff = y[v] - target[v];
            out.loss += diff * diff;
            grad[v] = 2.0 * diff * scale;
        }
        detail::backward(model, trace, std::move(grad), &out.gradients);
    }
    out.loss *= scale;
    return out;
}

}  // namespace nvolve

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "auginf/errors.hpp"
#include "auginf/rng.hpp"
#include "auginf/tensor.hpp"

namespace auginf {

enum class Activation { relu, tanh };

inline std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

inline Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation '" + s + "' (expected relu or tanh)");
}

// Fully connected network: widths[0] is the input dimension, widths.back()
// the class count, hidden layers in between. The final layer is linear and
// produces logits.
struct MlpModel {
    std::vector<int> layer_widths;
    Activation activation = Activation::relu;
    bool bias_enabled = true;

    void validate() const {
        if (layer_widths.size() < 2) throw ContractError("mlp: needs at least input and output widths");
        for (int w : layer_widths)
            if (w <= 0) throw ContractError("mlp: layer widths must be positive");
        if (layer_widths.back() < 2) throw ContractError("mlp: output width (class count) must be >= 2");
    }

    int input_dim() const { return layer_widths.front(); }
    int output_dim() const { return layer_widths.back(); }
    std::size_t num_layers() const { return layer_widths.size() - 1; }

    int fan_in(std::size_t layer) const { return layer_widths[layer]; }
    int fan_out(std::size_t layer) const { return layer_widths[layer + 1]; }

    std::size_t layer_param_count(std::size_t layer) const {
        std::size_t n = static_cast<std::size_t>(fan_in(layer)) * fan_out(layer);
        if (bias_enabled) n += fan_out(layer);
        return n;
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < num_layers(); ++l) n += layer_param_count(l);
        return n;
    }

    // Flat layout per layer: weight matrix (fan_out x fan_in, row-major),
    // then the bias vector when biases are enabled.
    std::size_t weight_offset(std::size_t layer) const {
        std::size_t off = 0;
        for (std::size_t l = 0; l < layer; ++l) off += layer_param_count(l);
        return off;
    }

    std::size_t bias_offset(std::size_t layer) const {
        return weight_offset(layer) + static_cast<std::size_t>(fan_in(layer)) * fan_out(layer);
    }

    bool operator==(const MlpModel&) const = default;
};

// Flat parameter vector laid out per MlpModel.
struct ParamVector {
    std::vector<double> values;

    ParamVector() = default;
    explicit ParamVector(std::size_t n) : values(n, 0.0) {}
    explicit ParamVector(std::vector<double> v) : values(std::move(v)) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    std::span<double> span() { return values; }
    std::span<const double> span() const { return values; }

    bool operator==(const ParamVector&) const = default;
};

inline void check_params(const MlpModel& model, const ParamVector& w) {
    if (w.size() != model.param_count())
        throw ContractError("params: expected " + std::to_string(model.param_count()) + " values, got " +
                            std::to_string(w.size()));
}

// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
inline ParamVector init_params(const MlpModel& model, RngStream& rng) {
    model.validate();
    ParamVector w(model.param_count());
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        double bound = std::sqrt(6.0 / (model.fan_in(l) + model.fan_out(l)));
        std::size_t off = model.weight_offset(l);
        std::size_t nw = static_cast<std::size_t>(model.fan_in(l)) * model.fan_out(l);
        for (std::size_t i = 0; i < nw; ++i) w[off + i] = bound * (2.0 * rng.next_double() - 1.0);
        // biases stay zero
    }
    return w;
}

inline double apply_activation(Activation a, double z) {
    if (a == Activation::relu) return z > 0.0 ? z : 0.0;
    return std::tanh(z);
}

// Derivative through the activation given pre-activation z.
// relu subgradient at 0 is defined as 0.
inline double activation_derivative(Activation a, double z) {
    if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
    double t = std::tanh(z);
    return 1.0 - t * t;
}

// Per-layer pre-activations and activations kept for reverse-mode passes.
// activations[0] is the input batch, activations.back() the logits.
struct ForwardTrace {
    std::vector<Tensor> activations;
    std::vector<Tensor> preactivations;

    const Tensor& logits() const { return activations.back(); }
};

inline ForwardTrace forward_trace(const MlpModel& model, const ParamVector& w, const Tensor& batch) {
    model.validate();
    check_params(model, w);
    if (batch.rank() != 2 || batch.cols() != static_cast<std::size_t>(model.input_dim()))
        throw ContractError("forward: batch must be N x " + std::to_string(model.input_dim()));

    ForwardTrace trace;
    trace.activations.reserve(model.num_layers() + 1);
    trace.preactivations.reserve(model.num_layers());
    trace.activations.push_back(batch);

    std::size_t n = batch.rows();
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const Tensor& in = trace.activations.back();
        std::size_t din = model.fan_in(l), dout = model.fan_out(l);
        Tensor z = Tensor::zeros({n, dout});
        const double* wl = w.values.data() + model.weight_offset(l);
        const double* bl = model.bias_enabled ? w.values.data() + model.bias_offset(l) : nullptr;
        for (std::size_t i = 0; i < n; ++i) {
            std::span<const double> x = in.row(i);
            for (std::size_t o = 0; o < dout; ++o) {
                double acc = bl ? bl[o] : 0.0;
                const double* row = wl + o * din;
                for (std::size_t k = 0; k < din; ++k) acc += row[k] * x[k];
                z(i, o) = acc;
            }
        }
        bool last = (l + 1 == model.num_layers());
        if (last) {
            trace.preactivations.push_back(z);
            trace.activations.push_back(std::move(z));
        } else {
            Tensor a = Tensor::zeros({n, dout});
            for (std::size_t i = 0; i < z.numel(); ++i) a.data[i] = apply_activation(model.activation, z.data[i]);
            trace.preactivations.push_back(std::move(z));
            trace.activations.push_back(std::move(a));
        }
    }
    return trace;
}

// Logits for a batch: row i is f(x_i; w). Deterministic, fixed reduction order.
inline Tensor forward_logits(const MlpModel& model, const ParamVector& w, const Tensor& batch) {
    return forward_trace(model, w, batch).logits();
}

inline std::vector<double> forward_logits_single(const MlpModel& model, const ParamVector& w,
                                                 std::span<const double> x) {
    Tensor out = forward_logits(model, w, Tensor::row_matrix(x));
    return out.data;
}

}  // namespace auginf

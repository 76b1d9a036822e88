#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "auginf/errors.hpp"
#include "auginf/model.hpp"
#include "auginf/tensor.hpp"

namespace auginf {

// A scalar-valued differentiable functional of network logits: the rows to
// feed through the network, the value as a function of their logits, and the
// gradient of that value with respect to the logits. Every training objective
// in this codebase (all likelihood variants, summed batches) takes this form.
struct LogitObjective {
    Tensor inputs;  // B x D
    std::function<double(const Tensor& logits)> value;
    std::function<Tensor(const Tensor& logits)> grad_logits;
};

inline double eval_objective(const MlpModel& model, const ParamVector& w, const LogitObjective& obj) {
    return obj.value(forward_logits(model, w, obj.inputs));
}

// Reverse-mode accumulation through the network given d(value)/d(logits).
inline ParamVector backprop(const MlpModel& model, const ParamVector& w, const ForwardTrace& trace,
                            const Tensor& dlogits) {
    check_params(model, w);
    const Tensor& logits = trace.logits();
    if (dlogits.shape != logits.shape) throw ContractError("backprop: dlogits shape mismatch");

    ParamVector grad(model.param_count());
    std::size_t n = dlogits.rows();
    Tensor delta = dlogits;  // gradient wrt layer pre-activation
    for (std::size_t l = model.num_layers(); l-- > 0;) {
        std::size_t din = model.fan_in(l), dout = model.fan_out(l);
        const Tensor& in = trace.activations[l];
        double* gw = grad.values.data() + model.weight_offset(l);
        double* gb = model.bias_enabled ? grad.values.data() + model.bias_offset(l) : nullptr;
        for (std::size_t i = 0; i < n; ++i) {
            std::span<const double> x = in.row(i);
            std::span<const double> d = delta.row(i);
            for (std::size_t o = 0; o < dout; ++o) {
                double* grow = gw + o * din;
                for (std::size_t k = 0; k < din; ++k) grow[k] += d[o] * x[k];
                if (gb) gb[o] += d[o];
            }
        }
        if (l == 0) break;
        const double* wl = w.values.data() + model.weight_offset(l);
        const Tensor& z_prev = trace.preactivations[l - 1];
        Tensor next = Tensor::zeros({n, din});
        for (std::size_t i = 0; i < n; ++i) {
            std::span<const double> d = delta.row(i);
            std::span<double> nd = next.row(i);
            for (std::size_t o = 0; o < dout; ++o) {
                const double* row = wl + o * din;
                for (std::size_t k = 0; k < din; ++k) nd[k] += d[o] * row[k];
            }
            for (std::size_t k = 0; k < din; ++k)
                nd[k] *= activation_derivative(model.activation, z_prev(i, k));
        }
        delta = std::move(next);
    }
    return grad;
}

// d(objective)/dw via reverse-mode accumulation; same layout as w.
inline ParamVector grad_objective(const MlpModel& model, const ParamVector& w, const LogitObjective& obj) {
    ForwardTrace trace = forward_trace(model, w, obj.inputs);
    Tensor dlogits = obj.grad_logits(trace.logits());
    return backprop(model, w, trace, dlogits);
}

inline std::pair<double, ParamVector> value_and_grad(const MlpModel& model, const ParamVector& w,
                                                     const LogitObjective& obj) {
    ForwardTrace trace = forward_trace(model, w, obj.inputs);
    double v = obj.value(trace.logits());
    Tensor dlogits = obj.grad_logits(trace.logits());
    return {v, backprop(model, w, trace, dlogits)};
}

// Central differences per coordinate with step h_j = 1e-5 * (1 + |w_j|).
inline ParamVector finite_difference_gradient(const std::function<double(const ParamVector&)>& f,
                                              const ParamVector& w) {
    ParamVector g(w.size());
    ParamVector probe = w;
    for (std::size_t j = 0; j < w.size(); ++j) {
        double h = 1e-5 * (1.0 + std::abs(w[j]));
        double orig = probe[j];
        probe[j] = orig + h;
        double fp = f(probe);
        probe[j] = orig - h;
        double fm = f(probe);
        probe[j] = orig;
        g[j] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline ParamVector finite_difference_gradient(const MlpModel& model, const ParamVector& w,
                                              const LogitObjective& obj) {
    return finite_difference_gradient(
        [&](const ParamVector& p) { return eval_objective(model, p, obj); }, w);
}

}  // namespace auginf

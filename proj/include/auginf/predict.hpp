#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "auginf/dataset.hpp"
#include "auginf/errors.hpp"
#include "auginf/likelihood.hpp"
#include "auginf/model.hpp"
#include "auginf/orbit.hpp"
#include "auginf/rng.hpp"

namespace auginf {

// Predictive class distribution for one weight sample, given the logit rows
// of the evaluated augmentations: the variant's per-label log score,
// normalized over labels. For noaug / prob_avg / logits_avg the scores are
// already log probabilities and normalization is a no-op up to rounding; for
// loss_avg and add it imposes the normalization those variants lack.
inline std::vector<double> predictive_from_logits(Variant variant, const Tensor& logits) {
    std::size_t classes = logits.cols();
    std::vector<double> scores(classes);
    for (std::size_t y = 0; y < classes; ++y)
        scores[y] = combine_loglik(variant, logits, static_cast<int>(y));
    return softmax(scores);
}

namespace detail {

inline Tensor test_rows(const Orbit& orbit, const LikelihoodSpec& lik, std::span<const double> x,
                        RngStream* rng) {
    if (lik.k_test == 0 || lik.variant == Variant::noaug) return Tensor::row_matrix(x);
    if (lik.estimator == Estimator::exact_finite) return orbit_rows_exact(orbit, x);
    if (rng == nullptr) throw ContractError("predict: sampled test augmentation needs an RNG");
    return orbit_rows_sampled(orbit, x, lik.k_test, *rng);
}

}  // namespace detail

// Bayesian model average: the mean of per-sample predictive distributions
// over posterior weight samples. K_test = 0 evaluates the raw input. Sampled
// (mc_bound) test orbits draw fresh augmentations per weight sample.
inline std::vector<double> predict_bma(const MlpModel& model, const std::vector<ParamVector>& samples,
                                       std::span<const double> x, const Orbit& orbit,
                                       const LikelihoodSpec& lik, RngStream* rng = nullptr) {
    if (samples.empty()) throw ContractError("predict_bma: empty sample list");
    lik.validate();
    std::size_t classes = static_cast<std::size_t>(model.layer_widths.back());
    std::vector<double> mean(classes, 0.0);
    Variant v = lik.k_test == 0 ? Variant::noaug : lik.variant;
    for (const ParamVector& w : samples) {
        Tensor rows = detail::test_rows(orbit, lik, x, rng);
        std::vector<double> p = predictive_from_logits(v, forward_logits(model, w, rows));
        for (std::size_t y = 0; y < classes; ++y) mean[y] += p[y];
    }
    double inv = 1.0 / static_cast<double>(samples.size());
    for (double& p : mean) p *= inv;
    return mean;
}

struct EvalResult {
    double error_rate = 0.0;
    double nll = 0.0;  // mean per example
};

inline std::size_t argmax_index(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Test error rate and mean negative log predictive over a dataset.
inline EvalResult evaluate_dataset(const MlpModel& model, const std::vector<ParamVector>& samples,
                                   const Dataset& data, const Orbit& orbit, const LikelihoodSpec& lik,
                                   RngStream* rng = nullptr) {
    data.validate();
    EvalResult out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::vector<double> p = predict_bma(model, samples, data.inputs.row(i), orbit, lik, rng);
        if (argmax_index(p) != static_cast<std::size_t>(data.labels[i])) out.error_rate += 1.0;
        out.nll += -std::log(std::max(p[static_cast<std::size_t>(data.labels[i])], 1e-300));
    }
    out.error_rate /= static_cast<double>(data.size());
    out.nll /= static_cast<double>(data.size());
    return out;
}

}  // namespace auginf

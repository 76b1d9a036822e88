#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "auginf/errors.hpp"
#include "auginf/grad.hpp"
#include "auginf/logits.hpp"
#include "auginf/model.hpp"
#include "auginf/orbit.hpp"
#include "auginf/rng.hpp"
#include "auginf/tensor.hpp"

namespace auginf {

// How per-augmentation network outputs combine into one log-likelihood term.
//   noaug      log softmax_y f(x)
//   add        sum of log softmax_y over every orbit element
//   loss_avg   average of log softmax_y (the averaged negative loss)
//   prob_avg   log of the averaged predictive probability
//   logits_avg log softmax_y of the averaged logit vector
enum class Variant { noaug, add, loss_avg, prob_avg, logits_avg };

// exact_finite enumerates a finite orbit; mc_bound draws K augmentations,
// giving the Jensen lower-bound estimator of the averaged variants.
enum class Estimator { exact_finite, mc_bound };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::noaug: return "noaug";
        case Variant::add: return "add";
        case Variant::loss_avg: return "loss_avg";
        case Variant::prob_avg: return "prob_avg";
        case Variant::logits_avg: return "logits_avg";
    }
    throw ContractError("unreachable variant");
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "noaug") return Variant::noaug;
    if (s == "add") return Variant::add;
    if (s == "loss_avg") return Variant::loss_avg;
    if (s == "prob_avg") return Variant::prob_avg;
    if (s == "logits_avg") return Variant::logits_avg;
    throw ConfigError("unknown likelihood variant '" + s + "'");
}

inline std::string to_string(Estimator e) {
    return e == Estimator::exact_finite ? "exact_finite" : "mc_bound";
}

inline Estimator estimator_from_string(const std::string& s) {
    if (s == "exact_finite") return Estimator::exact_finite;
    if (s == "mc_bound") return Estimator::mc_bound;
    throw ConfigError("unknown estimator '" + s + "'");
}

struct LikelihoodSpec {
    Variant variant = Variant::noaug;
    Estimator estimator = Estimator::exact_finite;
    int k_train = 1;
    int k_test = 1;  // 0 means evaluate the unaugmented input at test time

    void validate() const {
        if (k_train < 1) throw ConfigError("likelihood: K_train must be >= 1");
        if (k_test < 0) throw ConfigError("likelihood: K_test must be >= 0");
        if (variant == Variant::add && estimator == Estimator::mc_bound)
            throw ConfigError("likelihood: 'add' sums the whole finite orbit; use exact_finite");
    }
};

// ---------------------------------------------------------------------------
// Combiners over a K x Y logits matrix (one row per evaluated augmentation).
// All named loglik_* operations below reduce to these after the forward pass.
// Accumulations start from the first element so the K=1 case reproduces the
// single-row result bit for bit; the estimator-collapse guarantee depends on
// this.

inline double combine_loglik(Variant variant, const Tensor& logits, int label) {
    std::size_t k = logits.rows();
    if (k == 0) throw ContractError("combine_loglik: no logit rows");
    switch (variant) {
        case Variant::noaug: {
            if (k != 1) throw ContractError("combine_loglik: noaug expects exactly one row");
            return log_softmax(logits.row(0), label);
        }
        case Variant::add: {
            double acc = log_softmax(logits.row(0), label);
            for (std::size_t i = 1; i < k; ++i) acc += log_softmax(logits.row(i), label);
            return acc;
        }
        case Variant::loss_avg: {
            double acc = log_softmax(logits.row(0), label);
            for (std::size_t i = 1; i < k; ++i) acc += log_softmax(logits.row(i), label);
            return acc / static_cast<double>(k);
        }
        case Variant::prob_avg: {
            // log[(1/K) sum_k p_k(y)] as logsumexp of per-row log-probs minus
            // ln K; survives logits far outside exp() range.
            std::vector<double> lp(k);
            for (std::size_t i = 0; i < k; ++i) lp[i] = log_softmax(logits.row(i), label);
            return logsumexp(lp) - std::log(static_cast<double>(k));
        }
        case Variant::logits_avg: {
            std::vector<double> mean(logits.row(0).begin(), logits.row(0).end());
            for (std::size_t i = 1; i < k; ++i) {
                std::span<const double> r = logits.row(i);
                for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += r[j];
            }
            for (double& m : mean) m /= static_cast<double>(k);
            return log_softmax(mean, label);
        }
    }
    throw ContractError("unreachable variant");
}

// d combine_loglik / d logits, same K x Y shape. Feeds reverse mode.
inline Tensor combine_grad(Variant variant, const Tensor& logits, int label) {
    std::size_t k = logits.rows(), y = logits.cols();
    if (k == 0) throw ContractError("combine_grad: no logit rows");
    if (label < 0 || static_cast<std::size_t>(label) >= y)
        throw ContractError("combine_grad: label out of range");
    Tensor g = Tensor::zeros({k, y});
    switch (variant) {
        case Variant::noaug:
            if (k != 1) throw ContractError("combine_grad: noaug expects exactly one row");
            [[fallthrough]];
        case Variant::add: {
            for (std::size_t i = 0; i < k; ++i) {
                std::vector<double> p = softmax(logits.row(i));
                for (std::size_t j = 0; j < y; ++j) g(i, j) = -p[j];
                g(i, static_cast<std::size_t>(label)) += 1.0;
            }
            return g;
        }
        case Variant::loss_avg: {
            double inv = 1.0 / static_cast<double>(k);
            for (std::size_t i = 0; i < k; ++i) {
                std::vector<double> p = softmax(logits.row(i));
                for (std::size_t j = 0; j < y; ++j) g(i, j) = inv * ((j == static_cast<std::size_t>(label) ? 1.0 : 0.0) - p[j]);
            }
            return g;
        }
        case Variant::prob_avg: {
            // L = logsumexp(lp) - ln K with lp_i = log softmax_y(row i); the
            // chain rule weights each row by its share of the averaged
            // probability.
            std::vector<double> lp(k);
            for (std::size_t i = 0; i < k; ++i) lp[i] = log_softmax(logits.row(i), label);
            std::vector<double> share = softmax(lp);
            for (std::size_t i = 0; i < k; ++i) {
                std::vector<double> p = softmax(logits.row(i));
                for (std::size_t j = 0; j < y; ++j)
                    g(i, j) = share[i] * ((j == static_cast<std::size_t>(label) ? 1.0 : 0.0) - p[j]);
            }
            return g;
        }
        case Variant::logits_avg: {
            std::vector<double> mean(y, 0.0);
            for (std::size_t i = 0; i < k; ++i) {
                std::span<const double> r = logits.row(i);
                for (std::size_t j = 0; j < y; ++j) mean[j] += r[j];
            }
            for (double& m : mean) m /= static_cast<double>(k);
            std::vector<double> p = softmax(mean);
            double inv = 1.0 / static_cast<double>(k);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < y; ++j)
                    g(i, j) = inv * ((j == static_cast<std::size_t>(label) ? 1.0 : 0.0) - p[j]);
            return g;
        }
    }
    throw ContractError("unreachable variant");
}

// ---------------------------------------------------------------------------
// Named operations.

inline double loglik_noaug(const MlpModel& model, const ParamVector& w, std::span<const double> x, int y) {
    return log_softmax(forward_logits_single(model, w, x), y);
}

inline double loglik_add(const MlpModel& model, const ParamVector& w, std::span<const double> x, int y,
                         const Orbit& orbit) {
    Tensor rows = orbit_rows_exact(orbit, x);
    return combine_loglik(Variant::add, forward_logits(model, w, rows), y);
}

inline double loglik_loss_avg_hat(const MlpModel& model, const ParamVector& w, std::span<const double> x,
                                  int y, const Orbit& orbit, int k, RngStream& rng) {
    Tensor rows = orbit_rows_sampled(orbit, x, k, rng);
    return combine_loglik(Variant::loss_avg, forward_logits(model, w, rows), y);
}

inline double loglik_prob_exact(const MlpModel& model, const ParamVector& w, std::span<const double> x,
                                int y, const Orbit& orbit) {
    Tensor rows = orbit_rows_exact(orbit, x);
    return combine_loglik(Variant::prob_avg, forward_logits(model, w, rows), y);
}

inline double loglik_logits_exact(const MlpModel& model, const ParamVector& w, std::span<const double> x,
                                  int y, const Orbit& orbit) {
    Tensor rows = orbit_rows_exact(orbit, x);
    return combine_loglik(Variant::logits_avg, forward_logits(model, w, rows), y);
}

inline double loglik_prob_hat(const MlpModel& model, const ParamVector& w, std::span<const double> x, int y,
                              const Orbit& orbit, int k, RngStream& rng) {
    Tensor rows = orbit_rows_sampled(orbit, x, k, rng);
    return combine_loglik(Variant::prob_avg, forward_logits(model, w, rows), y);
}

inline double loglik_logits_hat(const MlpModel& model, const ParamVector& w, std::span<const double> x, int y,
                                const Orbit& orbit, int k, RngStream& rng) {
    Tensor rows = orbit_rows_sampled(orbit, x, k, rng);
    return combine_loglik(Variant::logits_avg, forward_logits(model, w, rows), y);
}

// ---------------------------------------------------------------------------
// Normalization audit: sum over all labels of exp(log-likelihood). Equals 1
// for proper conditional distributions; loss_avg and add break it. Augmented
// rows are materialized once and shared across labels, so sampled estimators
// are audited on a single draw.

inline double normalization_audit_logits(Variant variant, const Tensor& logits) {
    std::size_t y = logits.cols();
    double acc = 0.0;
    for (std::size_t label = 0; label < y; ++label)
        acc += std::exp(combine_loglik(variant, logits, static_cast<int>(label)));
    return acc;
}

inline double normalization_audit(Variant variant, Estimator estimator, const MlpModel& model,
                                  const ParamVector& w, std::span<const double> x, const Orbit& orbit,
                                  int k, RngStream* rng) {
    Tensor rows;
    if (variant == Variant::noaug) {
        rows = Tensor::row_matrix(x);
    } else if (estimator == Estimator::exact_finite) {
        rows = orbit_rows_exact(orbit, x);
    } else {
        if (rng == nullptr) throw ContractError("normalization_audit: sampled estimator needs an RNG");
        rows = orbit_rows_sampled(orbit, x, k, *rng);
    }
    return normalization_audit_logits(variant, forward_logits(model, w, rows));
}

// ---------------------------------------------------------------------------
// Training-side packaging: the augmented rows actually evaluated for one
// example, with the rule that combines them. Building a term consumes RNG
// draws when the estimator samples.

struct ExampleTerm {
    Tensor rows;  // K x D
    int label = 0;
    Variant variant = Variant::noaug;
};

inline ExampleTerm prepare_example(Variant variant, Estimator estimator, const Orbit& orbit,
                                   std::span<const double> x, int y, int k, RngStream& rng) {
    ExampleTerm term;
    term.label = y;
    term.variant = variant;
    if (variant == Variant::noaug) {
        term.rows = Tensor::row_matrix(x);
    } else if (estimator == Estimator::exact_finite || variant == Variant::add) {
        term.rows = orbit_rows_exact(orbit, x);
    } else {
        term.rows = orbit_rows_sampled(orbit, x, k, rng);
    }
    return term;
}

inline double example_loglik(const MlpModel& model, const ParamVector& w, const ExampleTerm& term) {
    return combine_loglik(term.variant, forward_logits(model, w, term.rows), term.label);
}

// Value plus gradient accumulation (+=) into grad, which must be param-sized.
inline double example_loglik_grad(const MlpModel& model, const ParamVector& w, const ExampleTerm& term,
                                  ParamVector& grad) {
    if (grad.size() != model.param_count()) throw ContractError("example_loglik_grad: gradient size mismatch");
    ForwardTrace trace = forward_trace(model, w, term.rows);
    double value = combine_loglik(term.variant, trace.logits(), term.label);
    Tensor dlogits = combine_grad(term.variant, trace.logits(), term.label);
    ParamVector g = backprop(model, w, trace, dlogits);
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += g[j];
    return value;
}

// ---------------------------------------------------------------------------
// Stacked batch: every example's augmented rows in one forward/backward pass.

struct BatchTerm {
    Tensor rows;                        // (sum of per-example K) x D
    std::vector<std::size_t> offsets;   // size B+1, row ranges per example
    std::vector<int> labels;
    Variant variant = Variant::noaug;
};

inline BatchTerm prepare_batch(Variant variant, Estimator estimator, const Orbit& orbit, const Tensor& inputs,
                               std::span<const int> labels, std::span<const std::size_t> indices, int k,
                               RngStream& rng) {
    if (indices.empty()) throw ContractError("prepare_batch: empty batch");
    BatchTerm batch;
    batch.variant = variant;
    batch.offsets.push_back(0);
    std::vector<Tensor> parts;
    parts.reserve(indices.size());
    std::size_t total = 0;
    for (std::size_t idx : indices) {
        ExampleTerm term = prepare_example(variant, estimator, orbit, inputs.row(idx), labels[idx], k, rng);
        total += term.rows.rows();
        batch.offsets.push_back(total);
        batch.labels.push_back(term.label);
        parts.push_back(std::move(term.rows));
    }
    batch.rows = Tensor::zeros({total, inputs.cols()});
    std::size_t at = 0;
    for (const Tensor& p : parts) {
        std::copy(p.data.begin(), p.data.end(), batch.rows.data.begin() + static_cast<std::ptrdiff_t>(at));
        at += p.data.size();
    }
    return batch;
}

namespace detail {

inline Tensor slice_rows(const Tensor& t, std::size_t a, std::size_t b) {
    std::size_t d = t.cols();
    Tensor out = Tensor::zeros({b - a, d});
    std::copy(t.data.begin() + static_cast<std::ptrdiff_t>(a * d),
              t.data.begin() + static_cast<std::ptrdiff_t>(b * d), out.data.begin());
    return out;
}

}  // namespace detail

// Sum of per-example log-likelihood terms over the batch.
inline double batch_loglik(const MlpModel& model, const ParamVector& w, const BatchTerm& batch) {
    Tensor logits = forward_logits(model, w, batch.rows);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < batch.offsets.size(); ++i) {
        Tensor part = detail::slice_rows(logits, batch.offsets[i], batch.offsets[i + 1]);
        acc += combine_loglik(batch.variant, part, batch.labels[i]);
    }
    return acc;
}

// Sum of terms plus gradient accumulation, one backward pass for the batch.
inline double batch_loglik_grad(const MlpModel& model, const ParamVector& w, const BatchTerm& batch,
                                ParamVector& grad) {
    if (grad.size() != model.param_count()) throw ContractError("batch_loglik_grad: gradient size mismatch");
    ForwardTrace trace = forward_trace(model, w, batch.rows);
    const Tensor& logits = trace.logits();
    Tensor dlogits = Tensor::zeros(logits.shape);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < batch.offsets.size(); ++i) {
        std::size_t a = batch.offsets[i], b = batch.offsets[i + 1];
        Tensor part = detail::slice_rows(logits, a, b);
        acc += combine_loglik(batch.variant, part, batch.labels[i]);
        Tensor dpart = combine_grad(batch.variant, part, batch.labels[i]);
        std::copy(dpart.data.begin(), dpart.data.end(),
                  dlogits.data.begin() + static_cast<std::ptrdiff_t>(a * logits.cols()));
    }
    ParamVector g = backprop(model, w, trace, dlogits);
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += g[j];
    return acc;
}

}  // namespace auginf

#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <vector>

#include "auginf/dataset.hpp"
#include "auginf/errors.hpp"
#include "auginf/likelihood.hpp"
#include "auginf/model.hpp"
#include "auginf/rng.hpp"

namespace auginf {

struct SgdConfig {
    int budget = 200;  // epoch-equivalents; epochs run = floor(budget / K_train)
    double learning_rate = 0.1;
    double momentum = 0.9;
    std::size_t batch_size = 32;
    std::optional<ParamVector> init;

    void validate() const {
        if (budget < 1) throw ConfigError("sgd: budget must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("sgd: learning rate must be > 0");
        if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("sgd: momentum must be in [0,1)");
        if (batch_size < 1) throw ConfigError("sgd: batch size must be >= 1");
    }
};

// Base rate for the first three quarters of training, a tenth after.
inline double sgd_learning_rate(const SgdConfig& cfg, int epoch, int total_epochs) {
    int drop_at = (3 * total_epochs) / 4;
    return epoch < drop_at ? cfg.learning_rate : cfg.learning_rate * 0.1;
}

struct SgdEpochMetrics {
    int epoch = 0;  // 1-based
    double learning_rate = 0.0;
    double objective = 0.0;  // mean negative log-likelihood term per example
    long long forward_rows = 0;  // cumulative network rows pushed forward
};

struct SgdResult {
    ParamVector w;
    std::vector<SgdEpochMetrics> epochs;
    long long forward_rows = 0;
    int epochs_run = 0;
};

// Maximum-likelihood baseline under a fixed augmentation-evaluation budget:
// floor(budget / K_train) epochs of minibatch SGD with momentum on the
// negative log-likelihood term, no prior. Raising K_train buys fewer epochs,
// holding total forward compute fixed.
inline SgdResult train_sgd(const MlpModel& model, const Dataset& data, const Orbit& orbit,
                           const LikelihoodSpec& lik, const SgdConfig& cfg, RngStream rng) {
    model.validate();
    data.validate();
    lik.validate();
    cfg.validate();
    if (cfg.budget < lik.k_train) throw ConfigError("sgd: budget smaller than K_train buys zero epochs");
    int epochs = cfg.budget / lik.k_train;

    SgdResult result;
    result.epochs_run = epochs;
    RngStream init_rng = rng.split("init");
    result.w = cfg.init ? *cfg.init : init_params(model, init_rng);
    if (result.w.size() != model.param_count()) throw ContractError("sgd: init layout mismatch");
    RngStream train_rng = rng.split("train");

    ParamVector velocity(model.param_count());
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (int e = 0; e < epochs; ++e) {
        double lr = sgd_learning_rate(cfg, e, epochs);
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            std::size_t j = i + static_cast<std::size_t>(train_rng.next_below(order.size() - i));
            std::swap(order[i], order[j]);
        }
        double loglik_sum = 0.0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            std::size_t stop = std::min(at + cfg.batch_size, order.size());
            std::span<const std::size_t> batch_idx(order.data() + at, stop - at);
            BatchTerm batch = prepare_batch(lik.variant, lik.estimator, orbit, data.inputs, data.labels,
                                            batch_idx, lik.k_train, train_rng);
            ParamVector grad(model.param_count());
            loglik_sum += batch_loglik_grad(model, result.w, batch, grad);
            result.forward_rows += static_cast<long long>(batch.rows.rows());
            double inv = 1.0 / static_cast<double>(batch_idx.size());
            for (std::size_t p = 0; p < grad.size(); ++p) {
                velocity[p] = cfg.momentum * velocity[p] - grad[p] * inv;
                result.w[p] -= lr * velocity[p];
            }
            if (!all_finite(result.w.span()))
                throw DivergenceError("sgd: non-finite weights", static_cast<long>(e));
        }
        SgdEpochMetrics m;
        m.epoch = e + 1;
        m.learning_rate = lr;
        m.objective = -loglik_sum / static_cast<double>(data.size());
        m.forward_rows = result.forward_rows;
        result.epochs.push_back(m);
    }
    return result;
}

}  // namespace auginf

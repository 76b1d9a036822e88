#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "auginf/errors.hpp"
#include "auginf/likelihood.hpp"
#include "auginf/model.hpp"
#include "auginf/rng.hpp"
#include "auginf/target.hpp"

namespace auginf {

// Mean-field Gaussian over the target's parameter vector.
struct VariationalPosterior {
    ParamVector mean;
    std::vector<double> log_std;

    void validate() const {
        if (mean.size() != log_std.size()) throw ContractError("variational posterior: layout mismatch");
        if (mean.size() == 0) throw ContractError("variational posterior: empty");
        if (!all_finite(mean.span()) || !all_finite(std::span<const double>(log_std)))
            throw NumericError("variational posterior: non-finite entries");
    }

    double log_q(const ParamVector& w) const {
        constexpr double ln2pi = 1.8378770664093454836;
        double acc = 0.0;
        for (std::size_t j = 0; j < mean.size(); ++j) {
            double sd = std::exp(log_std[j]);
            double z = (w[j] - mean[j]) / sd;
            acc += -0.5 * z * z - 0.5 * ln2pi - log_std[j];
        }
        return acc;
    }
};

// Monte Carlo evidence lower bound E_Q[G(w) - log Q(w)] via the
// location-scale reparameterization w = mean + std * eta.
inline double elbo_estimate(const TargetDensity& target, const VariationalPosterior& q, int n_mc,
                            RngStream& rng) {
    q.validate();
    if (n_mc < 1) throw ContractError("elbo_estimate: n_mc must be >= 1");
    if (q.mean.size() != target.dim()) throw ContractError("elbo_estimate: dimension mismatch");
    constexpr double ln2pi = 1.8378770664093454836;
    double acc = 0.0;
    ParamVector w(q.mean.size());
    for (int s = 0; s < n_mc; ++s) {
        double logq = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            double eta = rng.next_gaussian();
            w[j] = q.mean[j] + std::exp(q.log_std[j]) * eta;
            logq += -0.5 * eta * eta - 0.5 * ln2pi - q.log_std[j];
        }
        acc += target.log_density(w, rng) - logq;
    }
    return acc / static_cast<double>(n_mc);
}

// Spec'd convenience form over the network posterior, untempered by default.
inline double elbo_estimate(const MlpModel& model, const VariationalPosterior& q, const Dataset& data,
                            const Orbit& orbit, const LikelihoodSpec& lik, const PriorSpec& prior, int n_mc,
                            RngStream& rng, const TemperingSpec& tempering = {}) {
    BnnPosterior target(model, data, orbit, lik, prior, tempering);
    return elbo_estimate(target, q, n_mc, rng);
}

struct ViConfig {
    int iterations = 2000;
    int n_mc = 16;
    double learning_rate = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double init_log_std = -2.0;
    std::optional<ParamVector> init_mean;

    void validate() const {
        if (iterations < 1) throw ConfigError("vi: iterations must be >= 1");
        if (n_mc < 1) throw ConfigError("vi: n_mc must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("vi: learning rate must be > 0");
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
            throw ConfigError("vi: betas must be in [0,1)");
    }
};

struct ViResult {
    VariationalPosterior q;
    std::vector<double> elbo_trace;  // per-iteration estimate from the gradient samples
};

// Stochastic ELBO ascent with Adam. Reparameterized gradients:
//   d/d mean    = E[grad G(w)]
//   d/d log_std = E[grad G(w) * std * eta] + 1
// the +1 being the entropy derivative. The learning rate drops to a tenth
// for the final 30% of iterations to quiet Monte Carlo jitter near the
// optimum.
inline ViResult fit_vi(const TargetDensity& target, const ViConfig& cfg, RngStream rng) {
    cfg.validate();
    std::size_t d = target.dim();
    ViResult result;
    result.q.mean = cfg.init_mean ? *cfg.init_mean : ParamVector(d);
    if (result.q.mean.size() != d) throw ContractError("fit_vi: init mean layout mismatch");
    result.q.log_std.assign(d, cfg.init_log_std);
    result.elbo_trace.reserve(static_cast<std::size_t>(cfg.iterations));

    constexpr double ln2pi = 1.8378770664093454836;
    std::vector<double> m1(2 * d, 0.0), m2(2 * d, 0.0);  // Adam moments: [mean grads | log_std grads]
    ParamVector w(d);
    std::vector<double> eta(d);
    int drop_at = (7 * cfg.iterations) / 10;

    for (int it = 0; it < cfg.iterations; ++it) {
        std::vector<double> g_mean(d, 0.0), g_logstd(d, 0.0);
        double elbo = 0.0;
        for (int s = 0; s < cfg.n_mc; ++s) {
            double logq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                eta[j] = rng.next_gaussian();
                w[j] = result.q.mean[j] + std::exp(result.q.log_std[j]) * eta[j];
                logq += -0.5 * eta[j] * eta[j] - 0.5 * ln2pi - result.q.log_std[j];
            }
            auto [value, grad] = target.value_grad(w, rng);
            elbo += value - logq;
            for (std::size_t j = 0; j < d; ++j) {
                g_mean[j] += grad[j];
                g_logstd[j] += grad[j] * std::exp(result.q.log_std[j]) * eta[j];
            }
        }
        double inv = 1.0 / static_cast<double>(cfg.n_mc);
        for (std::size_t j = 0; j < d; ++j) {
            g_mean[j] *= inv;
            g_logstd[j] = g_logstd[j] * inv + 1.0;
        }
        result.elbo_trace.push_back(elbo * inv);

        double lr = it < drop_at ? cfg.learning_rate : cfg.learning_rate * 0.1;
        double b1t = 1.0 - std::pow(cfg.beta1, it + 1);
        double b2t = 1.0 - std::pow(cfg.beta2, it + 1);
        for (std::size_t j = 0; j < 2 * d; ++j) {
            double g = j < d ? g_mean[j] : g_logstd[j - d];
            m1[j] = cfg.beta1 * m1[j] + (1.0 - cfg.beta1) * g;
            m2[j] = cfg.beta2 * m2[j] + (1.0 - cfg.beta2) * g * g;
            double step = lr * (m1[j] / b1t) / (std::sqrt(m2[j] / b2t) + cfg.adam_eps);
            if (j < d)
                result.q.mean[j] += step;
            else
                result.q.log_std[j - d] += step;
        }
        if (!all_finite(result.q.mean.span()) || !all_finite(std::span<const double>(result.q.log_std)))
            throw DivergenceError("fit_vi: non-finite variational parameters", it);
    }
    result.q.validate();
    return result;
}

// Discrepancy between the orbit-averaged gradient of the per-augmentation
// log-likelihood and the gradient of the orbit-averaged log-likelihood.
// These agree by linearity, which is what lets the expected weight update
// under random augmentation stand in for training on the averaged loss.
inline double expected_update_equivalence_check(const MlpModel& model, const ParamVector& w,
                                                std::span<const double> x, int y, const Orbit& orbit) {
    Tensor rows = orbit_rows_exact(orbit, x);
    std::size_t a = rows.rows();

    ParamVector lhs(model.param_count());
    for (std::size_t i = 0; i < a; ++i) {
        ExampleTerm one;
        one.rows = Tensor::row_matrix(rows.row(i));
        one.label = y;
        one.variant = Variant::noaug;
        example_loglik_grad(model, w, one, lhs);
    }
    for (std::size_t j = 0; j < lhs.size(); ++j) lhs[j] /= static_cast<double>(a);

    ExampleTerm avg;
    avg.rows = rows;
    avg.label = y;
    avg.variant = Variant::loss_avg;
    ParamVector rhs(model.param_count());
    example_loglik_grad(model, w, avg, rhs);

    double acc = 0.0;
    for (std::size_t j = 0; j < lhs.size(); ++j) {
        double diff = lhs[j] - rhs[j];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

}  // namespace auginf

#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "auginf/dataset.hpp"
#include "auginf/errors.hpp"
#include "auginf/likelihood.hpp"
#include "auginf/model.hpp"
#include "auginf/orbit.hpp"
#include "auginf/rng.hpp"

namespace auginf {

// Posterior exponent control. full raises the whole joint to 1/T (cold
// posteriors); likelihood_only multiplies just the data term by S, the
// posterior obtained when S independent annotators agree on every label.
// In likelihood_only mode T still sets the sampler's dynamics temperature
// and defaults to 1.
struct TemperingSpec {
    enum class Mode { full, likelihood_only };

    double T = 1.0;
    Mode mode = Mode::full;
    double S = 1.0;

    void validate() const {
        if (!(T > 0.0)) throw ConfigError("tempering: T must be > 0");
        if (!(S >= 1.0)) throw ConfigError("tempering: S must be >= 1");
    }

    double prior_scale() const { return mode == Mode::full ? 1.0 / T : 1.0; }
    double likelihood_scale() const { return mode == Mode::full ? 1.0 / T : S; }
};

inline std::string to_string(TemperingSpec::Mode m) {
    return m == TemperingSpec::Mode::full ? "full" : "likelihood_only";
}

inline TemperingSpec::Mode tempering_mode_from_string(const std::string& s) {
    if (s == "full") return TemperingSpec::Mode::full;
    if (s == "likelihood_only") return TemperingSpec::Mode::likelihood_only;
    throw ConfigError("unknown tempering mode '" + s + "'");
}

// Isotropic Gaussian prior over weights. uniform applies one variance to all
// parameters; per_layer_fan_in divides the base variance by each layer's
// fan-in, the default scaling.
struct PriorSpec {
    enum class Scaling { uniform, per_layer_fan_in };

    Scaling scaling = Scaling::per_layer_fan_in;
    double variance = 1.0;

    void validate() const {
        if (!(variance > 0.0)) throw ConfigError("prior: variance must be > 0");
    }

    std::vector<double> per_param_variance(const MlpModel& model) const {
        validate();
        std::vector<double> v(model.param_count());
        for (std::size_t l = 0; l < model.num_layers(); ++l) {
            double vl = scaling == Scaling::uniform ? variance : variance / static_cast<double>(model.fan_in(l));
            std::size_t begin = model.weight_offset(l);
            std::size_t end = begin + model.layer_param_count(l);
            for (std::size_t j = begin; j < end; ++j) v[j] = vl;
        }
        return v;
    }
};

inline std::string to_string(PriorSpec::Scaling s) {
    return s == PriorSpec::Scaling::uniform ? "uniform" : "per_layer_fan_in";
}

inline PriorSpec::Scaling prior_scaling_from_string(const std::string& s) {
    if (s == "uniform") return PriorSpec::Scaling::uniform;
    if (s == "per_layer_fan_in") return PriorSpec::Scaling::per_layer_fan_in;
    throw ConfigError("unknown prior scaling '" + s + "'");
}

// Normalized Gaussian log density terms; constants kept because the evidence
// bound checks need them.
inline double log_gaussian_prior(std::span<const double> w, std::span<const double> variance) {
    if (w.size() != variance.size()) throw ContractError("prior: variance size mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j)
        acc += -0.5 * w[j] * w[j] / variance[j] - 0.5 * std::log(2.0 * 3.14159265358979323846 * variance[j]);
    return acc;
}

inline void add_gaussian_prior_grad(std::span<const double> w, std::span<const double> variance, double scale,
                                    std::span<double> grad) {
    for (std::size_t j = 0; j < w.size(); ++j) grad[j] += scale * (-w[j] / variance[j]);
}

// ---------------------------------------------------------------------------
// A target for the samplers and VI: the (tempered) log density up to the
// posterior normalizing constant. Evaluation may consume RNG draws, either
// for augmentation sampling or minibatch selection, making the density
// stochastic but unbiased in the usual SG-MCMC sense.

class TargetDensity {
  public:
    virtual ~TargetDensity() = default;
    virtual std::size_t dim() const = 0;
    virtual double log_density(const ParamVector& w, RngStream& rng) const = 0;
    virtual ParamVector grad_log_density(const ParamVector& w, RngStream& rng) const = 0;
    virtual std::pair<double, ParamVector> value_grad(const ParamVector& w, RngStream& rng) const {
        return {log_density(w, rng), grad_log_density(w, rng)};
    }
};

// The Bayesian neural network posterior: Gaussian prior over MLP weights
// plus the configured augmentation likelihood over a classification dataset,
// under the tempering rule. batch_size 0 evaluates the full dataset.
class BnnPosterior final : public TargetDensity {
  public:
    BnnPosterior(MlpModel model, Dataset data, Orbit orbit, LikelihoodSpec lik, PriorSpec prior,
                 TemperingSpec tempering, std::size_t batch_size = 0)
        : model_(std::move(model)),
          data_(std::move(data)),
          orbit_(std::move(orbit)),
          lik_(lik),
          prior_(prior),
          tempering_(tempering),
          batch_size_(batch_size) {
        model_.validate();
        data_.validate();
        lik_.validate();
        prior_.validate();
        tempering_.validate();
        if (model_.layer_widths.front() != static_cast<int>(data_.dim()))
            throw ContractError("posterior: model input width != dataset dimension");
        if (model_.layer_widths.back() < data_.classes)
            throw ContractError("posterior: model output width < class count");
        variance_ = prior_.per_param_variance(model_);
    }

    std::size_t dim() const override { return model_.param_count(); }
    const MlpModel& model() const { return model_; }
    const Dataset& data() const { return data_; }
    const Orbit& orbit() const { return orbit_; }
    const LikelihoodSpec& likelihood() const { return lik_; }
    const TemperingSpec& tempering() const { return tempering_; }

    long long forward_rows() const { return forward_rows_; }

    double log_density(const ParamVector& w, RngStream& rng) const override {
        BatchTerm batch = draw_batch(rng);
        double lik = batch_loglik(model_, w, batch) * batch_scale(batch);
        forward_rows_ += static_cast<long long>(batch.rows.rows());
        double prior = log_gaussian_prior(w.span(), variance_);
        return tempering_.prior_scale() * prior + tempering_.likelihood_scale() * lik;
    }

    ParamVector grad_log_density(const ParamVector& w, RngStream& rng) const override {
        return value_grad(w, rng).second;
    }

    std::pair<double, ParamVector> value_grad(const ParamVector& w, RngStream& rng) const override {
        BatchTerm batch = draw_batch(rng);
        ParamVector g(model_.param_count());
        double lik = batch_loglik_grad(model_, w, batch, g) * batch_scale(batch);
        forward_rows_ += static_cast<long long>(batch.rows.rows());
        double scale = tempering_.likelihood_scale() * batch_scale(batch);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] *= scale;
        double prior = log_gaussian_prior(w.span(), variance_);
        add_gaussian_prior_grad(w.span(), variance_, tempering_.prior_scale(), g.span());
        double value = tempering_.prior_scale() * prior + tempering_.likelihood_scale() * lik;
        return {value, std::move(g)};
    }

  private:
    double batch_scale(const BatchTerm& batch) const {
        return static_cast<double>(data_.size()) / static_cast<double>(batch.labels.size());
    }

    BatchTerm draw_batch(RngStream& rng) const {
        std::vector<std::size_t> idx(data_.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::size_t take = (batch_size_ == 0 || batch_size_ >= data_.size()) ? data_.size() : batch_size_;
        if (take < data_.size()) {
            for (std::size_t i = 0; i < take; ++i) {
                std::size_t j = i + static_cast<std::size_t>(rng.next_below(idx.size() - i));
                std::swap(idx[i], idx[j]);
            }
            idx.resize(take);
        }
        return prepare_batch(lik_.variant, lik_.estimator, orbit_, data_.inputs, data_.labels, idx,
                             lik_.k_train, rng);
    }

    MlpModel model_;
    Dataset data_;
    Orbit orbit_;
    LikelihoodSpec lik_;
    PriorSpec prior_;
    TemperingSpec tempering_;
    std::size_t batch_size_;
    std::vector<double> variance_;
    mutable long long forward_rows_ = 0;
};

// Gaussian location model: observations y_i ~ Normal(w, I_d) with prior
// w ~ Normal(0, prior_variance * I_d). Everything about the tempered
// posterior is available in closed form, which makes this the measuring
// stick for the samplers and for VI.
class ConjugateGaussianPosterior final : public TargetDensity {
  public:
    ConjugateGaussianPosterior(Tensor observations, double prior_variance, TemperingSpec tempering)
        : obs_(std::move(observations)), prior_variance_(prior_variance), tempering_(tempering) {
        if (obs_.rank() != 2 || obs_.rows() == 0) throw ContractError("conjugate target: observations must be N x d");
        if (!(prior_variance_ > 0.0)) throw ConfigError("conjugate target: prior variance must be > 0");
        tempering_.validate();
    }

    std::size_t dim() const override { return obs_.cols(); }
    std::size_t n_obs() const { return obs_.rows(); }
    const TemperingSpec& tempering() const { return tempering_; }

    double log_density(const ParamVector& w, RngStream&) const override {
        if (w.size() != dim()) throw ContractError("conjugate target: dimension mismatch");
        constexpr double ln2pi = 1.8378770664093454836;
        double lik = 0.0;
        for (std::size_t i = 0; i < obs_.rows(); ++i) {
            std::span<const double> y = obs_.row(i);
            for (std::size_t j = 0; j < dim(); ++j) {
                double r = y[j] - w[j];
                lik += -0.5 * r * r - 0.5 * ln2pi;
            }
        }
        double prior = 0.0;
        for (std::size_t j = 0; j < dim(); ++j)
            prior += -0.5 * w[j] * w[j] / prior_variance_ - 0.5 * (ln2pi + std::log(prior_variance_));
        return tempering_.prior_scale() * prior + tempering_.likelihood_scale() * lik;
    }

    ParamVector grad_log_density(const ParamVector& w, RngStream&) const override {
        if (w.size() != dim()) throw ContractError("conjugate target: dimension mismatch");
        ParamVector g(dim());
        double ls = tempering_.likelihood_scale(), ps = tempering_.prior_scale();
        for (std::size_t i = 0; i < obs_.rows(); ++i) {
            std::span<const double> y = obs_.row(i);
            for (std::size_t j = 0; j < dim(); ++j) g[j] += ls * (y[j] - w[j]);
        }
        for (std::size_t j = 0; j < dim(); ++j) g[j] += ps * (-w[j] / prior_variance_);
        return g;
    }

    // Per-coordinate posterior moments of exp(log_density), which is Gaussian
    // in w. full mode: precision (1/v + n)/T; likelihood_only: 1/v + S n.
    double posterior_mean(std::size_t j) const {
        double n = static_cast<double>(obs_.rows());
        double sum = 0.0;
        for (std::size_t i = 0; i < obs_.rows(); ++i) sum += obs_(i, j);
        double ls = tempering_.likelihood_scale(), ps = tempering_.prior_scale();
        return ls * sum / (ps / prior_variance_ + ls * n);
    }

    double posterior_variance() const {
        double n = static_cast<double>(obs_.rows());
        double ls = tempering_.likelihood_scale(), ps = tempering_.prior_scale();
        return 1.0 / (ps / prior_variance_ + ls * n);
    }

    // log of the normalizer of exp(log_density); exact because the exponent
    // is quadratic.
    double log_evidence() const {
        double v = posterior_variance();
        ParamVector mode(dim());
        for (std::size_t j = 0; j < dim(); ++j) mode[j] = posterior_mean(j);
        RngStream unused(0);
        double peak = log_density(mode, unused);
        return peak + 0.5 * static_cast<double>(dim()) * std::log(2.0 * 3.14159265358979323846 * v);
    }

  private:
    Tensor obs_;
    double prior_variance_;
    TemperingSpec tempering_;
};

// Named operation form: assemble the tempered log posterior in one call.
inline double log_posterior(const MlpModel& model, const ParamVector& w, const Dataset& data,
                            const Orbit& orbit, const LikelihoodSpec& lik, const PriorSpec& prior,
                            const TemperingSpec& tempering, RngStream& rng) {
    BnnPosterior target(model, data, orbit, lik, prior, tempering);
    return target.log_density(w, rng);
}

}  // namespace auginf

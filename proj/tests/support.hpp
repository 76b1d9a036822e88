#pragma once

// Shared helpers for the statistical suites: conjugate Gaussian targets with
// known moments, multi-chain runs, and per-chain summary statistics. The
// moment checks compare pooled chain estimates against closed forms using
// the spread across independent chains as the standard-error estimate.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "auginf/sampler.hpp"
#include "auginf/target.hpp"
#include "auginf/vi.hpp"

namespace testsupport {

inline auginf::Tensor gaussian_observations(int n, int d, double loc, std::uint64_t seed) {
    auginf::RngStream rng(seed);
    auginf::Tensor obs = auginf::Tensor::zeros({static_cast<std::size_t>(n), static_cast<std::size_t>(d)});
    for (double& v : obs.data) v = loc + rng.next_gaussian();
    return obs;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v) {
    double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

struct ChainStats {
    std::vector<double> means;    // per chain: coordinate-0 sample mean, post burn-in
    std::vector<double> vars;     // per chain: coordinate-0 sample variance
    std::vector<double> kinetic;  // per chain: mean kinetic temperature, post burn-in
};

// Pooled estimate and its standard error from the chain-to-chain spread.
struct PooledStat {
    double value = 0.0;
    double se = 0.0;
};

inline PooledStat pool(const std::vector<double>& per_chain) {
    PooledStat out;
    out.value = mean_of(per_chain);
    out.se = sd_of(per_chain) / std::sqrt(static_cast<double>(per_chain.size()));
    return out;
}

// Runs independent chains (split streams) against a target and collects
// coordinate-0 moments from the post-burn-in samples of each chain. The
// schedule alternates base and half step sizes so no epoch freezes the
// chain, and every epoch contributes a sample.
inline ChainStats run_chains(const auginf::TargetDensity& target, const auginf::TemperingSpec& tempering,
                             auginf::SamplerKind kind, double base_step, double friction, int cycles,
                             int steps_per_epoch, int n_chains, std::uint64_t seed) {
    auginf::ChainConfig cfg;
    cfg.kind = kind;
    cfg.tempering = tempering;
    cfg.friction = friction;
    cfg.schedule.cycles = cycles;
    cfg.schedule.epochs_per_cycle = 2;
    cfg.schedule.samples_per_cycle = 2;
    cfg.schedule.steps_per_epoch = steps_per_epoch;
    cfg.schedule.base_step = base_step;

    auginf::RngStream root(seed);
    ChainStats stats;
    for (int c = 0; c < n_chains; ++c) {
        auginf::ChainResult res = auginf::run_chain(target, cfg, root.split_index(static_cast<std::uint64_t>(c)));
        if (res.diverged) throw std::runtime_error("chain diverged: " + res.divergence_message);

        std::size_t skip = res.samples.size() / 5;
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = skip; i < res.samples.size(); ++i) {
            sum += res.samples[i][0];
            ++n;
        }
        double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = skip; i < res.samples.size(); ++i) {
            double d = res.samples[i][0] - mean;
            ss += d * d;
        }
        stats.means.push_back(mean);
        stats.vars.push_back(ss / static_cast<double>(n - 1));

        std::size_t tskip = res.trace.size() / 5;
        double ksum = 0.0;
        std::size_t kn = 0;
        for (std::size_t i = tskip; i < res.trace.size(); ++i) {
            ksum += res.trace[i].kinetic_temp;
            ++kn;
        }
        stats.kinetic.push_back(ksum / static_cast<double>(kn));
    }
    return stats;
}

// Closed-form evidence lower bound of a diagonal Gaussian q against the
// conjugate target. The target exponent is quadratic around its mode, so
// E_q[G] and the entropy are both exact:
//   E_q[G]  = G(mode) - sum_j ((m_j - mu_j)^2 + sigma_j^2) / (2 v)
//   entropy = sum_j (log sigma_j + (1 + ln 2 pi)/2)
inline double exact_elbo(const auginf::ConjugateGaussianPosterior& target,
                         const auginf::VariationalPosterior& q) {
    double v = target.posterior_variance();
    std::size_t d = target.dim();
    auginf::ParamVector mode(d);
    for (std::size_t j = 0; j < d; ++j) mode[j] = target.posterior_mean(j);
    auginf::RngStream unused(0);
    double acc = target.log_density(mode, unused);
    constexpr double half_ln_2pi_e = 1.4189385332046727418;
    for (std::size_t j = 0; j < d; ++j) {
        double dm = q.mean[j] - mode[j];
        double s2 = std::exp(2.0 * q.log_std[j]);
        acc += -(dm * dm + s2) / (2.0 * v) + q.log_std[j] + half_ln_2pi_e;
    }
    return acc;
}

// Conjugate-cell step sizes chosen so the discretization bias stays well
// inside the 3-standard-error band: SGLD runs at a twentieth of the
// posterior variance, the momentum scheme at a tenth of the posterior width
// in momentum units (both dimensionless in the target's own scale).
inline double sgld_step_for(const auginf::ConjugateGaussianPosterior& target) {
    return 0.05 * target.posterior_variance();
}

inline double ggmc_step_for(const auginf::ConjugateGaussianPosterior& target) {
    return 0.1 * std::sqrt(target.posterior_variance() / target.tempering().T);
}

}  // namespace testsupport

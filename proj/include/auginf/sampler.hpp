#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "auginf/errors.hpp"
#include "auginf/model.hpp"
#include "auginf/rng.hpp"
#include "auginf/target.hpp"

namespace auginf {

// Per-cycle cosine step-size decay. An epoch is steps_per_epoch sampler
// steps; the step size is held for a whole epoch and follows
// base_step * (cos(pi * e/E) + 1)/2 across the E epochs of a cycle. The last
// samples_per_cycle epochs of each cycle each contribute one weight snapshot.
struct CyclicalSchedule {
    int cycles = 1;
    int epochs_per_cycle = 1;
    int samples_per_cycle = 1;
    int steps_per_epoch = 1;
    double base_step = 1e-3;

    void validate() const {
        if (cycles < 1) throw ConfigError("schedule: cycles must be >= 1");
        if (epochs_per_cycle < 1) throw ConfigError("schedule: epochs_per_cycle must be >= 1");
        if (samples_per_cycle < 1 || samples_per_cycle > epochs_per_cycle)
            throw ConfigError("schedule: need 1 <= samples_per_cycle <= epochs_per_cycle");
        if (steps_per_epoch < 1) throw ConfigError("schedule: steps_per_epoch must be >= 1");
        if (!(base_step > 0.0)) throw ConfigError("schedule: base_step must be > 0");
    }

    double step_size(int epoch_in_cycle) const {
        double t = static_cast<double>(epoch_in_cycle) / static_cast<double>(epochs_per_cycle);
        return base_step * 0.5 * (std::cos(3.14159265358979323846 * t) + 1.0);
    }

    bool sample_at(int epoch_in_cycle) const {
        return epoch_in_cycle >= epochs_per_cycle - samples_per_cycle;
    }

    int total_epochs() const { return cycles * epochs_per_cycle; }
    int total_samples() const { return cycles * samples_per_cycle; }
};

struct SamplerState {
    ParamVector w;
    ParamVector m;           // momentum, same layout as w; unused by SGLD
    double step_size = 1e-3;
    double friction = 1.0;   // momentum refresh mixing, in (0, 1]
    TemperingSpec tempering;
    RngStream rng;
    long step_index = 0;
    int cycle = 0;
    int epoch_in_cycle = 0;

    void validate() const {
        if (m.size() != w.size()) throw ContractError("sampler state: momentum layout mismatch");
        if (!(step_size > 0.0)) throw ContractError("sampler state: step size must be > 0");
        if (!(friction > 0.0) || friction > 1.0) throw ContractError("sampler state: friction must be in (0,1]");
        tempering.validate();
    }
};

// ‖m‖²/d with unit mass: the equipartition estimate of the dynamics
// temperature.
inline double kinetic_temperature(std::span<const double> m) {
    if (m.empty()) throw ContractError("kinetic_temperature: empty momentum");
    double acc = 0.0;
    for (double v : m) acc += v * v;
    return acc / static_cast<double>(m.size());
}

// The same estimate restricted to each layer's parameter block.
inline std::vector<double> kinetic_temperature_per_layer(const MlpModel& model, const ParamVector& m) {
    if (m.size() != model.param_count()) throw ContractError("kinetic_temperature: layout mismatch");
    std::vector<double> out;
    out.reserve(model.num_layers());
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        std::size_t begin = model.weight_offset(l), count = model.layer_param_count(l);
        out.push_back(kinetic_temperature(std::span<const double>(m.values).subspan(begin, count)));
    }
    return out;
}

// One overdamped Langevin update targeting exp(G), where grad is the
// gradient of the (already tempered) target exponent G at state.w:
//   w += (eps/2) grad + sqrt(eps) eta.
// With zero gradient the increment is pure noise of variance eps.
inline SamplerState& sgld_step(SamplerState& state, const ParamVector& grad) {
    if (grad.size() != state.w.size()) throw ContractError("sgld_step: gradient layout mismatch");
    if (!all_finite(grad.span())) throw DivergenceError("sgld_step: non-finite gradient", state.step_index);
    double eps = state.step_size;
    double noise = std::sqrt(eps);
    for (std::size_t j = 0; j < state.w.size(); ++j)
        state.w[j] += 0.5 * eps * grad[j] + noise * state.rng.next_gaussian();
    if (!all_finite(state.w.span())) throw DivergenceError("sgld_step: non-finite state", state.step_index);
    ++state.step_index;
    return state;
}

using GradFn = std::function<ParamVector(const ParamVector&, RngStream&)>;

namespace detail {

inline void ggmc_refresh(SamplerState& state) {
    double keep = std::sqrt(1.0 - state.friction);
    double inject = std::sqrt(state.friction * state.tempering.T);
    for (std::size_t j = 0; j < state.m.size(); ++j)
        state.m[j] = keep * state.m[j] + inject * state.rng.next_gaussian();
}

inline void ggmc_kick(SamplerState& state, const ParamVector& grad, double h) {
    if (grad.size() != state.w.size()) throw ContractError("ggmc_step: gradient layout mismatch");
    if (!all_finite(grad.span())) throw DivergenceError("ggmc_step: non-finite gradient", state.step_index);
    // Force is T * grad(G): the dynamics run at temperature T, so the
    // stationary position marginal exp(-U/T) with U = -T G is exp(G) itself.
    double scale = 0.5 * h * state.tempering.T;
    for (std::size_t j = 0; j < state.m.size(); ++j) state.m[j] += scale * grad[j];
}

}  // namespace detail

// One gradient-guided underdamped Langevin update in the symmetric splitting
// order: half refresh, half kick, full drift, half kick, half refresh. The
// refresh m <- sqrt(1-gamma) m + sqrt(gamma T) eta reduces to a full
// momentum resample from Normal(0, T I) at gamma = 1. Unit mass. grad_fn is
// called at the pre-drift and post-drift positions.
inline SamplerState& ggmc_step(SamplerState& state, const GradFn& grad_fn) {
    state.validate();
    double h = state.step_size;
    detail::ggmc_refresh(state);
    detail::ggmc_kick(state, grad_fn(state.w, state.rng), h);
    for (std::size_t j = 0; j < state.w.size(); ++j) state.w[j] += h * state.m[j];
    if (!all_finite(state.w.span())) throw DivergenceError("ggmc_step: non-finite state", state.step_index);
    detail::ggmc_kick(state, grad_fn(state.w, state.rng), h);
    detail::ggmc_refresh(state);
    if (!all_finite(state.m.span())) throw DivergenceError("ggmc_step: non-finite momentum", state.step_index);
    ++state.step_index;
    return state;
}

enum class SamplerKind { sgld, ggmc };

inline std::string to_string(SamplerKind k) { return k == SamplerKind::sgld ? "sgld" : "ggmc"; }

inline SamplerKind sampler_kind_from_string(const std::string& s) {
    if (s == "sgld") return SamplerKind::sgld;
    if (s == "ggmc") return SamplerKind::ggmc;
    throw ConfigError("unknown sampler '" + s + "'");
}

struct ChainConfig {
    SamplerKind kind = SamplerKind::sgld;
    CyclicalSchedule schedule;
    TemperingSpec tempering;
    double friction = 1.0;
    std::optional<ParamVector> init;  // zero vector when absent

    void validate() const {
        schedule.validate();
        tempering.validate();
        if (!(friction > 0.0) || friction > 1.0) throw ConfigError("chain: friction must be in (0,1]");
    }
};

struct ChainTracePoint {
    int cycle = 0;
    int epoch_global = 0;  // 1-based
    double step_size = 0.0;
    double kinetic_temp = 0.0;
    double log_density = 0.0;
    bool sampled = false;
};

struct ChainResult {
    std::vector<ParamVector> samples;
    std::vector<ChainTracePoint> trace;
    bool diverged = false;
    std::string divergence_message;
    long steps = 0;
};

// Runs the full cyclical schedule against a target. A divergence stops the
// chain and returns everything collected so far with diverged set; all other
// errors propagate.
inline ChainResult run_chain(const TargetDensity& target, const ChainConfig& cfg, RngStream rng) {
    cfg.validate();
    SamplerState state;
    state.w = cfg.init ? *cfg.init : ParamVector(target.dim());
    if (state.w.size() != target.dim()) throw ContractError("run_chain: init layout mismatch");
    state.m = ParamVector(target.dim());
    state.friction = cfg.friction;
    state.tempering = cfg.tempering;
    state.rng = rng.split("chain");
    for (std::size_t j = 0; j < state.m.size(); ++j)
        state.m[j] = std::sqrt(cfg.tempering.T) * state.rng.next_gaussian();

    GradFn grad_fn = [&target](const ParamVector& w, RngStream& r) { return target.grad_log_density(w, r); };

    ChainResult result;
    result.samples.reserve(static_cast<std::size_t>(cfg.schedule.total_samples()));
    try {
        int epoch_global = 0;
        for (state.cycle = 0; state.cycle < cfg.schedule.cycles; ++state.cycle) {
            for (state.epoch_in_cycle = 0; state.epoch_in_cycle < cfg.schedule.epochs_per_cycle;
                 ++state.epoch_in_cycle) {
                state.step_size = cfg.schedule.step_size(state.epoch_in_cycle);
                for (int s = 0; s < cfg.schedule.steps_per_epoch; ++s) {
                    if (cfg.kind == SamplerKind::sgld) {
                        sgld_step(state, target.grad_log_density(state.w, state.rng));
                    } else {
                        ggmc_step(state, grad_fn);
                    }
                }
                ++epoch_global;
                ChainTracePoint pt;
                pt.cycle = state.cycle;
                pt.epoch_global = epoch_global;
                pt.step_size = state.step_size;
                pt.kinetic_temp = cfg.kind == SamplerKind::ggmc ? kinetic_temperature(state.m.span()) : 0.0;
                pt.log_density = target.log_density(state.w, state.rng);
                pt.sampled = cfg.schedule.sample_at(state.epoch_in_cycle);
                if (pt.sampled) result.samples.push_back(state.w);
                result.trace.push_back(pt);
            }
        }
    } catch (const DivergenceError& e) {
        result.diverged = true;
        result.divergence_message = e.what();
    }
    result.steps = state.step_index;
    return result;
}

// Assembles the network posterior and runs the schedule against it.
inline ChainResult run_chain(const MlpModel& model, const Dataset& data, const Orbit& orbit,
                             const LikelihoodSpec& lik, const PriorSpec& prior, const TemperingSpec& tempering,
                             const ChainConfig& cfg_in, RngStream rng, std::size_t batch_size = 0) {
    BnnPosterior target(model, data, orbit, lik, prior, tempering, batch_size);
    ChainConfig cfg = cfg_in;
    cfg.tempering = tempering;
    if (!cfg.init) {
        RngStream wrng = rng.split("init");
        cfg.init = init_params(model, wrng);
    }
    return run_chain(target, cfg, rng);
}

}  // namespace auginf

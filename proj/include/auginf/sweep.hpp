#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "auginf/checkpoint.hpp"
#include "auginf/config.hpp"
#include "auginf/metrics.hpp"
#include "auginf/predict.hpp"
#include "auginf/sampler.hpp"
#include "auginf/target.hpp"

namespace auginf {

struct SweepCell {
    int index = 0;
    double temperature = 1.0;
    Variant variant = Variant::noaug;
    std::uint64_t seed = 0;
};

// Deterministic cell enumeration: temperature-major, then variant, then seed.
// The cell index seeds the per-cell RNG stream, so results cannot depend on
// which worker thread picks up which cell.
inline std::vector<SweepCell> sweep_cells(const ExperimentConfig& cfg) {
    std::vector<double> temps = cfg.temperatures.empty() ? std::vector<double>{cfg.tempering.T} : cfg.temperatures;
    std::vector<std::string> variants =
        cfg.variants.empty() ? std::vector<std::string>{to_string(cfg.likelihood.variant)} : cfg.variants;
    std::vector<SweepCell> cells;
    int index = 0;
    for (double t : temps)
        for (const std::string& v : variants)
            for (std::uint64_t s : cfg.seeds) {
                SweepCell c;
                c.index = index++;
                c.temperature = t;
                c.variant = variant_from_string(v);
                c.seed = s;
                cells.push_back(c);
            }
    return cells;
}

struct SweepOutcome {
    std::vector<MetricsRecord> records;   // one summary row per cell, in cell order
    std::vector<std::string> statuses;    // "ok" or a divergence note, per cell
    std::string csv_path;
    std::string log_path;
};

namespace detail {

inline int resolve_steps_per_epoch(const ExperimentConfig& cfg, std::size_t n) {
    if (cfg.steps_per_epoch > 0) return cfg.steps_per_epoch;
    if (cfg.batch_size == 0 || cfg.batch_size >= n) return 1;
    return static_cast<int>((n + cfg.batch_size - 1) / cfg.batch_size);
}

inline double mean_kinetic_after_burnin(const ChainResult& chain, int total_epochs) {
    int burn = total_epochs / 5;
    double acc = 0.0;
    int count = 0;
    for (const ChainTracePoint& pt : chain.trace) {
        if (pt.epoch_global <= burn) continue;
        acc += pt.kinetic_temp;
        ++count;
    }
    return count > 0 ? acc / count : 0.0;
}

inline void save_cell_samples(const std::string& out_dir, const std::string& cell_run_id,
                              const std::vector<int>& widths, const TemperingSpec& tempering,
                              std::uint64_t sid_lo, std::uint64_t sid_hi, const ChainResult& chain) {
    for (std::size_t s = 0; s < chain.samples.size(); ++s) {
        CheckpointData ck;
        ck.layer_widths = widths;
        ck.tempering = tempering;
        ck.rng_sid_lo = sid_lo;
        ck.rng_sid_hi = sid_hi;
        ck.params = chain.samples[s];
        std::filesystem::path p =
            std::filesystem::path(out_dir) / (cell_run_id + "-sample" + std::to_string(s) + ".ckpt");
        save_checkpoint(p.string(), ck);
    }
}

}  // namespace detail

// Runs one (temperature, variant, seed) cell: a full cyclical chain plus the
// Bayesian-model-average test evaluation. status receives "ok" or a note
// when the chain diverged partway.
inline MetricsRecord run_sweep_cell(const ExperimentConfig& cfg, const SweepCell& cell, std::string& status) {
    auto started = std::chrono::steady_clock::now();
    RngStream cell_rng = RngStream(cell.seed).split("sweep-cell").split_index(static_cast<std::uint64_t>(cell.index));

    SyntheticData data = build_dataset(cfg.dataset, cell.seed);
    TemperingSpec tempering = cfg.tempering;
    tempering.T = cell.temperature;
    LikelihoodSpec lik = cfg.likelihood;
    lik.variant = cell.variant;
    lik.validate();

    ChainConfig chain_cfg;
    chain_cfg.kind = sampler_kind_from_string(cfg.method);
    chain_cfg.schedule = cfg.schedule;
    chain_cfg.schedule.steps_per_epoch = detail::resolve_steps_per_epoch(cfg, data.train.size());
    chain_cfg.tempering = tempering;
    chain_cfg.friction = cfg.friction;

    std::string cell_run_id =
        cfg.run_id + "-cell" + std::to_string(cell.index) + "-seed" + std::to_string(cell.seed);

    MetricsRecord rec;
    rec.run_id = cell_run_id;
    rec.method = cfg.method;
    rec.variant = to_string(cell.variant);
    rec.k_train = lik.k_train;
    rec.k_test = lik.k_test;
    rec.temperature = cell.temperature;
    rec.epoch = chain_cfg.schedule.total_epochs();

    status = "ok";
    ChainResult chain;

    if (cfg.conjugate_toy()) {
        rec.orbit_mode = "none";
        ConjugateGaussianPosterior target(data.train.inputs, cfg.prior.variance, tempering);
        chain_cfg.init = ParamVector(target.dim());
        chain = run_chain(target, chain_cfg, cell_rng.split("chain"));
        if (cfg.save_samples)
            detail::save_cell_samples(cfg.out_dir, cell_run_id, {static_cast<int>(target.dim())}, tempering,
                                      cell_rng.stream_id_lo(), cell_rng.stream_id_hi(), chain);
    } else {
        RngStream orbit_rng = cell_rng.split("orbit");
        Orbit orbit = build_orbit(cfg.orbit, static_cast<int>(data.train.dim()), orbit_rng);
        rec.orbit_mode = orbit.is_finite() ? "finite" : "stochastic";
        MlpModel model = build_model(cfg.model, static_cast<int>(data.train.dim()), data.train.classes);
        BnnPosterior target(model, data.train, orbit, lik, cfg.prior, tempering, cfg.batch_size);
        RngStream init_rng = cell_rng.split("init");
        chain_cfg.init = init_params(model, init_rng);
        chain = run_chain(target, chain_cfg, cell_rng.split("chain"));
        if (!chain.samples.empty()) {
            RngStream eval_rng = cell_rng.split("eval");
            EvalResult eval = evaluate_dataset(model, chain.samples, data.test, orbit, lik, &eval_rng);
            rec.test_error = eval.error_rate;
            rec.test_nll = eval.nll;
        }
        rec.forward_passes = target.forward_rows();
        if (cfg.save_samples)
            detail::save_cell_samples(cfg.out_dir, cell_run_id, model.layer_widths, tempering,
                                      cell_rng.stream_id_lo(), cell_rng.stream_id_hi(), chain);
    }

    if (chain.diverged) status = "diverged: " + chain.divergence_message;
    rec.epoch = static_cast<int>(chain.trace.size());
    if (!chain.trace.empty()) rec.train_objective = chain.trace.back().log_density;
    rec.kinetic_temperature = detail::mean_kinetic_after_burnin(chain, chain_cfg.schedule.total_epochs());
    rec.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return rec;
}

// One chain per (temperature, variant, seed), run by a small worker pool.
// Rows land in cell order regardless of scheduling, and everything except
// the wall-clock column is a pure function of (config, seed list).
inline SweepOutcome sweep_temperature(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.method != "sgld" && cfg.method != "ggmc")
        throw ConfigError("sweep: method must be sgld or ggmc");
    std::vector<SweepCell> cells = sweep_cells(cfg);
    std::filesystem::create_directories(cfg.out_dir);

    SweepOutcome outcome;
    outcome.records.resize(cells.size());
    outcome.statuses.assign(cells.size(), "");

    unsigned hw = std::thread::hardware_concurrency();
    std::size_t workers = cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads) : (hw > 0 ? hw : 1);
    workers = std::min(workers, cells.size());

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::string> errors(cells.size());

    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= cells.size() || failed.load()) return;
            try {
                outcome.records[i] = run_sweep_cell(cfg, cells[i], outcome.statuses[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
                failed.store(true);
                return;
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    if (failed.load()) {
        for (std::size_t i = 0; i < errors.size(); ++i)
            if (!errors[i].empty()) throw ConfigError("sweep cell " + std::to_string(i) + " failed: " + errors[i]);
        throw ConfigError("sweep failed");
    }

    std::filesystem::path csv = std::filesystem::path(cfg.out_dir) / (cfg.run_id + "-metrics.csv");
    std::filesystem::path log = std::filesystem::path(cfg.out_dir) / (cfg.run_id + "-sweep.log");
    write_metrics_csv(csv.string(), outcome.records);
    std::ofstream logf(log.string(), std::ios::binary);
    for (std::size_t i = 0; i < cells.size(); ++i)
        logf << "cell " << i << " T=" << cells[i].temperature << " variant=" << to_string(cells[i].variant)
             << " seed=" << cells[i].seed << " " << outcome.statuses[i] << "\n";
    outcome.csv_path = csv.string();
    outcome.log_path = log.string();
    return outcome;
}

}  // namespace auginf

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <auginf/auginf.hpp>

namespace {

using namespace auginf;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
    auto* c = cmd->add_option("--config", args.config_path, "experiment config file (JSON)");
    if (config_required) c->required();
    cmd->add_option("--seed", args.seed, "override the config seed list with one seed");
    cmd->add_option("--out", args.out_dir, "override the output directory");
}

ExperimentConfig load_effective_config(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args.config_path);
    if (args.seed) cfg.seeds = {*args.seed};
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    cfg.validate();
    return cfg;
}

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int cmd_gen_data(const CommonArgs& args, const std::string& format) {
    ExperimentConfig cfg = load_effective_config(args);
    std::filesystem::create_directories(cfg.out_dir);
    for (std::uint64_t seed : cfg.seeds) {
        SyntheticData data = build_dataset(cfg.dataset, seed);
        std::string stem = cfg.run_id + "-seed" + std::to_string(seed);
        std::filesystem::path dir(cfg.out_dir);
        if (format == "csv") {
            write_dataset_csv((dir / (stem + "-train.csv")).string(), data.train);
            write_dataset_csv((dir / (stem + "-test.csv")).string(), data.test);
        } else if (format == "idx") {
            write_dataset_idx((dir / (stem + "-train-images")).string(), data.train);
            write_dataset_idx((dir / (stem + "-test-images")).string(), data.test);
        } else {
            throw ConfigError("gen-data: unknown format '" + format + "'");
        }
        std::cout << "wrote " << data.train.size() << " train / " << data.test.size() << " test examples ("
                  << stem << ")\n";
    }
    return 0;
}

MetricsRecord eval_record(const ExperimentConfig& cfg, const std::string& run_id, const MlpModel& model,
                          const std::vector<ParamVector>& samples, const SyntheticData& data,
                          const Orbit& orbit, const LikelihoodSpec& lik, RngStream eval_rng) {
    MetricsRecord rec;
    rec.run_id = run_id;
    rec.method = cfg.method;
    rec.variant = to_string(lik.variant);
    rec.orbit_mode = orbit.is_finite() ? "finite" : "stochastic";
    rec.k_train = lik.k_train;
    rec.k_test = lik.k_test;
    rec.temperature = cfg.tempering.T;
    EvalResult eval = evaluate_dataset(model, samples, data.test, orbit, lik, &eval_rng);
    rec.test_error = eval.error_rate;
    rec.test_nll = eval.nll;
    return rec;
}

int cmd_train_sgd(const CommonArgs& args) {
    ExperimentConfig cfg = load_effective_config(args);
    if (cfg.conjugate_toy()) throw ConfigError("train-sgd: needs a classification dataset");
    std::filesystem::create_directories(cfg.out_dir);
    std::vector<MetricsRecord> records;
    for (std::uint64_t seed : cfg.seeds) {
        auto started = std::chrono::steady_clock::now();
        RngStream root(seed);
        SyntheticData data = build_dataset(cfg.dataset, seed);
        RngStream orbit_rng = root.split("orbit");
        Orbit orbit = build_orbit(cfg.orbit, static_cast<int>(data.train.dim()), orbit_rng);
        MlpModel model = build_model(cfg.model, static_cast<int>(data.train.dim()), data.train.classes);
        SgdResult trained = train_sgd(model, data.train, orbit, cfg.likelihood, cfg.sgd, root.split("sgd"));

        std::string run_id = cfg.run_id + "-seed" + std::to_string(seed);
        MetricsRecord rec = eval_record(cfg, run_id, model, {trained.w}, data, orbit, cfg.likelihood,
                                        root.split("eval"));
        rec.epoch = trained.epochs_run;
        rec.train_objective = trained.epochs.empty() ? 0.0 : trained.epochs.back().objective;
        rec.forward_passes = trained.forward_rows;
        rec.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        records.push_back(rec);

        if (cfg.save_samples) {
            CheckpointData ck = make_checkpoint(model, trained.w);
            save_checkpoint((std::filesystem::path(cfg.out_dir) / (run_id + "-final.ckpt")).string(), ck);
        }
        std::cout << run_id << ": epochs " << trained.epochs_run << ", test error " << g17(rec.test_error)
                  << ", test nll " << g17(rec.test_nll) << "\n";
    }
    write_metrics_csv(
        (std::filesystem::path(cfg.out_dir) / (cfg.run_id + "-metrics.csv")).string(), records);
    return 0;
}

int cmd_sample(const CommonArgs& args) {
    ExperimentConfig cfg = load_effective_config(args);
    if (cfg.method != "sgld" && cfg.method != "ggmc")
        throw ConfigError("sample: config method must be sgld or ggmc");
    SweepOutcome outcome = sweep_temperature(cfg);
    bool any_diverged = false;
    for (std::size_t i = 0; i < outcome.records.size(); ++i) {
        std::cout << outcome.records[i].run_id << ": " << outcome.statuses[i] << ", kinetic T "
                  << g17(outcome.records[i].kinetic_temperature) << "\n";
        if (outcome.statuses[i] != "ok") any_diverged = true;
    }
    std::cout << "metrics: " << outcome.csv_path << "\n";
    return any_diverged ? 4 : 0;
}

int cmd_sweep(const CommonArgs& args) {
    ExperimentConfig cfg = load_effective_config(args);
    SweepOutcome outcome = sweep_temperature(cfg);
    std::size_t diverged = 0;
    for (const std::string& s : outcome.statuses)
        if (s != "ok") ++diverged;
    std::cout << outcome.records.size() << " cells, " << diverged << " diverged\n";
    std::cout << "metrics: " << outcome.csv_path << "\n";
    return 0;
}

int cmd_vi(const CommonArgs& args) {
    ExperimentConfig cfg = load_effective_config(args);
    std::filesystem::create_directories(cfg.out_dir);
    std::vector<MetricsRecord> records;
    for (std::uint64_t seed : cfg.seeds) {
        auto started = std::chrono::steady_clock::now();
        RngStream root(seed);
        SyntheticData data = build_dataset(cfg.dataset, seed);
        std::string run_id = cfg.run_id + "-seed" + std::to_string(seed);
        MetricsRecord rec;

        if (cfg.conjugate_toy()) {
            ConjugateGaussianPosterior target(data.train.inputs, cfg.prior.variance, cfg.tempering);
            ViResult fit = fit_vi(target, cfg.vi, root.split("vi"));
            rec.run_id = run_id;
            rec.method = "vi";
            rec.variant = to_string(cfg.likelihood.variant);
            rec.orbit_mode = "none";
            rec.temperature = cfg.tempering.T;
            rec.train_objective = fit.elbo_trace.back();
            std::cout << run_id << ": final ELBO " << g17(fit.elbo_trace.back()) << ", analytic evidence "
                      << g17(target.log_evidence()) << "\n";
            if (cfg.save_samples) {
                CheckpointData ck;
                ck.layer_widths = {static_cast<int>(target.dim())};
                ck.tempering = cfg.tempering;
                ck.params = fit.q.mean;
                save_checkpoint(
                    (std::filesystem::path(cfg.out_dir) / (run_id + "-vi-mean.ckpt")).string(), ck);
            }
        } else {
            RngStream orbit_rng = root.split("orbit");
            Orbit orbit = build_orbit(cfg.orbit, static_cast<int>(data.train.dim()), orbit_rng);
            MlpModel model = build_model(cfg.model, static_cast<int>(data.train.dim()), data.train.classes);
            BnnPosterior target(model, data.train, orbit, cfg.likelihood, cfg.prior, cfg.tempering,
                                cfg.batch_size);
            ViConfig vi_cfg = cfg.vi;
            RngStream init_rng = root.split("init");
            vi_cfg.init_mean = init_params(model, init_rng);
            ViResult fit = fit_vi(target, vi_cfg, root.split("vi"));

            // BMA over draws from the fitted posterior.
            RngStream qrng = root.split("q-draws");
            std::vector<ParamVector> samples;
            for (int s = 0; s < 16; ++s) {
                ParamVector w(fit.q.mean.size());
                for (std::size_t j = 0; j < w.size(); ++j)
                    w[j] = fit.q.mean[j] + std::exp(fit.q.log_std[j]) * qrng.next_gaussian();
                samples.push_back(std::move(w));
            }
            rec = eval_record(cfg, run_id, model, samples, data, orbit, cfg.likelihood, root.split("eval"));
            rec.method = "vi";
            rec.train_objective = fit.elbo_trace.back();
            rec.forward_passes = target.forward_rows();
            std::cout << run_id << ": final ELBO " << g17(fit.elbo_trace.back()) << ", test error "
                      << g17(rec.test_error) << "\n";
            if (cfg.save_samples) {
                CheckpointData ck = make_checkpoint(model, fit.q.mean);
                ck.tempering = cfg.tempering;
                save_checkpoint(
                    (std::filesystem::path(cfg.out_dir) / (run_id + "-vi-mean.ckpt")).string(), ck);
            }
        }
        rec.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        records.push_back(rec);
    }
    write_metrics_csv(
        (std::filesystem::path(cfg.out_dir) / (cfg.run_id + "-metrics.csv")).string(), records);
    return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::vector<std::string>& checkpoint_paths,
                 std::optional<int> k_test_override) {
    ExperimentConfig cfg = load_effective_config(args);
    if (checkpoint_paths.empty()) throw ConfigError("evaluate: at least one --checkpoint required");
    std::filesystem::create_directories(cfg.out_dir);

    std::uint64_t seed = cfg.seeds.front();
    RngStream root(seed);
    SyntheticData data = build_dataset(cfg.dataset, seed);
    RngStream orbit_rng = root.split("orbit");
    Orbit orbit = build_orbit(cfg.orbit, static_cast<int>(data.train.dim()), orbit_rng);
    MlpModel model = build_model(cfg.model, static_cast<int>(data.train.dim()), data.train.classes);

    std::vector<ParamVector> samples;
    for (const std::string& path : checkpoint_paths) {
        CheckpointData ck = load_checkpoint(path);
        MlpModel from_ck = model_from_checkpoint(ck);
        if (!(from_ck == model))
            throw ConfigError("evaluate: checkpoint '" + path + "' does not match the configured model");
        samples.push_back(ck.params);
    }

    LikelihoodSpec lik = cfg.likelihood;
    if (k_test_override) lik.k_test = *k_test_override;
    lik.validate();

    std::string run_id = cfg.run_id + "-eval";
    MetricsRecord rec = eval_record(cfg, run_id, model, samples, data, orbit, lik, root.split("eval"));
    rec.method = cfg.method;
    write_metrics_csv((std::filesystem::path(cfg.out_dir) / (run_id + ".csv")).string(), {rec});
    std::cout << run_id << ": " << samples.size() << " snapshots, K_test " << lik.k_test << ", test error "
              << g17(rec.test_error) << ", test nll " << g17(rec.test_nll) << "\n";
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, int instances) {
    RngStream root(seed);
    double worst = 0.0;
    const Variant variants[] = {Variant::noaug, Variant::add, Variant::loss_avg, Variant::prob_avg,
                                Variant::logits_avg};
    for (int i = 0; i < instances; ++i) {
        RngStream inst = root.split_index(static_cast<std::uint64_t>(i));
        int dim = 2 + static_cast<int>(inst.next_below(5));
        int classes = 2 + static_cast<int>(inst.next_below(3));
        int depth = static_cast<int>(inst.next_below(4));  // up to 3 hidden layers
        MlpModel model;
        model.layer_widths.push_back(dim);
        for (int l = 0; l < depth; ++l)
            model.layer_widths.push_back(2 + static_cast<int>(inst.next_below(15)));  // <= 16 wide
        model.layer_widths.push_back(classes);
        model.activation = inst.next_below(2) == 0 ? Activation::relu : Activation::tanh;
        ParamVector w = init_params(model, inst);
        // Zero-init biases can park a relu pre-activation exactly on the kink
        // when a narrow earlier layer goes fully dead for one input; jitter
        // every parameter so derivatives are compared only where the
        // objective is differentiable.
        for (double& v : w.values) v += 0.1 * inst.next_gaussian();

        Orbit orbit = Orbit::cyclic_group(dim);
        std::vector<double> x(dim);
        for (double& v : x) v = inst.next_gaussian();
        int label = static_cast<int>(inst.next_below(classes));
        Variant variant = variants[inst.next_below(5)];

        Tensor rows = variant == Variant::noaug ? Tensor::row_matrix(x) : orbit_rows_exact(orbit, x);
        LogitObjective obj;
        obj.inputs = rows;
        obj.value = [variant, label](const Tensor& logits) { return combine_loglik(variant, logits, label); };
        obj.grad_logits = [variant, label](const Tensor& logits) {
            return combine_grad(variant, logits, label);
        };

        ParamVector g = grad_objective(model, w, obj);
        ParamVector fd = finite_difference_gradient(model, w, obj);
        for (std::size_t j = 0; j < g.size(); ++j) {
            double scale = std::max({std::abs(g[j]), std::abs(fd[j]), 1e-8});
            worst = std::max(worst, std::abs(g[j] - fd[j]) / scale);
        }
    }
    std::cout << "gradcheck: " << instances << " instances, max relative error " << g17(worst) << "\n";
    if (worst >= 1e-5) {
        std::cerr << "gradcheck: tolerance 1e-5 exceeded\n";
        return 3;
    }
    return 0;
}

int cmd_audit(const std::string& variant_name, double p, const std::string& construction) {
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("audit-likelihood: --p must lie in (0,1)");
    Variant variant = variant_from_string(variant_name);
    Tensor logits = Tensor::zeros({2, 2});
    logits(0, 0) = std::log(p);
    logits(0, 1) = std::log(1.0 - p);
    if (construction == "mirrored") {
        logits(1, 0) = std::log(1.0 - p);
        logits(1, 1) = std::log(p);
    } else if (construction == "repeated") {
        logits(1, 0) = std::log(p);
        logits(1, 1) = std::log(1.0 - p);
    } else {
        throw ConfigError("audit-likelihood: construction must be mirrored or repeated");
    }
    double label_sum = normalization_audit_logits(variant, logits);
    std::cout << "variant " << variant_name << " construction " << construction << " p " << g17(p)
              << " label_sum " << g17(label_sum) << "\n";
    return 0;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Data-augmentation likelihoods and tempered-posterior inference for small Bayesian networks"};
    app.require_subcommand(1);

    CommonArgs gen_args, sgd_args, sample_args, sweep_args, vi_args, eval_args;
    std::string gen_format = "csv";
    std::vector<std::string> eval_checkpoints;
    std::optional<int> eval_k_test;
    std::uint64_t gradcheck_seed = 1;
    int gradcheck_instances = 10;
    std::string audit_variant = "loss_avg";
    double audit_p = 0.9;
    std::string audit_construction = "mirrored";

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset and write train/test files");
    add_common(gen, gen_args, true);
    gen->add_option("--format", gen_format, "output format: csv or idx")->default_val("csv");

    CLI::App* sgd = app.add_subcommand("train-sgd", "fixed-compute SGD baseline");
    add_common(sgd, sgd_args, true);

    CLI::App* sample = app.add_subcommand("sample", "run one chain per seed at the configured temperature");
    add_common(sample, sample_args, true);

    CLI::App* sweep = app.add_subcommand("sweep-temperature", "chain per (temperature, variant, seed) cell");
    add_common(sweep, sweep_args, true);

    CLI::App* vi = app.add_subcommand("vi", "fit the mean-field variational posterior");
    add_common(vi, vi_args, true);

    CLI::App* eval = app.add_subcommand("evaluate", "Bayesian-model-average evaluation of saved checkpoints");
    add_common(eval, eval_args, true);
    eval->add_option("--checkpoint", eval_checkpoints, "checkpoint file (repeatable)")->required();
    eval->add_option("--k-test", eval_k_test, "override K_test (0 = no test-time augmentation)");

    CLI::App* gradcheck = app.add_subcommand("gradcheck", "reverse-mode vs finite-difference gradients");
    gradcheck->add_option("--seed", gradcheck_seed, "base seed");
    gradcheck->add_option("--instances", gradcheck_instances, "number of random instances")
        ->check(CLI::PositiveNumber);

    CLI::App* audit = app.add_subcommand("audit-likelihood", "label-sum normalization audit on a built example");
    audit->add_option("--variant", audit_variant, "likelihood variant to audit");
    audit->add_option("--p", audit_p, "true-class probability of the first augmentation");
    audit->add_option("--construction", audit_construction, "mirrored or repeated probability rows");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(gen_args, gen_format);
        if (sgd->parsed()) return cmd_train_sgd(sgd_args);
        if (sample->parsed()) return cmd_sample(sample_args);
        if (sweep->parsed()) return cmd_sweep(sweep_args);
        if (vi->parsed()) return cmd_vi(vi_args);
        if (eval->parsed()) return cmd_evaluate(eval_args, eval_checkpoints, eval_k_test);
        if (gradcheck->parsed()) return cmd_gradcheck(gradcheck_seed, gradcheck_instances);
        if (audit->parsed()) return cmd_audit(audit_variant, audit_p, audit_construction);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }

#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "auginf/dataset.hpp"
#include "auginf/errors.hpp"
#include "auginf/likelihood.hpp"
#include "auginf/model.hpp"
#include "auginf/orbit.hpp"
#include "auginf/rng.hpp"
#include "auginf/sampler.hpp"
#include "auginf/sgd.hpp"
#include "auginf/target.hpp"
#include "auginf/vi.hpp"

namespace auginf {

namespace detail {

using json = nlohmann::json;

// Unknown keys are configuration errors, not warnings; a typo that silently
// fell back to a default would corrupt whole sweeps.
inline void require_known_keys(const json& j, const std::string& section,
                               std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("config: '" + section + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("config: unknown key '" + it.key() + "' in '" + section + "'");
    }
}

template <typename T>
T get_field(const json& j, const std::string& section, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + section + "." + key + "'");
    }
}

template <typename T>
T need_field(const json& j, const std::string& section, const char* key) {
    if (!j.contains(key)) throw ConfigError("config: missing required key '" + section + "." + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + section + "." + key + "'");
    }
}

}  // namespace detail

struct DatasetConfig {
    std::string generator;  // one of the built-ins, or empty when loading files
    std::string train_path;
    std::string test_path;
    std::string format = "csv";
    int n_train = 128;
    int n_test = 64;
    int dim = 8;
    int classes = 3;
    double label_noise = 0.0;
    double feature_noise = 0.25;
    double location = 1.0;

    bool from_files() const { return generator.empty(); }

    void validate() const {
        if (generator.empty()) {
            if (train_path.empty() || test_path.empty())
                throw ConfigError("dataset: need either a generator or train_path + test_path");
        } else if (!train_path.empty() || !test_path.empty()) {
            throw ConfigError("dataset: generator and file paths are mutually exclusive");
        }
    }
};

struct ModelConfig {
    std::vector<int> hidden = {16};
    std::string activation = "relu";
    bool bias = true;
};

struct OrbitConfig {
    // identity | cyclic_group | sign_flip | rotation_uniform | jitter_gaussian | cyclic_shift_uniform
    std::string kind = "identity";
    int axis = 0;
    double scale = 0.1;
    int freeze_k = 0;  // > 0 freezes a stochastic family into K fixed draws

    bool stochastic_kind() const {
        return kind == "rotation_uniform" || kind == "jitter_gaussian" || kind == "cyclic_shift_uniform";
    }
};

struct ExperimentConfig {
    std::string run_id = "run";
    std::string method = "sgld";  // sgd | sgld | ggmc | vi
    std::vector<std::uint64_t> seeds = {1};
    std::string out_dir = "runs";
    DatasetConfig dataset;
    ModelConfig model;
    OrbitConfig orbit;
    LikelihoodSpec likelihood;
    PriorSpec prior;
    TemperingSpec tempering;
    std::vector<double> temperatures;    // sweep grid; empty = use tempering.T only
    std::vector<std::string> variants;   // sweep grid; empty = use likelihood.variant only
    CyclicalSchedule schedule;
    int steps_per_epoch = 0;  // 0 = one full-batch step (or N/batch_size steps) per epoch
    SgdConfig sgd;
    ViConfig vi;
    std::size_t batch_size = 0;  // sampler minibatch; 0 = full batch
    double friction = 1.0;
    int threads = 0;  // sweep workers; 0 = hardware concurrency
    bool save_samples = false;

    bool conjugate_toy() const { return dataset.generator == "gaussian_location"; }

    void validate() const {
        if (run_id.empty()) throw ConfigError("config: run_id must be nonempty");
        if (method != "sgd" && method != "sgld" && method != "ggmc" && method != "vi")
            throw ConfigError("config: unknown method '" + method + "'");
        if (seeds.empty()) throw ConfigError("config: at least one seed required");
        dataset.validate();
        likelihood.validate();
        prior.validate();
        tempering.validate();
        for (double t : temperatures)
            if (!(t > 0.0)) throw ConfigError("config: temperatures must be > 0");
        for (const std::string& v : variants) variant_from_string(v);
        if (!(friction > 0.0) || friction > 1.0) throw ConfigError("config: friction must be in (0,1]");
        if (threads < 0) throw ConfigError("config: threads must be >= 0");
        if (steps_per_epoch < 0) throw ConfigError("config: steps_per_epoch must be >= 0");
        sgd.validate();
        vi.validate();
        if (orbit.kind != "identity" && orbit.kind != "cyclic_group" && orbit.kind != "sign_flip" &&
            !orbit.stochastic_kind())
            throw ConfigError("config: unknown orbit kind '" + orbit.kind + "'");
        if (orbit.freeze_k < 0) throw ConfigError("config: orbit.freeze_k must be >= 0");
        if (orbit.stochastic_kind() && orbit.freeze_k == 0 &&
            likelihood.estimator == Estimator::exact_finite)
            throw ConfigError("config: exact_finite needs a finite orbit (set orbit.freeze_k or a group kind)");
    }
};

inline ExperimentConfig parse_config(const detail::json& j) {
    using detail::get_field;
    using detail::need_field;
    using detail::require_known_keys;

    require_known_keys(j, "config",
                       {"run_id", "method", "seeds", "out_dir", "dataset", "model", "orbit", "likelihood",
                        "prior", "tempering", "temperatures", "variants", "schedule", "sgd", "vi",
                        "batch_size", "friction", "threads", "save_samples"});

    ExperimentConfig cfg;
    cfg.run_id = get_field<std::string>(j, "config", "run_id", cfg.run_id);
    cfg.method = need_field<std::string>(j, "config", "method");
    cfg.seeds = get_field<std::vector<std::uint64_t>>(j, "config", "seeds", cfg.seeds);
    cfg.out_dir = get_field<std::string>(j, "config", "out_dir", cfg.out_dir);

    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        require_known_keys(d, "dataset",
                           {"generator", "train_path", "test_path", "format", "n_train", "n_test", "dim",
                            "classes", "label_noise", "feature_noise", "location"});
        cfg.dataset.generator = get_field<std::string>(d, "dataset", "generator", "");
        cfg.dataset.train_path = get_field<std::string>(d, "dataset", "train_path", "");
        cfg.dataset.test_path = get_field<std::string>(d, "dataset", "test_path", "");
        cfg.dataset.format = get_field<std::string>(d, "dataset", "format", cfg.dataset.format);
        cfg.dataset.n_train = get_field<int>(d, "dataset", "n_train", cfg.dataset.n_train);
        cfg.dataset.n_test = get_field<int>(d, "dataset", "n_test", cfg.dataset.n_test);
        cfg.dataset.dim = get_field<int>(d, "dataset", "dim", cfg.dataset.dim);
        cfg.dataset.classes = get_field<int>(d, "dataset", "classes", cfg.dataset.classes);
        cfg.dataset.label_noise = get_field<double>(d, "dataset", "label_noise", cfg.dataset.label_noise);
        cfg.dataset.feature_noise = get_field<double>(d, "dataset", "feature_noise", cfg.dataset.feature_noise);
        cfg.dataset.location = get_field<double>(d, "dataset", "location", cfg.dataset.location);
    } else {
        throw ConfigError("config: missing required key 'dataset'");
    }

    if (j.contains("model")) {
        const auto& m = j.at("model");
        require_known_keys(m, "model", {"hidden", "activation", "bias"});
        cfg.model.hidden = get_field<std::vector<int>>(m, "model", "hidden", cfg.model.hidden);
        cfg.model.activation = get_field<std::string>(m, "model", "activation", cfg.model.activation);
        cfg.model.bias = get_field<bool>(m, "model", "bias", cfg.model.bias);
    }

    if (j.contains("orbit")) {
        const auto& o = j.at("orbit");
        require_known_keys(o, "orbit", {"kind", "axis", "scale", "freeze_k"});
        cfg.orbit.kind = get_field<std::string>(o, "orbit", "kind", cfg.orbit.kind);
        cfg.orbit.axis = get_field<int>(o, "orbit", "axis", cfg.orbit.axis);
        cfg.orbit.scale = get_field<double>(o, "orbit", "scale", cfg.orbit.scale);
        cfg.orbit.freeze_k = get_field<int>(o, "orbit", "freeze_k", cfg.orbit.freeze_k);
    }

    if (j.contains("likelihood")) {
        const auto& l = j.at("likelihood");
        require_known_keys(l, "likelihood", {"variant", "estimator", "k_train", "k_test"});
        cfg.likelihood.variant =
            variant_from_string(get_field<std::string>(l, "likelihood", "variant", "noaug"));
        cfg.likelihood.estimator =
            estimator_from_string(get_field<std::string>(l, "likelihood", "estimator", "exact_finite"));
        cfg.likelihood.k_train = get_field<int>(l, "likelihood", "k_train", cfg.likelihood.k_train);
        cfg.likelihood.k_test = get_field<int>(l, "likelihood", "k_test", cfg.likelihood.k_test);
    }

    if (j.contains("prior")) {
        const auto& p = j.at("prior");
        require_known_keys(p, "prior", {"scaling", "variance"});
        cfg.prior.scaling =
            prior_scaling_from_string(get_field<std::string>(p, "prior", "scaling", "per_layer_fan_in"));
        cfg.prior.variance = get_field<double>(p, "prior", "variance", cfg.prior.variance);
    }

    if (j.contains("tempering")) {
        const auto& t = j.at("tempering");
        require_known_keys(t, "tempering", {"T", "mode", "S"});
        cfg.tempering.T = get_field<double>(t, "tempering", "T", cfg.tempering.T);
        cfg.tempering.mode =
            tempering_mode_from_string(get_field<std::string>(t, "tempering", "mode", "full"));
        cfg.tempering.S = get_field<double>(t, "tempering", "S", cfg.tempering.S);
    }

    cfg.temperatures = get_field<std::vector<double>>(j, "config", "temperatures", {});
    cfg.variants = get_field<std::vector<std::string>>(j, "config", "variants", {});

    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        require_known_keys(s, "schedule",
                           {"cycles", "epochs_per_cycle", "samples_per_cycle", "steps_per_epoch", "base_step"});
        cfg.schedule.cycles = get_field<int>(s, "schedule", "cycles", cfg.schedule.cycles);
        cfg.schedule.epochs_per_cycle =
            get_field<int>(s, "schedule", "epochs_per_cycle", cfg.schedule.epochs_per_cycle);
        cfg.schedule.samples_per_cycle =
            get_field<int>(s, "schedule", "samples_per_cycle", cfg.schedule.samples_per_cycle);
        cfg.steps_per_epoch = get_field<int>(s, "schedule", "steps_per_epoch", 0);
        cfg.schedule.base_step = get_field<double>(s, "schedule", "base_step", cfg.schedule.base_step);
    }

    if (j.contains("sgd")) {
        const auto& s = j.at("sgd");
        require_known_keys(s, "sgd", {"budget", "learning_rate", "momentum", "batch_size"});
        cfg.sgd.budget = get_field<int>(s, "sgd", "budget", cfg.sgd.budget);
        cfg.sgd.learning_rate = get_field<double>(s, "sgd", "learning_rate", cfg.sgd.learning_rate);
        cfg.sgd.momentum = get_field<double>(s, "sgd", "momentum", cfg.sgd.momentum);
        cfg.sgd.batch_size = get_field<std::size_t>(s, "sgd", "batch_size", cfg.sgd.batch_size);
    }

    if (j.contains("vi")) {
        const auto& v = j.at("vi");
        require_known_keys(v, "vi", {"iterations", "n_mc", "learning_rate", "init_log_std"});
        cfg.vi.iterations = get_field<int>(v, "vi", "iterations", cfg.vi.iterations);
        cfg.vi.n_mc = get_field<int>(v, "vi", "n_mc", cfg.vi.n_mc);
        cfg.vi.learning_rate = get_field<double>(v, "vi", "learning_rate", cfg.vi.learning_rate);
        cfg.vi.init_log_std = get_field<double>(v, "vi", "init_log_std", cfg.vi.init_log_std);
    }

    cfg.batch_size = get_field<std::size_t>(j, "config", "batch_size", cfg.batch_size);
    cfg.friction = get_field<double>(j, "config", "friction", cfg.friction);
    cfg.threads = get_field<int>(j, "config", "threads", cfg.threads);
    cfg.save_samples = get_field<bool>(j, "config", "save_samples", cfg.save_samples);

    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    detail::json j;
    try {
        j = detail::json::parse(in);
    } catch (const detail::json::exception& e) {
        throw ConfigError("config: parse failure in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Builders: config sections to live objects. Everything downstream of these
// is a pure function of (config, seed).

inline SyntheticData build_synthetic(const DatasetConfig& d, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.generator = d.generator;
    spec.n_train = d.n_train;
    spec.n_test = d.n_test;
    spec.dim = d.dim;
    spec.classes = d.classes;
    spec.label_noise = d.label_noise;
    spec.feature_noise = d.feature_noise;
    spec.location = d.location;
    spec.seed = seed;
    return generate_synthetic(spec);
}

inline SyntheticData build_dataset(const DatasetConfig& d, std::uint64_t seed) {
    if (!d.from_files()) return build_synthetic(d, seed);
    SyntheticData data;
    data.train = load_dataset(d.train_path, d.format, d.classes);
    data.test = load_dataset(d.test_path, d.format, d.classes);
    if (data.train.dim() != data.test.dim()) throw ConfigError("dataset: train/test dimension mismatch");
    return data;
}

inline MlpModel build_model(const ModelConfig& m, int input_dim, int classes) {
    MlpModel model;
    model.layer_widths.push_back(input_dim);
    for (int h : m.hidden) model.layer_widths.push_back(h);
    model.layer_widths.push_back(classes);
    model.activation = activation_from_string(m.activation);
    model.bias_enabled = m.bias;
    model.validate();
    return model;
}

// Freezing a stochastic family consumes draws from rng, so the caller must
// pass the per-run stream for reproducibility.
inline Orbit build_orbit(const OrbitConfig& o, int dim, RngStream& rng) {
    Orbit orbit;
    if (o.kind == "identity") {
        orbit = Orbit::identity();
    } else if (o.kind == "cyclic_group") {
        orbit = Orbit::cyclic_group(dim);
    } else if (o.kind == "sign_flip") {
        if (o.axis < 0 || o.axis >= dim) throw ConfigError("orbit: sign_flip axis out of range");
        orbit = Orbit::sign_flip_group(o.axis);
    } else {
        StochasticFamily fam;
        fam.dim = dim;
        fam.scale = o.scale;
        if (o.kind == "rotation_uniform") {
            fam.kind = StochasticFamily::Kind::rotation_uniform;
        } else if (o.kind == "jitter_gaussian") {
            fam.kind = StochasticFamily::Kind::jitter_gaussian;
        } else if (o.kind == "cyclic_shift_uniform") {
            fam.kind = StochasticFamily::Kind::cyclic_shift_uniform;
        } else {
            throw ConfigError("orbit: unknown kind '" + o.kind + "'");
        }
        orbit = Orbit::stochastic(fam);
        if (o.freeze_k > 0) {
            RngStream frng = rng.split("freeze-orbit");
            orbit = freeze_orbit(orbit, o.freeze_k, frng);
        }
    }
    return orbit;
}

}  // namespace auginf

#pragma once

#include <span>
#include <string>
#include <vector>

#include "auginf/errors.hpp"
#include "auginf/rng.hpp"
#include "auginf/tensor.hpp"
#include "auginf/transform.hpp"

namespace auginf {

// Parametric sampler over transforms, used by stochastic (full) orbits.
struct StochasticFamily {
    enum class Kind { rotation_uniform, jitter_gaussian, cyclic_shift_uniform };

    Kind kind = Kind::rotation_uniform;
    double scale = 1.0;  // jitter standard deviation; unused otherwise
    int dim = 0;         // input dimension, needed by jitter and shift draws

    Transform draw(RngStream& rng) const {
        switch (kind) {
            case Kind::rotation_uniform:
                return Transform::rotation(2.0 * 3.14159265358979323846 * rng.next_double());
            case Kind::jitter_gaussian: {
                if (dim <= 0) throw ContractError("jitter family: dim not set");
                std::vector<double> off(dim);
                for (double& v : off) v = scale * rng.next_gaussian();
                return Transform::jitter(std::move(off));
            }
            case Kind::cyclic_shift_uniform: {
                if (dim <= 0) throw ContractError("shift family: dim not set");
                return Transform::cyclic_shift_by(static_cast<int>(rng.next_below(dim)));
            }
        }
        throw ContractError("unreachable family kind");
    }
};

// The augmentation distribution P(x'|x). Finite mode is a uniform mixture of
// K Dirac points (K fixed transforms); stochastic mode samples a fresh
// transform per draw. `declared_group` gates group-only assertions: orbits do
// not have to form groups.
struct Orbit {
    enum class Mode { finite, stochastic };

    Mode mode = Mode::finite;
    std::vector<Transform> transforms;  // finite mode; uniform weights 1/K
    StochasticFamily family;            // stochastic mode
    bool declared_group = false;

    bool is_finite() const { return mode == Mode::finite; }

    int size() const {
        if (!is_finite()) throw ModeError("orbit: size() on stochastic orbit");
        return static_cast<int>(transforms.size());
    }

    static Orbit identity() {
        Orbit o;
        o.transforms = {Transform::identity()};
        o.declared_group = true;
        return o;
    }

    static Orbit finite(std::vector<Transform> ts, bool group = false) {
        if (ts.empty()) throw ContractError("finite orbit: needs K >= 1 transforms");
        Orbit o;
        o.transforms = std::move(ts);
        o.declared_group = group;
        return o;
    }

    // Full cyclic-shift group on dimension d.
    static Orbit cyclic_group(int d) {
        if (d < 1) throw ContractError("cyclic_group: dimension must be >= 1");
        std::vector<Transform> ts;
        ts.reserve(d);
        for (int s = 0; s < d; ++s) ts.push_back(Transform::cyclic_shift_by(s));
        return finite(std::move(ts), true);
    }

    // {identity, flip of one axis}: the order-2 group used by sign-flip data.
    static Orbit sign_flip_group(int axis) {
        return finite({Transform::identity(), Transform::sign_flip_axis(axis)}, true);
    }

    static Orbit stochastic(StochasticFamily f) {
        Orbit o;
        o.mode = Mode::stochastic;
        o.family = f;
        return o;
    }
};

// One draw from P(x'|x): finite mode picks a_k with k uniform on {1..K},
// stochastic mode applies a fresh transform.
inline std::vector<double> sample_augmentation(const Orbit& orbit, std::span<const double> x, RngStream& rng) {
    if (orbit.is_finite()) {
        std::size_t k = static_cast<std::size_t>(rng.next_below(orbit.transforms.size()));
        return orbit.transforms[k].apply(x);
    }
    return orbit.family.draw(rng).apply(x);
}

// [a_1(x), ..., a_K(x)] in declaration order. Finite orbits only.
inline std::vector<std::vector<double>> enumerate_orbit(const Orbit& orbit, std::span<const double> x) {
    if (!orbit.is_finite()) throw ModeError("enumerate_orbit: orbit is stochastic");
    std::vector<std::vector<double>> out;
    out.reserve(orbit.transforms.size());
    for (const Transform& t : orbit.transforms) out.push_back(t.apply(x));
    return out;
}

// Draw K transforms once from a stochastic orbit, producing the finite orbit
// of K fixed augmentations used for the rest of a run.
inline Orbit freeze_orbit(const Orbit& orbit, int k, RngStream& rng) {
    if (orbit.is_finite()) throw ModeError("freeze_orbit: orbit is already finite");
    if (k < 1) throw ContractError("freeze_orbit: K must be >= 1");
    std::vector<Transform> ts;
    ts.reserve(k);
    for (int i = 0; i < k; ++i) ts.push_back(orbit.family.draw(rng));
    return Orbit::finite(std::move(ts));
}

// Stack the enumerated orbit of one input as a K x D matrix.
inline Tensor orbit_rows_exact(const Orbit& orbit, std::span<const double> x) {
    auto vs = enumerate_orbit(orbit, x);
    Tensor rows = Tensor::zeros({vs.size(), x.size()});
    for (std::size_t i = 0; i < vs.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) rows(i, j) = vs[i][j];
    return rows;
}

// Stack K sampled augmentations of one input as a K x D matrix
// (with replacement for finite orbits).
inline Tensor orbit_rows_sampled(const Orbit& orbit, std::span<const double> x, int k, RngStream& rng) {
    if (k < 1) throw ContractError("orbit_rows_sampled: K must be >= 1");
    Tensor rows = Tensor::zeros({static_cast<std::size_t>(k), x.size()});
    for (int i = 0; i < k; ++i) {
        std::vector<double> v = sample_augmentation(orbit, x, rng);
        for (std::size_t j = 0; j < x.size(); ++j) rows(i, j) = v[j];
    }
    return rows;
}

}  // namespace auginf

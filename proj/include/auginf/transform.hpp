#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "auginf/errors.hpp"

namespace auginf {

// One fixed augmentation a_k: a deterministic map R^D -> R^D.
//   identity         leaves the input unchanged
//   cyclic_shift     left-rotates coordinates by `shift` positions
//   rotation_2d      rotates a planar point set (x0,y0,x1,y1,...) by `angle`
//   sign_flip        negates coordinate `axis`
//   additive_jitter  adds a fixed offset vector (materialized when drawn)
struct Transform {
    enum class Kind { identity, cyclic_shift, rotation_2d, sign_flip, additive_jitter };

    Kind kind = Kind::identity;
    int shift = 0;
    double angle = 0.0;
    int axis = 0;
    std::vector<double> offset;

    static Transform identity() { return {}; }

    static Transform cyclic_shift_by(int s) {
        Transform t;
        t.kind = Kind::cyclic_shift;
        t.shift = s;
        return t;
    }

    static Transform rotation(double angle_radians) {
        Transform t;
        t.kind = Kind::rotation_2d;
        t.angle = angle_radians;
        return t;
    }

    static Transform sign_flip_axis(int axis) {
        Transform t;
        t.kind = Kind::sign_flip;
        t.axis = axis;
        return t;
    }

    static Transform jitter(std::vector<double> offset) {
        Transform t;
        t.kind = Kind::additive_jitter;
        t.offset = std::move(offset);
        return t;
    }

    std::vector<double> apply(std::span<const double> x) const {
        std::size_t d = x.size();
        std::vector<double> y(d);
        switch (kind) {
            case Kind::identity:
                for (std::size_t j = 0; j < d; ++j) y[j] = x[j];
                break;
            case Kind::cyclic_shift: {
                if (d == 0) throw ContractError("cyclic_shift: empty input");
                std::size_t s = static_cast<std::size_t>(((shift % static_cast<long>(d)) + static_cast<long>(d)) %
                                                         static_cast<long>(d));
                for (std::size_t j = 0; j < d; ++j) y[j] = x[(j + s) % d];
                break;
            }
            case Kind::rotation_2d: {
                // Input is a planar point set: pairs (x, y).
                if (d % 2 != 0) throw ContractError("rotation_2d: input dimension must be even (planar point set)");
                double c = std::cos(angle), s = std::sin(angle);
                for (std::size_t p = 0; p < d / 2; ++p) {
                    double px = x[2 * p], py = x[2 * p + 1];
                    y[2 * p] = c * px - s * py;
                    y[2 * p + 1] = s * px + c * py;
                }
                break;
            }
            case Kind::sign_flip: {
                if (axis < 0 || static_cast<std::size_t>(axis) >= d)
                    throw ContractError("sign_flip: axis " + std::to_string(axis) + " out of range");
                for (std::size_t j = 0; j < d; ++j) y[j] = x[j];
                y[axis] = -y[axis];
                break;
            }
            case Kind::additive_jitter: {
                if (offset.size() != d)
                    throw ContractError("additive_jitter: offset dimension " + std::to_string(offset.size()) +
                                        " incompatible with input dimension " + std::to_string(d));
                for (std::size_t j = 0; j < d; ++j) y[j] = x[j] + offset[j];
                break;
            }
        }
        return y;
    }
};

}  // namespace auginf

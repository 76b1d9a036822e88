#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "auginf/errors.hpp"

namespace auginf {

// Dense row-major tensor of 64-bit floats. Mostly used rank-2 (batches of
// input rows, batches of logit rows); rank-1 for flat vectors.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
        : shape(std::move(shape_)), data(std::move(data_)) {
        if (numel_of(shape) != data.size())
            throw ContractError("tensor: shape/product mismatch: product(shape)=" +
                                std::to_string(numel_of(shape)) + " data=" + std::to_string(data.size()));
    }

    static Tensor zeros(std::vector<std::size_t> shape_) {
        std::size_t n = numel_of(shape_);
        return Tensor(std::move(shape_), std::vector<double>(n, 0.0));
    }

    static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> values) {
        return Tensor({r, c}, std::move(values));
    }

    static Tensor row_matrix(std::span<const double> row) {
        return Tensor({1, row.size()}, std::vector<double>(row.begin(), row.end()));
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    std::size_t rows() const {
        require_rank2();
        return shape[0];
    }
    std::size_t cols() const {
        require_rank2();
        return shape[1];
    }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols(), cols()}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols(), cols()}; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static std::size_t numel_of(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                               [](std::size_t a, std::size_t b) { return a * b; });
    }

private:
    void require_rank2() const {
        if (shape.size() != 2) throw ContractError("tensor: rank-2 access on rank-" + std::to_string(shape.size()));
    }
};

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace auginf

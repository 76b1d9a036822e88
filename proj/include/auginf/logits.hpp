#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "auginf/errors.hpp"

namespace auginf {

// Max-shifted logsumexp. The shift keeps exp() in range at extreme logits;
// summation order is fixed (left to right) so results are reproducible.
inline double logsumexp(std::span<const double> v) {
    if (v.empty()) throw ContractError("logsumexp: empty input");
    double m = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

// log softmax_y(logits) = logits[label] - logsumexp(logits). Result <= 0.
inline double log_softmax(std::span<const double> logits, int label) {
    if (logits.size() < 2) throw ContractError("log_softmax: needs at least 2 classes");
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
        throw ContractError("log_softmax: label " + std::to_string(label) + " out of range [0," +
                            std::to_string(logits.size()) + ")");
    for (double x : logits)
        if (!std::isfinite(x)) throw NumericError("log_softmax: non-finite logit");
    return logits[label] - logsumexp(logits);
}

inline std::vector<double> softmax(std::span<const double> logits) {
    double lse = logsumexp(logits);
    std::vector<double> p(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j) p[j] = std::exp(logits[j] - lse);
    return p;
}

inline std::vector<double> log_softmax_all(std::span<const double> logits) {
    double lse = logsumexp(logits);
    std::vector<double> lp(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j) lp[j] = logits[j] - lse;
    return lp;
}

}  // namespace auginf

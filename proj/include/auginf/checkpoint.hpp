#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "auginf/errors.hpp"
#include "auginf/model.hpp"
#include "auginf/target.hpp"

namespace auginf {

// One weight snapshot: a text header carrying everything needed to identify
// and resume the run, then the flat parameter vector as little-endian 64-bit
// floats. Momentum is not persisted; a resumed chain refreshes it from the
// stationary Normal(0, T I), which the partial-refresh update forgives.
struct CheckpointData {
    std::vector<int> layer_widths;  // a single entry for plain-vector targets
    std::string activation = "relu";
    bool bias_enabled = true;
    std::uint64_t rng_sid_lo = 0;
    std::uint64_t rng_sid_hi = 0;
    std::uint64_t rng_words = 0;
    int cycle = 0;
    int epoch_in_cycle = 0;
    long step_index = 0;
    double step_size = 1e-3;
    double friction = 1.0;
    TemperingSpec tempering;
    ParamVector params;
};

namespace detail {

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_g17(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IngestError("checkpoint: cannot parse " + what + " '" + s + "'");
    }
}

inline void write_le_double(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(b, 8);
}

inline double read_le_double(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw IngestError("checkpoint: truncated parameter block");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t{b[i]} << (8 * i);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const CheckpointData& ck) {
    if (ck.layer_widths.empty()) throw ContractError("checkpoint: empty width list");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot open '" + path + "' for writing");
    out << "auginf-checkpoint 1\n";
    out << "widths";
    for (int wdt : ck.layer_widths) out << ' ' << wdt;
    out << "\n";
    out << "activation " << ck.activation << "\n";
    out << "bias " << (ck.bias_enabled ? 1 : 0) << "\n";
    char hexbuf[64];
    std::snprintf(hexbuf, sizeof hexbuf, "%016llx %016llx %llu",
                  static_cast<unsigned long long>(ck.rng_sid_lo),
                  static_cast<unsigned long long>(ck.rng_sid_hi),
                  static_cast<unsigned long long>(ck.rng_words));
    out << "rng " << hexbuf << "\n";
    out << "phase " << ck.cycle << ' ' << ck.epoch_in_cycle << ' ' << ck.step_index << "\n";
    out << "tempering " << detail::format_g17(ck.tempering.T) << ' ' << to_string(ck.tempering.mode) << ' '
        << detail::format_g17(ck.tempering.S) << "\n";
    out << "step_size " << detail::format_g17(ck.step_size) << "\n";
    out << "friction " << detail::format_g17(ck.friction) << "\n";
    out << "params " << ck.params.size() << "\n";
    for (std::size_t j = 0; j < ck.params.size(); ++j) detail::write_le_double(out, ck.params[j]);
    if (!out) throw IngestError("write failed for '" + path + "'");
}

inline CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open '" + path + "'");
    CheckpointData ck;
    std::string line;

    auto next_line = [&](const std::string& key) {
        if (!std::getline(in, line)) throw IngestError("checkpoint: missing '" + key + "' line in " + path);
        std::istringstream ls(line);
        std::string got;
        ls >> got;
        if (got != key) throw IngestError("checkpoint: expected '" + key + "', got '" + got + "'");
        return ls;
    };

    {
        std::istringstream ls = next_line("auginf-checkpoint");
        int version = 0;
        ls >> version;
        if (version != 1) throw IngestError("checkpoint: unsupported version");
    }
    {
        std::istringstream ls = next_line("widths");
        int wdt;
        while (ls >> wdt) ck.layer_widths.push_back(wdt);
        if (ck.layer_widths.empty()) throw IngestError("checkpoint: empty width list");
    }
    {
        std::istringstream ls = next_line("activation");
        if (!(ls >> ck.activation)) throw IngestError("checkpoint: bad activation line");
    }
    {
        std::istringstream ls = next_line("bias");
        int b;
        if (!(ls >> b) || (b != 0 && b != 1)) throw IngestError("checkpoint: bad bias line");
        ck.bias_enabled = b == 1;
    }
    {
        std::istringstream ls = next_line("rng");
        std::string lo, hi;
        unsigned long long words;
        if (!(ls >> lo >> hi >> words)) throw IngestError("checkpoint: bad rng line");
        ck.rng_sid_lo = std::stoull(lo, nullptr, 16);
        ck.rng_sid_hi = std::stoull(hi, nullptr, 16);
        ck.rng_words = words;
    }
    {
        std::istringstream ls = next_line("phase");
        if (!(ls >> ck.cycle >> ck.epoch_in_cycle >> ck.step_index)) throw IngestError("checkpoint: bad phase line");
    }
    {
        std::istringstream ls = next_line("tempering");
        std::string t, mode, s;
        if (!(ls >> t >> mode >> s)) throw IngestError("checkpoint: bad tempering line");
        ck.tempering.T = detail::parse_g17(t, "temperature");
        ck.tempering.mode = tempering_mode_from_string(mode);
        ck.tempering.S = detail::parse_g17(s, "curation exponent");
    }
    {
        std::istringstream ls = next_line("step_size");
        std::string v;
        if (!(ls >> v)) throw IngestError("checkpoint: bad step_size line");
        ck.step_size = detail::parse_g17(v, "step_size");
    }
    {
        std::istringstream ls = next_line("friction");
        std::string v;
        if (!(ls >> v)) throw IngestError("checkpoint: bad friction line");
        ck.friction = detail::parse_g17(v, "friction");
    }
    std::size_t count = 0;
    {
        std::istringstream ls = next_line("params");
        if (!(ls >> count)) throw IngestError("checkpoint: bad params line");
    }
    ck.params = ParamVector(count);
    for (std::size_t j = 0; j < count; ++j) ck.params[j] = detail::read_le_double(in);
    return ck;
}

// Checkpoint carrying MLP metadata for a given model.
inline CheckpointData make_checkpoint(const MlpModel& model, const ParamVector& w) {
    check_params(model, w);
    CheckpointData ck;
    ck.layer_widths = model.layer_widths;
    ck.activation = to_string(model.activation);
    ck.bias_enabled = model.bias_enabled;
    ck.params = w;
    return ck;
}

inline MlpModel model_from_checkpoint(const CheckpointData& ck) {
    if (ck.layer_widths.size() < 2)
        throw ConfigError("checkpoint: width list does not describe a network model");
    MlpModel model;
    model.layer_widths = ck.layer_widths;
    model.activation = activation_from_string(ck.activation);
    model.bias_enabled = ck.bias_enabled;
    model.validate();
    if (ck.params.size() != model.param_count())
        throw ConfigError("checkpoint: parameter count does not match the declared model");
    return model;
}

}  // namespace auginf

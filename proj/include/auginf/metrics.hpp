#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "auginf/dataset.hpp"
#include "auginf/errors.hpp"

namespace auginf {

// One evaluation point of one run. Serialized column order is fixed and is
// the file format; forward_passes makes the fixed-compute claims auditable
// from the CSV alone.
struct MetricsRecord {
    std::string run_id;
    std::string method;      // sgd | sgld | ggmc | vi
    std::string variant;     // likelihood variant name
    std::string orbit_mode;  // finite | stochastic | none
    int k_train = 1;
    int k_test = 1;
    double temperature = 1.0;
    int epoch = 0;
    double test_error = 0.0;
    double test_nll = 0.0;
    double train_objective = 0.0;
    double kinetic_temperature = 0.0;
    long long forward_passes = 0;
    double wall_clock_seconds = 0.0;

    bool operator==(const MetricsRecord&) const = default;
};

inline const char* metrics_header() {
    return "run_id,method,variant,orbit_mode,k_train,k_test,temperature,epoch,test_error,test_nll,"
           "train_objective,kinetic_temperature,forward_passes,wall_clock_seconds";
}

namespace detail {

inline void check_metrics_string(const std::string& s, const char* what) {
    if (s.empty()) throw ContractError(std::string("metrics: empty ") + what);
    for (char c : s)
        if (c == ',' || c == '\n' || c == '\r' || c == '"')
            throw ContractError(std::string("metrics: ") + what + " contains a CSV delimiter");
}

inline void check_metrics_float(double v, const char* what) {
    if (std::isnan(v)) throw NumericError(std::string("metrics: ") + what + " is NaN");
    if (!std::isfinite(v)) throw NumericError(std::string("metrics: ") + what + " is not finite");
}

}  // namespace detail

inline void validate_metrics(const MetricsRecord& r) {
    detail::check_metrics_string(r.run_id, "run_id");
    detail::check_metrics_string(r.method, "method");
    detail::check_metrics_string(r.variant, "variant");
    detail::check_metrics_string(r.orbit_mode, "orbit_mode");
    if (r.k_train < 1) throw ContractError("metrics: k_train must be >= 1");
    if (r.k_test < 0) throw ContractError("metrics: k_test must be >= 0");
    detail::check_metrics_float(r.temperature, "temperature");
    if (!(r.temperature > 0.0)) throw ContractError("metrics: temperature must be > 0");
    if (r.epoch < 0) throw ContractError("metrics: epoch must be >= 0");
    detail::check_metrics_float(r.test_error, "test_error");
    if (r.test_error < 0.0 || r.test_error > 1.0) throw ContractError("metrics: test_error outside [0,1]");
    detail::check_metrics_float(r.test_nll, "test_nll");
    if (r.test_nll < 0.0) throw ContractError("metrics: test_nll must be >= 0");
    detail::check_metrics_float(r.train_objective, "train_objective");
    detail::check_metrics_float(r.kinetic_temperature, "kinetic_temperature");
    if (r.kinetic_temperature < 0.0) throw ContractError("metrics: kinetic_temperature must be >= 0");
    if (r.forward_passes < 0) throw ContractError("metrics: forward_passes must be >= 0");
    detail::check_metrics_float(r.wall_clock_seconds, "wall_clock_seconds");
    if (r.wall_clock_seconds < 0.0) throw ContractError("metrics: wall_clock_seconds must be >= 0");
}

namespace detail {

inline std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline std::string format_metrics_row(const MetricsRecord& r) {
    validate_metrics(r);
    std::string row;
    row += r.run_id;
    row += ',';
    row += r.method;
    row += ',';
    row += r.variant;
    row += ',';
    row += r.orbit_mode;
    row += ',';
    row += std::to_string(r.k_train);
    row += ',';
    row += std::to_string(r.k_test);
    row += ',';
    row += detail::g17(r.temperature);
    row += ',';
    row += std::to_string(r.epoch);
    row += ',';
    row += detail::g17(r.test_error);
    row += ',';
    row += detail::g17(r.test_nll);
    row += ',';
    row += detail::g17(r.train_objective);
    row += ',';
    row += detail::g17(r.kinetic_temperature);
    row += ',';
    row += std::to_string(r.forward_passes);
    row += ',';
    row += detail::g17(r.wall_clock_seconds);
    return row;
}

inline void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
    for (const MetricsRecord& r : records) validate_metrics(r);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot open '" + path + "' for writing");
    out << metrics_header() << "\n";
    for (const MetricsRecord& r : records) out << format_metrics_row(r) << "\n";
    if (!out) throw IngestError("write failed for '" + path + "'");
}

inline std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IngestError("empty metrics file '" + path + "'", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != metrics_header()) throw IngestError("unexpected metrics header", 1);

    std::vector<MetricsRecord> records;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 14)
            throw IngestError("expected 14 fields, got " + std::to_string(fields.size()), line_no);
        MetricsRecord r;
        r.run_id = fields[0];
        r.method = fields[1];
        r.variant = fields[2];
        r.orbit_mode = fields[3];
        r.k_train = static_cast<int>(detail::parse_int_field(fields[4], line_no));
        r.k_test = static_cast<int>(detail::parse_int_field(fields[5], line_no));
        r.temperature = detail::parse_double_field(fields[6], line_no);
        r.epoch = static_cast<int>(detail::parse_int_field(fields[7], line_no));
        r.test_error = detail::parse_double_field(fields[8], line_no);
        r.test_nll = detail::parse_double_field(fields[9], line_no);
        r.train_objective = detail::parse_double_field(fields[10], line_no);
        r.kinetic_temperature = detail::parse_double_field(fields[11], line_no);
        r.forward_passes = detail::parse_int_field(fields[12], line_no);
        r.wall_clock_seconds = detail::parse_double_field(fields[13], line_no);
        try {
            validate_metrics(r);
        } catch (const Error& e) {
            throw IngestError(std::string("invalid metrics row: ") + e.what(), line_no);
        }
        records.push_back(std::move(r));
    }
    return records;
}

// Incremental writer used by long sweeps; the header goes out immediately so
// partial files are still parseable.
class MetricsWriter {
  public:
    explicit MetricsWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw IngestError("cannot open '" + path + "' for writing");
        out_ << metrics_header() << "\n";
        out_.flush();
    }

    void append(const MetricsRecord& r) {
        out_ << format_metrics_row(r) << "\n";
        out_.flush();
        if (!out_) throw IngestError("metrics write failed");
    }

  private:
    std::ofstream out_;
};

}  // namespace auginf

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "auginf/errors.hpp"
#include "auginf/rng.hpp"
#include "auginf/tensor.hpp"

namespace auginf {

struct DatasetMeta {
    std::string generator;
    std::uint64_t seed = 0;
    std::string invariance_group;  // empty when none declared
};

struct Dataset {
    Tensor inputs;            // N x D
    std::vector<int> labels;  // length N, values in [0, classes)
    int classes = 0;
    DatasetMeta meta;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return inputs.cols(); }

    void validate() const {
        if (labels.empty()) throw ContractError("dataset: N must be >= 1");
        if (inputs.rank() != 2 || inputs.rows() != labels.size())
            throw ContractError("dataset: inputs/labels size mismatch");
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] < 0 || labels[i] >= classes)
                throw ContractError("dataset: label out of range at example " + std::to_string(i));
    }
};

struct SyntheticSpec {
    std::string generator;  // shift_digits | rotated_blobs | gaussian_location
    int n_train = 128;
    int n_test = 64;
    int dim = 8;        // ring length (shift_digits) or 2 * #points (rotated_blobs)
    int classes = 3;
    double label_noise = 0.0;
    double feature_noise = 0.25;
    double location = 1.0;  // gaussian_location only: true mean
    std::uint64_t seed = 0;
};

struct SyntheticData {
    Dataset train;
    Dataset test;
};

namespace detail {

// Class-defining ring patterns: class c is a triangular ramp of width c+1.
// Distinct widths keep the cyclic-shift orbits of different classes disjoint.
inline std::vector<double> shift_digit_pattern(int c, int dim) {
    std::vector<double> p(dim, 0.0);
    for (int j = 0; j <= c; ++j) p[j] = 2.0 * (1.0 - static_cast<double>(j) / (c + 1));
    return p;
}

inline double ring_distance_sq(std::span<const double> x, const std::vector<double>& p, int s) {
    int d = static_cast<int>(x.size());
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
        double diff = x[(j + s) % d] - p[j];
        acc += diff * diff;
    }
    return acc;
}

inline double blob_radius(int c) { return 1.0 + 0.75 * c; }

}  // namespace detail

// True labeling function of shift_digits: nearest class pattern over all
// cyclic shifts. Exactly invariant to cyclic shifts of the input.
inline int true_label_shift_digits(std::span<const double> x, int classes) {
    int d = static_cast<int>(x.size());
    int best_c = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < classes; ++c) {
        std::vector<double> p = detail::shift_digit_pattern(c, d);
        for (int s = 0; s < d; ++s) {
            double dist = detail::ring_distance_sq(x, p, s);
            if (dist < best) {
                best = dist;
                best_c = c;
            }
        }
    }
    return best_c;
}

// True labeling function of rotated_blobs: nearest class radius to the mean
// point radius. Invariant to global 2-D rotation.
inline int true_label_rotated_blobs(std::span<const double> x, int classes) {
    if (x.size() % 2 != 0) throw ContractError("rotated_blobs: dimension must be even");
    double mean_r = 0.0;
    std::size_t pts = x.size() / 2;
    for (std::size_t p = 0; p < pts; ++p)
        mean_r += std::sqrt(x[2 * p] * x[2 * p] + x[2 * p + 1] * x[2 * p + 1]);
    mean_r /= static_cast<double>(pts);
    int best_c = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < classes; ++c) {
        double diff = std::abs(mean_r - detail::blob_radius(c));
        if (diff < best) {
            best = diff;
            best_c = c;
        }
    }
    return best_c;
}

namespace detail {

inline Dataset generate_split(const SyntheticSpec& spec, int n, RngStream rng) {
    Dataset ds;
    ds.classes = spec.classes;
    ds.meta.seed = spec.seed;
    ds.meta.generator = spec.generator;

    if (spec.generator == "shift_digits") {
        if (spec.classes + 1 > spec.dim)
            throw ConfigError("shift_digits: needs dim >= classes + 1 to keep class orbits disjoint");
        ds.meta.invariance_group = "cyclic_shift";
        ds.inputs = Tensor::zeros({static_cast<std::size_t>(n), static_cast<std::size_t>(spec.dim)});
        ds.labels.resize(n);
        for (int i = 0; i < n; ++i) {
            int c = static_cast<int>(rng.next_below(spec.classes));
            int s = static_cast<int>(rng.next_below(spec.dim));
            std::vector<double> p = shift_digit_pattern(c, spec.dim);
            for (int j = 0; j < spec.dim; ++j)
                ds.inputs(i, j) = p[((j + s) % spec.dim)] + spec.feature_noise * rng.next_gaussian();
            ds.labels[i] = c;
        }
    } else if (spec.generator == "rotated_blobs") {
        if (spec.dim % 2 != 0) throw ConfigError("rotated_blobs: dim must be even (2 * #points)");
        ds.meta.invariance_group = "rotation_2d";
        ds.inputs = Tensor::zeros({static_cast<std::size_t>(n), static_cast<std::size_t>(spec.dim)});
        ds.labels.resize(n);
        int pts = spec.dim / 2;
        for (int i = 0; i < n; ++i) {
            int c = static_cast<int>(rng.next_below(spec.classes));
            for (int p = 0; p < pts; ++p) {
                double theta = 2.0 * 3.14159265358979323846 * rng.next_double();
                double r = blob_radius(c) * (1.0 + 0.02 * spec.feature_noise * rng.next_gaussian());
                ds.inputs(i, 2 * p) = r * std::cos(theta);
                ds.inputs(i, 2 * p + 1) = r * std::sin(theta);
            }
            ds.labels[i] = c;
        }
    } else if (spec.generator == "gaussian_location") {
        // Scalar observations y_i ~ N(location, 1): the conjugate sampler toy.
        // Labels are unused and set to 0; classes is forced to 2 so the
        // dataset still validates.
        ds.classes = 2;
        ds.meta.invariance_group = "";
        ds.inputs = Tensor::zeros({static_cast<std::size_t>(n), 1});
        ds.labels.assign(n, 0);
        for (int i = 0; i < n; ++i) ds.inputs(i, 0) = spec.location + rng.next_gaussian();
    } else {
        throw ConfigError("unknown generator '" + spec.generator + "'");
    }

    // Label noise: flip to a uniformly chosen other class.
    if (spec.label_noise > 0.0 && spec.generator != "gaussian_location") {
        for (int i = 0; i < n; ++i) {
            if (rng.next_double() < spec.label_noise) {
                int other = static_cast<int>(rng.next_below(spec.classes - 1));
                if (other >= ds.labels[i]) ++other;
                ds.labels[i] = other;
            }
        }
    }
    ds.validate();
    return ds;
}

}  // namespace detail

// Deterministic given (spec, seed); train and test come from disjoint streams.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_train < 1 || spec.n_test < 1) throw ConfigError("generate_synthetic: split sizes must be >= 1");
    RngStream root(spec.seed);
    SyntheticData data;
    data.train = detail::generate_split(spec, spec.n_train, root.split("train"));
    data.test = detail::generate_split(spec, spec.n_test, root.split("test"));
    return data;
}

// ---------------------------------------------------------------------------
// CSV: header `label,f0,f1,...`, one example per row.

inline void write_dataset_csv(const std::string& path, const Dataset& ds) {
    ds.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot open '" + path + "' for writing");
    out << "label";
    for (std::size_t j = 0; j < ds.dim(); ++j) out << ",f" << j;
    out << "\n";
    char buf[64];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << ds.labels[i];
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            int len = std::snprintf(buf, sizeof buf, "%.17g", ds.inputs(i, j));
            out << ',';
            out.write(buf, len);
        }
        out << "\n";
    }
    if (!out) throw IngestError("write failed for '" + path + "'");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

inline double parse_double_field(const std::string& s, long line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IngestError("cannot parse float '" + s + "'", line_no);
    return v;
}

inline long parse_int_field(const std::string& s, long line_no) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IngestError("cannot parse integer '" + s + "'", line_no);
    return v;
}

}  // namespace detail

// expected_classes, when given, fixes the class count and rejects labels
// outside [0, expected_classes); otherwise classes = max label + 1.
inline Dataset load_dataset_csv(const std::string& path, std::optional<int> expected_classes = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IngestError("empty file '" + path + "'", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "label")
        throw IngestError("expected header starting with 'label'", 1);
    std::size_t dim = header.size() - 1;
    for (std::size_t j = 0; j < dim; ++j)
        if (header[j + 1] != "f" + std::to_string(j))
            throw IngestError("expected header column 'f" + std::to_string(j) + "', got '" + header[j + 1] + "'", 1);
    if (dim == 0) throw IngestError("no feature columns", 1);

    std::vector<double> values;
    std::vector<int> labels;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != dim + 1)
            throw IngestError("expected " + std::to_string(dim + 1) + " fields, got " +
                                  std::to_string(fields.size()),
                              line_no);
        long label = detail::parse_int_field(fields[0], line_no);
        if (label < 0) throw IngestError("negative label " + std::to_string(label), line_no);
        if (expected_classes && label >= *expected_classes)
            throw IngestError("label " + std::to_string(label) + " out of range [0," +
                                  std::to_string(*expected_classes) + ")",
                              line_no);
        labels.push_back(static_cast<int>(label));
        for (std::size_t j = 0; j < dim; ++j) values.push_back(detail::parse_double_field(fields[j + 1], line_no));
    }
    if (labels.empty()) throw IngestError("no data rows in '" + path + "'", line_no);

    Dataset ds;
    ds.inputs = Tensor({labels.size(), dim}, std::move(values));
    ds.classes = expected_classes ? *expected_classes : (*std::max_element(labels.begin(), labels.end()) + 1);
    if (ds.classes < 2) ds.classes = 2;
    ds.labels = std::move(labels);
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// IDX (MNIST-style): big-endian magic + dims, unsigned-byte payload scaled to
// [0,1]. Image/label files pair by path convention <name>-images / <name>-labels.

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw IngestError("truncated IDX header reading " + what);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

inline void write_be_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::string idx_labels_path(const std::string& images_path) {
    std::size_t pos = images_path.rfind("-images");
    if (pos == std::string::npos)
        throw IngestError("IDX path '" + images_path + "' does not contain '-images' (pairing convention)");
    std::string p = images_path;
    p.replace(pos, 7, "-labels");
    return p;
}

}  // namespace detail

inline Dataset load_dataset_idx(const std::string& images_path, std::optional<int> expected_classes = {}) {
    std::string labels_path = detail::idx_labels_path(images_path);
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IngestError("cannot open '" + images_path + "'");
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IngestError("cannot open paired label file '" + labels_path + "'");

    std::uint32_t magic = detail::read_be_u32(img, "image magic");
    if (magic != 0x00000803u)
        throw IngestError("bad image magic 0x" + std::to_string(magic) + " in '" + images_path + "'");
    std::uint32_t n = detail::read_be_u32(img, "image count");
    std::uint32_t rows = detail::read_be_u32(img, "rows");
    std::uint32_t cols = detail::read_be_u32(img, "cols");

    std::uint32_t lmagic = detail::read_be_u32(lab, "label magic");
    if (lmagic != 0x00000801u) throw IngestError("bad label magic in '" + labels_path + "'");
    std::uint32_t ln = detail::read_be_u32(lab, "label count");
    if (ln != n) throw IngestError("image/label count mismatch: " + std::to_string(n) + " vs " + std::to_string(ln));
    if (n == 0) throw IngestError("IDX file has zero examples");

    std::size_t dim = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> pixel(dim);
    Dataset ds;
    ds.inputs = Tensor::zeros({n, dim});
    ds.labels.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        if (!img.read(reinterpret_cast<char*>(pixel.data()), static_cast<std::streamsize>(dim)))
            throw IngestError("truncated image payload", static_cast<long>(i + 1));
        for (std::size_t j = 0; j < dim; ++j) ds.inputs(i, j) = pixel[j] / 255.0;
        char lc;
        if (!lab.read(&lc, 1)) throw IngestError("truncated label payload", static_cast<long>(i + 1));
        int label = static_cast<unsigned char>(lc);
        if (expected_classes && label >= *expected_classes)
            throw IngestError("label " + std::to_string(label) + " out of range", static_cast<long>(i + 1));
        ds.labels[i] = label;
    }
    ds.classes = expected_classes ? *expected_classes
                                  : (*std::max_element(ds.labels.begin(), ds.labels.end()) + 1);
    if (ds.classes < 2) ds.classes = 2;
    ds.validate();
    return ds;
}

// Byte-quantized writer for the IDX pair; used to exercise ingestion.
// Inputs must already lie in [0,1]; values are rounded to the nearest /255 step.
inline void write_dataset_idx(const std::string& images_path, const Dataset& ds) {
    ds.validate();
    std::string labels_path = detail::idx_labels_path(images_path);
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IngestError("cannot open '" + images_path + "' for writing");
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw IngestError("cannot open '" + labels_path + "' for writing");

    detail::write_be_u32(img, 0x00000803u);
    detail::write_be_u32(img, static_cast<std::uint32_t>(ds.size()));
    detail::write_be_u32(img, 1u);
    detail::write_be_u32(img, static_cast<std::uint32_t>(ds.dim()));
    detail::write_be_u32(lab, 0x00000801u);
    detail::write_be_u32(lab, static_cast<std::uint32_t>(ds.size()));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            double v = ds.inputs(i, j);
            if (v < 0.0 || v > 1.0) throw ContractError("write_dataset_idx: values must lie in [0,1]");
            unsigned char byte = static_cast<unsigned char>(std::lround(v * 255.0));
            img.write(reinterpret_cast<const char*>(&byte), 1);
        }
        unsigned char lbl = static_cast<unsigned char>(ds.labels[i]);
        lab.write(reinterpret_cast<const char*>(&lbl), 1);
    }
}

inline Dataset load_dataset(const std::string& path, const std::string& format,
                            std::optional<int> expected_classes = {}) {
    if (format == "csv") return load_dataset_csv(path, expected_classes);
    if (format == "idx") return load_dataset_idx(path, expected_classes);
    throw ConfigError("unknown dataset format '" + format + "' (expected csv or idx)");
}

}  // namespace auginf

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "kafal/errors.hpp"
#include "kafal/matrix.hpp"
#include "kafal/partition.hpp"
#include "kafal/rng.hpp"

namespace kafal {

// In-memory dataset with a held-out test split. Train row i has id i.
struct Dataset {
    Matrix train_x;
    std::vector<int> train_y;
    Matrix test_x;
    std::vector<int> test_y;
    int num_classes = 0;

    DatasetIndex train_index() const {
        DatasetIndex idx;
        idx.num_classes = num_classes;
        idx.sample_ids.resize(train_y.size());
        for (std::size_t i = 0; i < train_y.size(); ++i)
            idx.sample_ids[i] = static_cast<std::int64_t>(i);
        idx.labels = train_y;
        return idx;
    }
};

struct BlobParams {
    int classes = 10;
    int dim = 32;
    int per_class = 600;
    double spread = 1.5;
    std::uint64_t center_seed = 7;
};

// Gaussian clusters with seeded centers and a stratified 80/20 split.
inline Dataset make_blobs(const BlobParams& p, std::uint64_t seed) {
    if (p.classes < 2) throw config_error("make_blobs: need at least two classes");
    if (p.dim < 1 || p.per_class < 2) throw config_error("make_blobs: bad dimensions");
    if (p.spread <= 0.0) throw config_error("make_blobs: spread must be positive");

    auto center_eng = make_engine(p.center_seed, {stream::dataset});
    std::normal_distribution<double> unit(0.0, 1.0);
    Matrix centers(p.classes, p.dim);
    for (double& v : centers.data) v = unit(center_eng);

    auto eng = make_engine(seed, {stream::dataset});
    const int train_per_class = static_cast<int>(std::llround(0.8 * p.per_class));
    const int test_per_class = p.per_class - train_per_class;

    Dataset d;
    d.num_classes = p.classes;
    d.train_x = Matrix(static_cast<std::size_t>(p.classes) * train_per_class, p.dim);
    d.test_x = Matrix(static_cast<std::size_t>(p.classes) * test_per_class, p.dim);
    d.train_y.reserve(d.train_x.rows);
    d.test_y.reserve(d.test_x.rows);

    std::size_t train_row = 0, test_row = 0;
    for (int c = 0; c < p.classes; ++c) {
        for (int s = 0; s < p.per_class; ++s) {
            const bool is_train = s < train_per_class;
            auto dst = is_train ? d.train_x.row(train_row) : d.test_x.row(test_row);
            for (int k = 0; k < p.dim; ++k) dst[k] = centers(c, k) + p.spread * unit(eng);
            if (is_train) {
                d.train_y.push_back(c);
                ++train_row;
            } else {
                d.test_y.push_back(c);
                ++test_row;
            }
        }
    }
    return d;
}

namespace idx {

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                               const std::string& file) {
    if (offset + 4 > bytes.size())
        throw data_error(file + ": truncated at offset " + std::to_string(offset));
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace idx

// Big-endian IDX image file: magic 0x00000803, then count/rows/cols and
// count*rows*cols unsigned bytes. Pixels come back scaled to [0,1].
inline Matrix load_idx_images(const std::filesystem::path& path) {
    const auto bytes = idx::read_file(path);
    const std::string name = path.filename().string();
    if (idx::read_be32(bytes, 0, name) != 0x00000803u)
        throw data_error(name + ": bad image magic at offset 0");
    const std::uint32_t count = idx::read_be32(bytes, 4, name);
    const std::uint32_t rows = idx::read_be32(bytes, 8, name);
    const std::uint32_t cols = idx::read_be32(bytes, 12, name);
    const std::size_t expect = 16 + static_cast<std::size_t>(count) * rows * cols;
    if (bytes.size() < expect)
        throw data_error(name + ": truncated at offset " + std::to_string(bytes.size()));
    Matrix m(count, static_cast<std::size_t>(rows) * cols);
    for (std::size_t i = 0; i < m.data.size(); ++i)
        m.data[i] = static_cast<double>(bytes[16 + i]) / 255.0;
    return m;
}

// Big-endian IDX label file: magic 0x00000801, then count unsigned bytes.
inline std::vector<int> load_idx_labels(const std::filesystem::path& path) {
    const auto bytes = idx::read_file(path);
    const std::string name = path.filename().string();
    if (idx::read_be32(bytes, 0, name) != 0x00000801u)
        throw data_error(name + ": bad label magic at offset 0");
    const std::uint32_t count = idx::read_be32(bytes, 4, name);
    if (bytes.size() < 8 + static_cast<std::size_t>(count))
        throw data_error(name + ": truncated at offset " + std::to_string(bytes.size()));
    std::vector<int> labels(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        labels[i] = bytes[8 + i];
        if (labels[i] > 9)
            throw data_error(name + ": label " + std::to_string(labels[i]) +
                             " out of range at offset " + std::to_string(8 + i));
    }
    return labels;
}

// The four standard files: train/t10k images and labels.
inline Dataset load_mnist(const std::filesystem::path& dir) {
    Dataset d;
    d.num_classes = 10;
    d.train_x = load_idx_images(dir / "train-images-idx3-ubyte");
    d.train_y = load_idx_labels(dir / "train-labels-idx1-ubyte");
    d.test_x = load_idx_images(dir / "t10k-images-idx3-ubyte");
    d.test_y = load_idx_labels(dir / "t10k-labels-idx1-ubyte");
    if (d.train_x.rows != d.train_y.size() || d.test_x.rows != d.test_y.size())
        throw data_error("mnist: image/label count mismatch");
    return d;
}

} // namespace kafal

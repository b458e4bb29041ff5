#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "slt/tensor.hpp"

namespace slt {

struct Dataset {
    Tensor images;                // [N, C, H, W], values in [0,1] after loading
    std::vector<int32_t> labels;  // length N, values in [0, classes)
    std::string split;            // train | val | test
    int64_t classes = 0;

    int64_t size() const { return images.defined() ? images.dim(0) : 0; }
    std::array<int64_t, 3> sample_shape() const {
        return {images.dim(1), images.dim(2), images.dim(3)};
    }
};

// IDX loader (big-endian headers, magic 0x803 images / 0x801 labels).
// Gzip-compressed files are auto-detected by the 0x1f8b prefix.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes a dataset back out as an IDX pair; pixels quantized to u8.
void write_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path);

// CIFAR-10 binary format: 3073-byte records (label + 3x32x32 pixels).
Dataset load_cifar10(const std::vector<std::string>& batch_files);

// Deterministic, disjoint, exhaustive split; val examples drawn by shuffled index.
std::pair<Dataset, Dataset> split_validation(const Dataset& train, int64_t val_count,
                                             uint64_t seed);

enum class SyntheticKind { two_gaussians, xor_points };

// Separable 2-class toy data. two_gaussians fills the given sample shape;
// xor_points is always [1,1,2] cycling the four canonical points.
Dataset make_synthetic(SyntheticKind kind, int64_t n, uint64_t seed,
                       std::array<int64_t, 3> shape = {1, 28, 28});

// (x - mean) / stddev over all pixels. Consumes its argument.
Dataset standardize(Dataset ds, double mean, double stddev);
// Mean and std over every pixel of the dataset.
std::pair<double, double> image_stats(const Dataset& ds);

// First n examples (subset-mode truncation).
Dataset take(const Dataset& ds, int64_t n);

// Gathers samples into a fresh [n, C, H, W] batch tensor.
Tensor batch_images(const Dataset& ds, std::span<const int64_t> indices);
std::vector<int32_t> batch_labels(const Dataset& ds, std::span<const int64_t> indices);

// Every epoch visits each example exactly once; shuffle order is a pure
// function of (seed, epoch).
class BatchIterator {
public:
    BatchIterator(const Dataset& ds, int64_t batch_size, uint64_t seed);

    void begin_epoch(int64_t epoch);
    // Fills `out` with up to batch_size indices; false once the epoch is done.
    bool next_batch(std::vector<int64_t>& out);

    int64_t epoch() const { return epoch_; }
    int64_t batches_per_epoch() const;

private:
    const Dataset* ds_;
    int64_t batch_size_;
    uint64_t seed_;
    int64_t epoch_ = 0;
    int64_t cursor_ = 0;
    std::vector<int64_t> order_;
};

// splitmix64; the seed-derivation primitive used everywhere determinism
// depends on mixing a base seed with a stream id.
uint64_t mix_seed(uint64_t seed, uint64_t stream);

}  // namespace slt

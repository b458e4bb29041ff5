#include "slt/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "slt/gates.hpp"

namespace slt {

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

class SplitMix {
public:
    explicit SplitMix(uint64_t seed) : state_(seed) {}
    uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // Lemire multiply-shift bound; deterministic across platforms.
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<__uint128_t>(next()) * n) >> 64);
    }

private:
    uint64_t state_;
};

void fisher_yates(std::vector<int64_t>& v, SplitMix& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.below(i)]);
    }
}

std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

std::vector<unsigned char> gunzip(const std::vector<unsigned char>& in, const std::string& path) {
    std::vector<unsigned char> out;
    out.resize(std::max<size_t>(in.size() * 4, 1 << 20));
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK) throw IoError("zlib init failed for " + path);
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    size_t written = 0;
    int ret = Z_OK;
    while (ret != Z_STREAM_END) {
        if (written == out.size()) out.resize(out.size() * 2);
        zs.next_out = out.data() + written;
        zs.avail_out = static_cast<uInt>(out.size() - written);
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw IoError("gzip decompression failed for " + path);
        }
        written = out.size() - zs.avail_out;
    }
    inflateEnd(&zs);
    out.resize(written);
    return out;
}

std::vector<unsigned char> read_maybe_gzip(const std::string& path) {
    auto bytes = read_file_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return gunzip(bytes, path);
    return bytes;
}

uint32_t be32(const unsigned char* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void put_be32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

constexpr uint32_t kIdxImagesMagic = 0x00000803;
constexpr uint32_t kIdxLabelsMagic = 0x00000801;

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = read_maybe_gzip(images_path);
    const auto lab = read_maybe_gzip(labels_path);

    if (img.size() < 16) throw IoError(images_path + ": truncated IDX header");
    if (be32(img.data()) != kIdxImagesMagic) {
        throw IoError(images_path + ": bad IDX magic (expected 0x00000803)");
    }
    const uint32_t n = be32(img.data() + 4);
    const uint32_t h = be32(img.data() + 8);
    const uint32_t w = be32(img.data() + 12);
    if (img.size() != 16 + size_t(n) * h * w) {
        throw IoError(images_path + ": truncated image data (" + std::to_string(img.size()) +
                      " bytes for " + std::to_string(n) + " images)");
    }

    if (lab.size() < 8) throw IoError(labels_path + ": truncated IDX header");
    if (be32(lab.data()) != kIdxLabelsMagic) {
        throw IoError(labels_path + ": bad IDX magic (expected 0x00000801)");
    }
    const uint32_t ln = be32(lab.data() + 4);
    if (lab.size() != 8 + size_t(ln)) throw IoError(labels_path + ": truncated label data");
    if (ln != n) {
        throw IoError("image/label count mismatch: " + std::to_string(n) + " images vs " +
                      std::to_string(ln) + " labels");
    }

    Dataset ds;
    std::vector<double> pixels(size_t(n) * h * w);
    const unsigned char* src = img.data() + 16;
    for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = src[i] / 255.0;
    ds.images = Tensor::from_data({n, 1, h, w}, std::move(pixels));
    ds.labels.assign(lab.begin() + 8, lab.end());
    ds.classes = ds.labels.empty() ? 0 : *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    ds.split = "train";
    return ds;
}

void write_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path) {
    if (ds.images.dim(1) != 1) throw IoError("write_idx supports single-channel images only");
    std::ofstream img(images_path, std::ios::binary), lab(labels_path, std::ios::binary);
    if (!img || !lab) throw IoError("cannot open IDX output files");
    put_be32(img, kIdxImagesMagic);
    put_be32(img, static_cast<uint32_t>(ds.size()));
    put_be32(img, static_cast<uint32_t>(ds.images.dim(2)));
    put_be32(img, static_cast<uint32_t>(ds.images.dim(3)));
    for (double v : ds.images.data()) {
        const auto byte = static_cast<unsigned char>(
            std::clamp<long>(std::lround(v * 255.0), 0, 255));
        img.put(static_cast<char>(byte));
    }
    put_be32(lab, kIdxLabelsMagic);
    put_be32(lab, static_cast<uint32_t>(ds.labels.size()));
    for (int32_t l : ds.labels) lab.put(static_cast<char>(l));
    if (!img || !lab) throw IoError("short write while writing IDX files");
}

Dataset load_cifar10(const std::vector<std::string>& batch_files) {
    constexpr size_t kRecord = 3073;
    constexpr int64_t kPixels = 3 * 32 * 32;
    std::vector<double> pixels;
    std::vector<int32_t> labels;
    for (const auto& path : batch_files) {
        const auto bytes = read_maybe_gzip(path);
        if (bytes.empty() || bytes.size() % kRecord != 0) {
            throw IoError(path + ": not a multiple of 3073-byte CIFAR-10 records");
        }
        const size_t n = bytes.size() / kRecord;
        for (size_t i = 0; i < n; ++i) {
            const unsigned char* rec = bytes.data() + i * kRecord;
            if (rec[0] > 9) throw IoError(path + ": label out of range in record");
            labels.push_back(rec[0]);
            for (int64_t p = 0; p < kPixels; ++p) pixels.push_back(rec[1 + p] / 255.0);
        }
    }
    Dataset ds;
    const int64_t n = static_cast<int64_t>(labels.size());
    ds.images = Tensor::from_data({n, 3, 32, 32}, std::move(pixels));
    ds.labels = std::move(labels);
    ds.classes = 10;
    ds.split = "train";
    return ds;
}

namespace {

Dataset gather(const Dataset& src, std::span<const int64_t> idx, std::string split) {
    Dataset out;
    out.images = batch_images(src, idx);
    out.labels = batch_labels(src, idx);
    out.classes = src.classes;
    out.split = std::move(split);
    return out;
}

}  // namespace

std::pair<Dataset, Dataset> split_validation(const Dataset& train, int64_t val_count,
                                             uint64_t seed) {
    if (val_count >= train.size()) {
        throw ConfigError("validation count " + std::to_string(val_count) +
                          " must be smaller than the dataset (" + std::to_string(train.size()) +
                          ")");
    }
    std::vector<int64_t> order(static_cast<size_t>(train.size()));
    std::iota(order.begin(), order.end(), 0);
    SplitMix rng(mix_seed(seed, 0x5917));
    fisher_yates(order, rng);
    std::span<const int64_t> val_idx(order.data(), static_cast<size_t>(val_count));
    std::span<const int64_t> train_idx(order.data() + val_count,
                                       static_cast<size_t>(train.size() - val_count));
    return {gather(train, train_idx, "train"), gather(train, val_idx, "val")};
}

Dataset make_synthetic(SyntheticKind kind, int64_t n, uint64_t seed,
                       std::array<int64_t, 3> shape) {
    if (n <= 0) throw ConfigError("synthetic dataset size must be positive");
    Dataset ds;
    ds.classes = 2;
    ds.split = "train";
    if (kind == SyntheticKind::xor_points) {
        static constexpr double pts[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
        static constexpr int32_t labs[4] = {0, 1, 1, 0};
        std::vector<double> data;
        data.reserve(static_cast<size_t>(2 * n));
        for (int64_t i = 0; i < n; ++i) {
            data.push_back(pts[i % 4][0]);
            data.push_back(pts[i % 4][1]);
            ds.labels.push_back(labs[i % 4]);
        }
        ds.images = Tensor::from_data({n, 1, 1, 2}, std::move(data));
        return ds;
    }
    const int64_t dim = shape[0] * shape[1] * shape[2];
    const double offset = 3.0 / std::sqrt(static_cast<double>(dim));
    NoiseSource noise(mix_seed(seed, 0x6a u55));
    std::vector<double> data(static_cast<size_t>(n * dim));
    for (int64_t i = 0; i < n; ++i) {
        const int32_t label = static_cast<int32_t>(i % 2);
        const double sign = label == 0 ? 1.0 : -1.0;
        for (int64_t d = 0; d < dim; ++d) {
            data[static_cast<size_t>(i * dim + d)] = sign * offset + noise.normal();
        }
        ds.labels.push_back(label);
    }
    ds.images = Tensor::from_data({n, shape[0], shape[1], shape[2]}, std::move(data));
    return ds;
}

Dataset standardize(Dataset ds, double mean, double stddev) {
    if (stddev <= 0.0) throw ConfigError("standardize: stddev must be positive");
    for (double& v : ds.images.mutable_data()) v = (v - mean) / stddev;
    return ds;
}

std::pair<double, double> image_stats(const Dataset& ds) {
    const auto data = ds.images.data();
    double mean = 0.0;
    for (double v : data) mean += v;
    mean /= static_cast<double>(data.size());
    double var = 0.0;
    for (double v : data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(data.size());
    return {mean, std::sqrt(var)};
}

Dataset take(const Dataset& ds, int64_t n) {
    n = std::min(n, ds.size());
    std::vector<int64_t> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    return gather(ds, idx, ds.split);
}

Tensor batch_images(const Dataset& ds, std::span<const int64_t> indices) {
    const auto [c, h, w] = ds.sample_shape();
    const int64_t stride = c * h * w;
    Tensor out = Tensor::zeros({static_cast<int64_t>(indices.size()), c, h, w});
    double* dst = out.mutable_data().data();
    const double* src = ds.images.data().data();
    for (size_t i = 0; i < indices.size(); ++i) {
        std::memcpy(dst + i * stride, src + indices[i] * stride,
                    static_cast<size_t>(stride) * sizeof(double));
    }
    return out;
}

std::vector<int32_t> batch_labels(const Dataset& ds, std::span<const int64_t> indices) {
    std::vector<int32_t> out(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) out[i] = ds.labels[static_cast<size_t>(indices[i])];
    return out;
}

BatchIterator::BatchIterator(const Dataset& ds, int64_t batch_size, uint64_t seed)
    : ds_(&ds), batch_size_(batch_size), seed_(seed) {
    if (batch_size <= 0) throw ConfigError("batch size must be positive");
    order_.resize(static_cast<size_t>(ds.size()));
    begin_epoch(0);
}

void BatchIterator::begin_epoch(int64_t epoch) {
    epoch_ = epoch;
    cursor_ = 0;
    std::iota(order_.begin(), order_.end(), 0);
    SplitMix rng(mix_seed(seed_, static_cast<uint64_t>(epoch) + 0x8a77c3));
    fisher_yates(order_, rng);
}

bool BatchIterator::next_batch(std::vector<int64_t>& out) {
    if (cursor_ >= static_cast<int64_t>(order_.size())) return false;
    const int64_t end = std::min<int64_t>(cursor_ + batch_size_, order_.size());
    out.assign(order_.begin() + cursor_, order_.begin() + end);
    cursor_ = end;
    return true;
}

int64_t BatchIterator::batches_per_epoch() const {
    return (static_cast<int64_t>(order_.size()) + batch_size_ - 1) / batch_size_;
}

}  // namespace slt

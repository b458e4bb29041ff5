#include "slt/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace slt {

const char* arch_name(ArchId arch) {
    switch (arch) {
        case ArchId::lenet300: return "lenet300";
        case ArchId::smallconv: return "smallconv";
    }
    return "unknown";
}

ArchId arch_from_name(const std::string& name) {
    if (name == "lenet300") return ArchId::lenet300;
    if (name == "smallconv") return ArchId::smallconv;
    throw ConfigError("unknown architecture '" + name + "' (expected lenet300|smallconv)");
}

namespace {

int64_t scaled_dim(int64_t base, double multiplier) {
    return std::max<int64_t>(1, static_cast<int64_t>(std::floor(base * multiplier)));
}

Tensor draw_weights(std::vector<int64_t> shape, int64_t fan_in, double gain, NoiseSource& rng) {
    Tensor w = Tensor::zeros(std::move(shape), /*requires_grad=*/false);
    const double stddev = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
    rng.fill_normal(w.mutable_data(), stddev);
    return w;
}

}  // namespace

Tensor forward_gated_linear(const GatedLinear& layer, const Tensor& h, NoiseSource& noise,
                            GateMode mode, Tape* tape) {
    Tensor z = sample_gates(layer.gate, noise, mode, tape);
    return matmul(elementwise_mul(z, layer.weight, tape), h, tape);
}

Tensor forward_masked_linear(const GatedLinear& layer, const Tensor& mask, const Tensor& h) {
    return matmul(elementwise_mul(mask, layer.weight), h);
}

Tensor forward_gated_conv(const GatedConv2d& layer, const Tensor& h, NoiseSource& noise,
                          GateMode mode, Tape* tape) {
    Tensor z = sample_gates(layer.gate, noise, mode, tape);
    return conv2d(h, elementwise_mul(z, layer.kernel, tape), layer.stride, layer.padding, tape);
}

Tensor forward_masked_conv(const GatedConv2d& layer, const Tensor& mask, const Tensor& h) {
    return conv2d(h, elementwise_mul(mask, layer.kernel), layer.stride, layer.padding);
}

Network Network::build(const NetworkSpec& spec, double mu_init, double sigma) {
    Network net;
    net.spec_ = spec;
    NoiseSource rng(spec.init_seed);
    const auto [c, h, w] = spec.input_shape;

    auto gated_linear = [&](const std::string& name, int64_t out, int64_t in) {
        Tensor weight = draw_weights({out, in}, in, spec.kaiming_gain, rng);
        return GatedLinear{name, std::move(weight), GateTensor({out, in}, mu_init, sigma)};
    };
    auto gated_conv = [&](const std::string& name, int64_t out_ch, int64_t in_ch, int64_t k,
                          int stride, int padding) {
        Tensor kernel = draw_weights({out_ch, in_ch, k, k}, in_ch * k * k, spec.kaiming_gain, rng);
        return GatedConv2d{name, std::move(kernel), GateTensor({out_ch, in_ch, k, k}, mu_init, sigma),
                           stride, padding};
    };

    switch (spec.arch) {
        case ArchId::lenet300: {
            const int64_t h1 = scaled_dim(300, spec.width_multiplier);
            const int64_t h2 = scaled_dim(100, spec.width_multiplier);
            const int64_t in = c * h * w;
            net.nodes_.push_back(FlattenNode{});
            net.nodes_.push_back(gated_linear("fc1", h1, in));
            net.nodes_.push_back(ReluNode{});
            net.nodes_.push_back(gated_linear("fc2", h2, h1));
            net.nodes_.push_back(ReluNode{});
            net.nodes_.push_back(gated_linear("fc3", spec.classes, h2));
            break;
        }
        case ArchId::smallconv: {
            const int64_t c1 = scaled_dim(32, spec.width_multiplier);
            const int64_t c2 = scaled_dim(64, spec.width_multiplier);
            net.nodes_.push_back(gated_conv("conv1", c1, c, 3, 1, 1));
            net.nodes_.push_back(ReluNode{});
            net.nodes_.push_back(MaxPoolNode{2, 2});
            net.nodes_.push_back(gated_conv("conv2", c2, c1, 3, 1, 1));
            net.nodes_.push_back(ReluNode{});
            net.nodes_.push_back(MaxPoolNode{2, 2});
            const int64_t fh = ((h - 2) / 2 + 1 - 2) / 2 + 1;
            const int64_t fw = ((w - 2) / 2 + 1 - 2) / 2 + 1;
            net.nodes_.push_back(FlattenNode{});
            net.nodes_.push_back(gated_linear("fc1", spec.classes, c2 * fh * fw));
            break;
        }
    }
    return net;
}

Network init_weights(NetworkSpec spec, uint64_t seed, double mu_init, double sigma) {
    spec.init_seed = seed;
    return Network::build(spec, mu_init, sigma);
}

namespace {

struct ForwardVisitor {
    Tensor h;
    NoiseSource* noise;
    GateMode mode;
    Tape* tape;
    std::span<const Tensor> masks;  // non-empty selects the masked path
    size_t mask_idx = 0;

    void operator()(const GatedLinear& l) {
        if (!masks.empty()) {
            h = forward_masked_linear(l, masks[mask_idx++], h);
        } else {
            h = forward_gated_linear(l, h, *noise, mode, tape);
        }
    }
    void operator()(const GatedConv2d& l) {
        if (!masks.empty()) {
            h = forward_masked_conv(l, masks[mask_idx++], h);
        } else {
            h = forward_gated_conv(l, h, *noise, mode, tape);
        }
    }
    void operator()(const ReluNode&) { h = relu(h, tape); }
    void operator()(const MaxPoolNode& p) { h = maxpool2d(h, p.window, p.stride, tape); }
    void operator()(const FlattenNode&) {
        const int64_t n = h.dim(0);
        h = transpose(reshape(h, {n, h.size() / n}, tape), tape);
    }
};

Tensor run_forward(const std::vector<LayerNode>& nodes, const Tensor& batch, NoiseSource* noise,
                   GateMode mode, Tape* tape, std::span<const Tensor> masks) {
    static NoiseSource dummy(0);
    ForwardVisitor v{batch, noise ? noise : &dummy, mode, tape, masks};
    for (const auto& node : nodes) std::visit(v, node);
    // Gated layers produce [K x N]; report logits as [N x K].
    return transpose(v.h, tape);
}

}  // namespace

Tensor Network::forward(const Tensor& batch, NoiseSource* noise, GateMode mode, Tape* tape) const {
    return run_forward(nodes_, batch, noise, mode, tape, {});
}

Tensor Network::forward_masked(const Tensor& batch, std::span<const Tensor> masks) const {
    size_t gated = 0;
    for (const auto& node : nodes_)
        if (std::holds_alternative<GatedLinear>(node) || std::holds_alternative<GatedConv2d>(node))
            ++gated;
    if (masks.size() != gated) {
        throw ShapeError("forward_masked: " + std::to_string(masks.size()) + " masks for " +
                         std::to_string(gated) + " gated layers");
    }
    return run_forward(nodes_, batch, nullptr, GateMode::eval, nullptr, masks);
}

std::vector<GateTensor*> Network::gates() {
    std::vector<GateTensor*> out;
    for (auto& node : nodes_) {
        if (auto* l = std::get_if<GatedLinear>(&node)) out.push_back(&l->gate);
        if (auto* l = std::get_if<GatedConv2d>(&node)) out.push_back(&l->gate);
    }
    return out;
}

std::vector<const GateTensor*> Network::gates() const {
    std::vector<const GateTensor*> out;
    for (const auto& node : nodes_) {
        if (const auto* l = std::get_if<GatedLinear>(&node)) out.push_back(&l->gate);
        if (const auto* l = std::get_if<GatedConv2d>(&node)) out.push_back(&l->gate);
    }
    return out;
}

std::vector<Network::GatedLayerRef> Network::gated_layers() const {
    std::vector<GatedLayerRef> out;
    for (const auto& node : nodes_) {
        if (const auto* l = std::get_if<GatedLinear>(&node)) {
            out.push_back({l->name, l->weight.shape(), l->weight.size()});
        } else if (const auto* l = std::get_if<GatedConv2d>(&node)) {
            out.push_back({l->name, l->kernel.shape(), l->kernel.size()});
        }
    }
    return out;
}

int64_t Network::total_gates() const {
    int64_t total = 0;
    for (const auto& l : gated_layers()) total += l.count;
    return total;
}

uint64_t Network::weights_checksum() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& node : nodes_) {
        const Tensor* w = nullptr;
        if (const auto* l = std::get_if<GatedLinear>(&node)) w = &l->weight;
        if (const auto* l = std::get_if<GatedConv2d>(&node)) w = &l->kernel;
        if (w) h = fnv1a64(w->data().data(), w->data().size() * sizeof(double), h);
    }
    return h;
}

GateCount count_gates(const Network& net) {
    GateCount gc;
    for (const auto& l : net.gated_layers()) {
        gc.per_layer.emplace_back(l.name, l.count);
        gc.total += l.count;
    }
    return gc;
}

// ---- SLTW snapshot ----------------------------------------------------

namespace {

template <typename T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw IoError(std::string("weight snapshot truncated while reading ") + what);
    return v;
}

constexpr uint8_t kDtypeF32 = 0;
constexpr uint8_t kDtypeF64 = 1;

}  // namespace

void write_weight_snapshot(const Network& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write("SLTW", 4);
    write_pod<uint32_t>(os, 1);  // version
    const auto layers = net.gated_layers();
    write_pod<uint32_t>(os, static_cast<uint32_t>(layers.size()));
    for (const auto& node : net.nodes()) {
        const Tensor* w = nullptr;
        const std::string* name = nullptr;
        if (const auto* l = std::get_if<GatedLinear>(&node)) w = &l->weight, name = &l->name;
        if (const auto* l = std::get_if<GatedConv2d>(&node)) w = &l->kernel, name = &l->name;
        if (!w) continue;
        write_pod<uint16_t>(os, static_cast<uint16_t>(name->size()));
        os.write(name->data(), static_cast<std::streamsize>(name->size()));
        write_pod<uint32_t>(os, static_cast<uint32_t>(w->rank()));
        for (int i = 0; i < w->rank(); ++i) write_pod<uint32_t>(os, static_cast<uint32_t>(w->dim(i)));
        write_pod<uint8_t>(os, kDtypeF64);
        os.write(reinterpret_cast<const char*>(w->data().data()),
                 static_cast<std::streamsize>(w->data().size() * sizeof(double)));
    }
    if (!os) throw IoError("short write to " + path);
}

void load_weight_snapshot(Network& net, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SLTW", 4) != 0) throw IoError(path + ": bad SLTW magic");
    const auto version = read_pod<uint32_t>(is, "version");
    if (version != 1) throw IoError(path + ": unsupported SLTW version " + std::to_string(version));
    const auto count = read_pod<uint32_t>(is, "layer count");

    std::vector<std::pair<std::string, std::vector<double>>> loaded;
    for (uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<uint16_t>(is, "name length");
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const auto rank = read_pod<uint32_t>(is, "rank");
        int64_t numel = 1;
        for (uint32_t r = 0; r < rank; ++r) numel *= read_pod<uint32_t>(is, "dim");
        const auto dtype = read_pod<uint8_t>(is, "dtype");
        std::vector<double> data(static_cast<size_t>(numel));
        if (dtype == kDtypeF64) {
            is.read(reinterpret_cast<char*>(data.data()),
                    static_cast<std::streamsize>(data.size() * sizeof(double)));
        } else if (dtype == kDtypeF32) {
            std::vector<float> tmp(static_cast<size_t>(numel));
            is.read(reinterpret_cast<char*>(tmp.data()),
                    static_cast<std::streamsize>(tmp.size() * sizeof(float)));
            std::copy(tmp.begin(), tmp.end(), data.begin());
        } else {
            throw IoError(path + ": unknown dtype tag " + std::to_string(dtype));
        }
        if (!is) throw IoError(path + ": truncated weight data for layer " + name);
        loaded.emplace_back(std::move(name), std::move(data));
    }

    size_t idx = 0;
    for (auto& node : net.nodes()) {
        Tensor* w = nullptr;
        const std::string* name = nullptr;
        if (auto* l = std::get_if<GatedLinear>(&node)) w = &l->weight, name = &l->name;
        if (auto* l = std::get_if<GatedConv2d>(&node)) w = &l->kernel, name = &l->name;
        if (!w) continue;
        if (idx >= loaded.size() || loaded[idx].first != *name ||
            loaded[idx].second.size() != w->data().size()) {
            throw IoError(path + ": snapshot does not match network at layer " + *name);
        }
        std::copy(loaded[idx].second.begin(), loaded[idx].second.end(), w->mutable_data().begin());
        ++idx;
    }
    if (idx != loaded.size()) throw IoError(path + ": snapshot has extra layers");
}

}  // namespace slt

#pragma once

#include <array>
#include <string>
#include <variant>
#include <vector>

#include "slt/gates.hpp"
#include "slt/tensor.hpp"

namespace slt {

enum class ArchId { lenet300, smallconv };

const char* arch_name(ArchId arch);
ArchId arch_from_name(const std::string& name);  // ConfigError on unknown id

struct NetworkSpec {
    ArchId arch = ArchId::lenet300;
    std::array<int64_t, 3> input_shape{1, 28, 28};  // C, H, W
    int64_t classes = 10;
    double width_multiplier = 1.0;  // scales hidden sizes, floor with minimum 1
    double kaiming_gain = 1.0;      // scale factor on the Kaiming std
    uint64_t init_seed = 1;
};

// Frozen weight matrix [out x in] paired with a same-shape gate.
struct GatedLinear {
    std::string name;
    Tensor weight;
    GateTensor gate;
};

// Frozen kernel [O, C, kh, kw] paired with a same-shape gate.
struct GatedConv2d {
    std::string name;
    Tensor kernel;
    GateTensor gate;
    int stride;
    int padding;
};

struct ReluNode {};
struct MaxPoolNode {
    int window;
    int stride;
};
// Converts [N,C,H,W] activations into column-major [C*H*W x N] features.
struct FlattenNode {};

using LayerNode = std::variant<GatedLinear, GatedConv2d, ReluNode, MaxPoolNode, FlattenNode>;

// weff = sample_gates(gate) .* weight, result = weff · h. No activation here;
// the network composer applies those.
Tensor forward_gated_linear(const GatedLinear& layer, const Tensor& h, NoiseSource& noise,
                            GateMode mode, Tape* tape = nullptr);
Tensor forward_masked_linear(const GatedLinear& layer, const Tensor& mask, const Tensor& h);

Tensor forward_gated_conv(const GatedConv2d& layer, const Tensor& h, NoiseSource& noise,
                          GateMode mode, Tape* tape = nullptr);
Tensor forward_masked_conv(const GatedConv2d& layer, const Tensor& mask, const Tensor& h);

class Network {
public:
    // Draws frozen weights from N(0, gain^2 * 2 / fan_in) via the given seed,
    // deterministic; gates initialized to mu_init with shared sigma.
    static Network build(const NetworkSpec& spec, double mu_init = 0.5, double sigma = 0.5);

    // batch is [N,C,H,W]; returns logits [N x classes].
    Tensor forward(const Tensor& batch, NoiseSource* noise, GateMode mode,
                   Tape* tape = nullptr) const;
    // Ticket-path forward: per-gated-layer binary masks replace gate sampling.
    Tensor forward_masked(const Tensor& batch, std::span<const Tensor> masks) const;

    std::vector<GateTensor*> gates();
    std::vector<const GateTensor*> gates() const;

    struct GatedLayerRef {
        std::string name;
        std::vector<int64_t> shape;
        int64_t count;
    };
    std::vector<GatedLayerRef> gated_layers() const;
    int64_t total_gates() const;

    uint64_t weights_checksum() const;

    const NetworkSpec& spec() const { return spec_; }
    std::vector<LayerNode>& nodes() { return nodes_; }
    const std::vector<LayerNode>& nodes() const { return nodes_; }

private:
    NetworkSpec spec_;
    std::vector<LayerNode> nodes_;
};

// init_weights operation: builds the network for `spec` with weights drawn
// deterministically from `seed`.
Network init_weights(NetworkSpec spec, uint64_t seed, double mu_init = 0.5, double sigma = 0.5);

struct GateCount {
    std::vector<std::pair<std::string, int64_t>> per_layer;
    int64_t total = 0;
};
GateCount count_gates(const Network& net);

// "SLTW" weight snapshot: lets a mask be re-evaluated against the exact
// frozen weights of the run that produced it.
void write_weight_snapshot(const Network& net, const std::string& path);
void load_weight_snapshot(Network& net, const std::string& path);

}  // namespace slt

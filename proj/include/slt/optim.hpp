#pragma once

#include <cstdint>
#include <vector>

#include "slt/tensor.hpp"

namespace slt {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam state over a fixed parameter list. Moment buffers are allocated on
// construction and shape-checked against the parameters on every step.
class AdamState {
public:
    AdamState(std::vector<Tensor> params, AdamConfig config);

    // m <- b1*m + (1-b1)*g; v <- b2*v + (1-b2)*g^2; bias-corrected update.
    // Grads must be populated and are left untouched (caller zeroes them).
    void step();

    void zero_grads();
    int64_t step_count() const { return step_; }
    const AdamConfig& config() const { return config_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    AdamConfig config_;
    int64_t step_ = 0;
};

}  // namespace slt

#include "slt/optim.hpp"

#include <cmath>

namespace slt {

AdamState::AdamState(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p.data().size(), 0.0);
        v_.emplace_back(p.data().size(), 0.0);
    }
}

void AdamState::step() {
    ++step_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    const bool round_f32 = precision() == Precision::f32;
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& p = params_[pi];
        if (!p.has_grad()) {
            throw std::logic_error("adam_step: parameter " + std::to_string(pi) +
                                   " has no gradient");
        }
        auto theta = p.mutable_data();
        auto g = p.grad();
        double* m = m_[pi].data();
        double* v = v_[pi].data();
        for (size_t i = 0; i < theta.size(); ++i) {
            const double gi = g[i];
            if (!std::isfinite(gi)) throw NumericFault("adam_step: non-finite gradient");
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            double next = theta[i] - config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
            if (round_f32) next = static_cast<double>(static_cast<float>(next));
            theta[i] = next;
        }
    }
}

void AdamState::zero_grads() {
    for (auto& p : params_) p.zero_grad();
}

}  // namespace slt

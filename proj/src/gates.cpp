#include "slt/gates.hpp"

#include <cmath>
#include <numbers>

namespace slt {

double gauss_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

double gauss_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double NoiseSource::normal() {
    ++draws_;
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = static_cast<double>(rng_() >> 11) * 0x1p-53;
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1p-53;
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

void NoiseSource::fill_normal(std::span<double> out, double stddev) {
    for (double& v : out) v = stddev * normal();
}

GateTensor::GateTensor(std::vector<int64_t> shape, double mu_init, double sigma_crbg)
    : mu(Tensor::full(std::move(shape), mu_init, /*requires_grad=*/true)), sigma(sigma_crbg) {
    if (sigma <= 0.0) throw ConfigError("gate sigma must be positive");
}

GateTensor::GateTensor(Tensor mu_tensor, double sigma_crbg)
    : mu(std::move(mu_tensor)), sigma(sigma_crbg) {
    if (sigma <= 0.0) throw ConfigError("gate sigma must be positive");
}

Tensor sample_gates(const GateTensor& g, NoiseSource& noise, GateMode mode, Tape* tape) {
    if (mode == GateMode::eval) {
        return hard_sigmoid_clamp(g.mu, tape);
    }
    Tensor eps = Tensor::zeros(g.mu.shape(), false);
    noise.fill_normal(eps.mutable_data(), g.sigma);
    return hard_sigmoid_clamp(add(g.mu, eps, tape), tape);
}

Tensor expected_l0(const GateTensor& g, Tape* tape) {
    const Tensor& mu = g.mu;
    const double sigma = g.sigma;
    const bool rg = tape != nullptr && mu.requires_grad();
    Tensor out = detail::make_op_result({1}, rg);
    const double* pm = mu.data().data();
    const int64_t n = mu.size();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) acc += gauss_cdf(pm[i] / sigma);
    out.mutable_data()[0] = acc;
    detail::finalize_output("expected_l0", out);
    if (rg) {
        tape->record("expected_l0", out.impl(), [mu, out, sigma, n]() {
            const double gv = out.impl()->grad[0];
            mu.impl()->accum_grad_alloc();
            double* gm = mu.impl()->grad.data();
            const double* pm2 = mu.data().data();
            for (int64_t i = 0; i < n; ++i) gm[i] += gv * gauss_pdf(pm2[i] / sigma) / sigma;
        });
    }
    return out;
}

Tensor threshold_mask(const GateTensor& g) {
    Tensor mask = Tensor::zeros(g.mu.shape(), false);
    const double* pm = g.mu.data().data();
    double* pb = mask.mutable_data().data();
    const int64_t n = g.mu.size();
    for (int64_t i = 0; i < n; ++i) pb[i] = pm[i] > 0.0 ? 1.0 : 0.0;
    return mask;
}

double active_probability(double mu, double sigma) {
    if (sigma <= 0.0) throw ConfigError("active_probability: sigma must be positive");
    return gauss_cdf(mu / sigma);
}

}  // namespace slt

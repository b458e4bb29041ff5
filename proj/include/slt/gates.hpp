#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "slt/tensor.hpp"

namespace slt {

// Deterministic standard-normal source: mt19937_64 + Box-Muller.
// u1, u2 are 53-bit uniforms in [0,1); the pair
//   r = sqrt(-2 ln(1 - u1)),  z0 = r cos(2*pi*u2),  z1 = r sin(2*pi*u2)
// is produced in that order with z1 cached as the spare. Identical seeds
// give identical sequences.
class NoiseSource {
public:
    explicit NoiseSource(uint64_t seed) : rng_(seed) {}

    double normal();
    void fill_normal(std::span<double> out, double stddev);
    uint64_t draw_count() const { return draws_; }

private:
    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
    uint64_t draws_ = 0;
};

// Per-weight gate means plus the shared, fixed noise scale. `mu` is the
// only trainable state in the framework.
struct GateTensor {
    Tensor mu;
    double sigma;

    GateTensor(std::vector<int64_t> shape, double mu_init, double sigma_crbg);
    GateTensor(Tensor mu_tensor, double sigma_crbg);

    int64_t count() const { return mu.size(); }
};

enum class GateMode { train, eval };

// Train mode: z = clamp(mu + eps, 0, 1) with eps ~ N(0, sigma^2) drawn fresh
// per gate per call (one draw per optimization step, shared across the
// minibatch). Eval mode: z = clamp(mu, 0, 1), noise source untouched.
Tensor sample_gates(const GateTensor& g, NoiseSource& noise, GateMode mode, Tape* tape = nullptr);

// Differentiable expected active-gate count: sum_i Phi(mu_i / sigma).
// d/dmu_i = phi(mu_i / sigma) / sigma.
Tensor expected_l0(const GateTensor& g, Tape* tape = nullptr);

// Binary mask 1[mu > 0]; mu == 0 maps to pruned. Independent of sigma.
Tensor threshold_mask(const GateTensor& g);

// Phi(mu / sigma). Throws ConfigError for sigma <= 0.
double active_probability(double mu, double sigma);

// Standard normal CDF / density, erfc-based.
double gauss_cdf(double x);
double gauss_pdf(double x);

}  // namespace slt

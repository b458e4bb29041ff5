#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "slt/errors.hpp"

namespace slt {

// Global scalar mode. f64 is the default and the mode all oracles run in;
// f32 rounds every tensor boundary (creation, op outputs, optimizer writes)
// to float precision while accumulating in double.
enum class Precision { f64, f32 };

void set_precision(Precision p);
Precision precision();

namespace detail {

struct TensorImpl {
    std::vector<int64_t> shape;
    std::vector<double> data;
    std::vector<double> grad;  // allocated lazily, same length as data
    bool requires_grad = false;
    bool leaf = true;  // false for op outputs; their grads reset per backward pass

    int64_t size() const { return static_cast<int64_t>(data.size()); }
    void accum_grad_alloc() {
        if (grad.empty()) grad.assign(data.size(), 0.0);
    }
};

}  // namespace detail

// Dense row-major tensor. Copying a Tensor shares the underlying buffer;
// operations never mutate their inputs.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<int64_t> shape, double value, bool requires_grad = false);
    static Tensor from_data(std::vector<int64_t> shape, std::vector<double> data,
                            bool requires_grad = false);
    // 1-D convenience
    static Tensor vector(std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int64_t>& shape() const { return impl_->shape; }
    int64_t size() const { return impl_->size(); }
    int64_t dim(int i) const { return impl_->shape.at(static_cast<size_t>(i)); }
    int rank() const { return static_cast<int>(impl_->shape.size()); }

    std::span<const double> data() const { return impl_->data; }
    // Direct buffer access for initialization and the optimizer. Never used by ops.
    std::span<double> mutable_data() { return impl_->data; }

    bool requires_grad() const { return impl_->requires_grad; }
    bool has_grad() const { return !impl_->grad.empty(); }
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad();

    double item() const;
    double at(int64_t flat_index) const { return impl_->data.at(static_cast<size_t>(flat_index)); }

    std::string shape_str() const;

    std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }

private:
    friend Tensor make_op_output(std::vector<int64_t> shape, bool requires_grad);
    std::shared_ptr<detail::TensorImpl> impl_;
};

// Records one backward rule per executed operation, in execution order
// (which is a topological order of the graph). backward_from walks the
// list exactly once, in reverse.
class Tape {
public:
    void record(const char* op_name, std::shared_ptr<detail::TensorImpl> output,
                std::function<void()> backward_fn);

    // Seeds d(loss)/d(loss) = 1 and propagates. Leaf gradients accumulate
    // across calls; interior gradients are reset at the start of each pass.
    void backward_from(const Tensor& loss);

    void reset();
    size_t size() const { return entries_.size(); }

private:
    struct Entry {
        const char* op;
        std::shared_ptr<detail::TensorImpl> out;
        std::function<void()> backward;
    };
    std::vector<Entry> entries_;
};

// Free-function form of the backward operation.
void backward(const Tensor& loss, Tape& tape);

// ---- operations ------------------------------------------------------
// Every op validates shapes, checks outputs for NaN/Inf (NumericFault)
// and records a backward rule on `tape` when given one and some input
// requires grad. tape == nullptr means pure inference.

Tensor matmul(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor elementwise_mul(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor add(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor scale(const Tensor& a, double c, Tape* tape = nullptr);
Tensor sum(const Tensor& a, Tape* tape = nullptr);
Tensor relu(const Tensor& a, Tape* tape = nullptr);
Tensor hard_sigmoid_clamp(const Tensor& a, Tape* tape = nullptr);
Tensor transpose(const Tensor& a, Tape* tape = nullptr);
Tensor reshape(const Tensor& a, std::vector<int64_t> new_shape, Tape* tape = nullptr);

// Cross-correlation, no kernel flip. input [N,C,H,W], kernel [O,C,kh,kw].
// Output spatial dim = floor((H + 2*padding - kh) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding,
              Tape* tape = nullptr);

Tensor maxpool2d(const Tensor& input, int window, int stride, Tape* tape = nullptr);

// Mean over the batch of -log softmax(logits)[label]; max-subtraction stabilized.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int32_t> labels,
                             Tape* tape = nullptr);

// ---- helpers shared by custom ops in other modules -------------------
namespace detail {

// Allocates an op output, marking it interior to the tape.
Tensor make_op_result(std::vector<int64_t> shape, bool requires_grad);

// Finite check + f32 rounding at the tensor boundary. Throws NumericFault
// naming `op` if any value is NaN/Inf.
void finalize_output(const char* op, Tensor& t);

void accumulate_grad(const std::shared_ptr<TensorImpl>& t, std::span<const double> contribution);

}  // namespace detail

// FNV-1a 64 over the raw bytes of the value buffer.
uint64_t tensor_checksum(const Tensor& t);
uint64_t fnv1a64(const void* bytes, size_t len, uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace slt

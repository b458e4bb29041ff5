#include "slt/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

namespace slt {

namespace {

std::atomic<Precision> g_precision{Precision::f64};

int64_t shape_product(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
        if (d <= 0) throw ShapeError("tensor dimensions must be positive, got " + std::to_string(d));
        n *= d;
    }
    return n;
}

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EMat>;
using MapCM = Eigen::Map<const EMat>;

}  // namespace

void set_precision(Precision p) { g_precision.store(p); }
Precision precision() { return g_precision.load(); }

namespace detail {

void finalize_output(const char* op, Tensor& t) {
    auto buf = t.mutable_data();
    const bool round_f32 = precision() == Precision::f32;
    for (double& v : buf) {
        if (!std::isfinite(v)) {
            throw NumericFault(std::string("numeric fault in ") + op +
                               ": non-finite value in output");
        }
        if (round_f32) v = static_cast<double>(static_cast<float>(v));
    }
}

void accumulate_grad(const std::shared_ptr<TensorImpl>& t, std::span<const double> contribution) {
    t->accum_grad_alloc();
    double* g = t->grad.data();
    for (size_t i = 0; i < contribution.size(); ++i) g[i] += contribution[i];
}

Tensor make_op_result(std::vector<int64_t> shape, bool requires_grad) {
    Tensor t = Tensor::zeros(std::move(shape), false);
    t.impl()->requires_grad = requires_grad;
    t.impl()->leaf = false;
    return t;
}

}  // namespace detail

// ---- Tensor ----------------------------------------------------------

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
    const int64_t n = shape_product(shape);
    Tensor t;
    t.impl_ = std::make_shared<detail::TensorImpl>();
    t.impl_->shape = std::move(shape);
    t.impl_->data.assign(static_cast<size_t>(n), 0.0);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::full(std::vector<int64_t> shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    if (precision() == Precision::f32) value = static_cast<double>(static_cast<float>(value));
    std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
    return t;
}

Tensor Tensor::from_data(std::vector<int64_t> shape, std::vector<double> data,
                         bool requires_grad) {
    const int64_t n = shape_product(shape);
    if (n != static_cast<int64_t>(data.size())) {
        throw ShapeError("data length " + std::to_string(data.size()) +
                         " does not match shape product " + std::to_string(n));
    }
    Tensor t;
    t.impl_ = std::make_shared<detail::TensorImpl>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(data);
    t.impl_->requires_grad = requires_grad;
    if (precision() == Precision::f32) {
        for (double& v : t.impl_->data) v = static_cast<double>(static_cast<float>(v));
    }
    return t;
}

Tensor Tensor::vector(std::vector<double> data, bool requires_grad) {
    const int64_t n = static_cast<int64_t>(data.size());
    return from_data({n}, std::move(data), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

std::span<const double> Tensor::grad() const {
    if (impl_->grad.empty()) throw std::logic_error("grad not populated");
    return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
    impl_->accum_grad_alloc();
    return impl_->grad;
}

void Tensor::zero_grad() {
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

double Tensor::item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str());
    return impl_->data[0];
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < impl_->shape.size(); ++i) {
        if (i) os << 'x';
        os << impl_->shape[i];
    }
    os << ']';
    return os.str();
}

// ---- Tape ------------------------------------------------------------

void Tape::record(const char* op_name, std::shared_ptr<detail::TensorImpl> output,
                  std::function<void()> backward_fn) {
    entries_.push_back({op_name, std::move(output), std::move(backward_fn)});
}

void Tape::backward_from(const Tensor& loss) {
    if (loss.size() != 1) {
        throw ShapeError("backward requires a scalar loss, got shape " + loss.shape_str());
    }
    // Interior grads are per-pass; leaf grads accumulate across passes.
    for (auto& e : entries_) {
        if (!e.out->leaf && !e.out->grad.empty()) {
            std::fill(e.out->grad.begin(), e.out->grad.end(), 0.0);
        }
    }
    loss.impl()->accum_grad_alloc();
    loss.impl()->grad[0] += 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (it->out->grad.empty()) continue;  // not on the path to the loss
        it->backward();
    }
}

void Tape::reset() { entries_.clear(); }

void backward(const Tensor& loss, Tape& tape) { tape.backward_from(loss); }

// ---- ops -------------------------------------------------------------

namespace {

bool track(const Tensor& a, Tape* tape) { return tape != nullptr && a.requires_grad(); }

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b, Tape* tape) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: incompatible shapes " + a.shape_str() + " and " + b.shape_str());
    }
    const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    const bool rg = (tape != nullptr) && (a.requires_grad() || b.requires_grad());
    Tensor out = detail::make_op_result({m, n}, rg);
    {
        MapCM A(a.data().data(), m, k), B(b.data().data(), k, n);
        MapM C(out.mutable_data().data(), m, n);
        C.noalias() = A * B;
    }
    detail::finalize_output("matmul", out);
    if (rg) {
        tape->record("matmul", out.impl(), [a, b, out, m, k, n]() {
            MapCM G(out.impl()->grad.data(), m, n);
            if (a.requires_grad()) {
                a.impl()->accum_grad_alloc();
                MapM GA(a.impl()->grad.data(), m, k);
                MapCM B(b.data().data(), k, n);
                GA.noalias() += G * B.transpose();
            }
            if (b.requires_grad()) {
                b.impl()->accum_grad_alloc();
                MapM GB(b.impl()->grad.data(), k, n);
                MapCM A(a.data().data(), m, k);
                GB.noalias() += A.transpose() * G;
            }
        });
    }
    return out;
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b, Tape* tape) {
    check_same_shape("elementwise_mul", a, b);
    const bool rg = (tape != nullptr) && (a.requires_grad() || b.requires_grad());
    Tensor out = detail::make_op_result(a.shape(), rg);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.mutable_data().data();
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
    detail::finalize_output("elementwise_mul", out);
    if (rg) {
        tape->record("elementwise_mul", out.impl(), [a, b, out, n]() {
            const double* g = out.impl()->grad.data();
            if (a.requires_grad()) {
                a.impl()->accum_grad_alloc();
                double* ga = a.impl()->grad.data();
                const double* pb2 = b.data().data();
                for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * pb2[i];
            }
            if (b.requires_grad()) {
                b.impl()->accum_grad_alloc();
                double* gb = b.impl()->grad.data();
                const double* pa2 = a.data().data();
                for (int64_t i = 0; i < n; ++i) gb[i] += g[i] * pa2[i];
            }
        });
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b, Tape* tape) {
    check_same_shape("add", a, b);
    const bool rg = (tape != nullptr) && (a.requires_grad() || b.requires_grad());
    Tensor out = detail::make_op_result(a.shape(), rg);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.mutable_data().data();
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
    detail::finalize_output("add", out);
    if (rg) {
        tape->record("add", out.impl(), [a, b, out]() {
            std::span<const double> g(out.impl()->grad);
            if (a.requires_grad()) detail::accumulate_grad(a.impl(), g);
            if (b.requires_grad()) detail::accumulate_grad(b.impl(), g);
        });
    }
    return out;
}

Tensor scale(const Tensor& a, double c, Tape* tape) {
    const bool rg = track(a, tape);
    Tensor out = detail::make_op_result(a.shape(), rg);
    const double* pa = a.data().data();
    double* po = out.mutable_data().data();
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * c;
    detail::finalize_output("scale", out);
    if (rg) {
        tape->record("scale", out.impl(), [a, out, c, n]() {
            a.impl()->accum_grad_alloc();
            double* ga = a.impl()->grad.data();
            const double* g = out.impl()->grad.data();
            for (int64_t i = 0; i < n; ++i) ga[i] += c * g[i];
        });
    }
    return out;
}

Tensor sum(const Tensor& a, Tape* tape) {
    const bool rg = track(a, tape);
    Tensor out = detail::make_op_result({1}, rg);
    const double* pa = a.data().data();
    double acc = 0.0;
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) acc += pa[i];
    out.mutable_data()[0] = acc;
    detail::finalize_output("sum", out);
    if (rg) {
        tape->record("sum", out.impl(), [a, out, n]() {
            const double g = out.impl()->grad[0];
            a.impl()->accum_grad_alloc();
            double* ga = a.impl()->grad.data();
            for (int64_t i = 0; i < n; ++i) ga[i] += g;
        });
    }
    return out;
}

Tensor relu(const Tensor& a, Tape* tape) {
    const bool rg = track(a, tape);
    Tensor out = detail::make_op_result(a.shape(), rg);
    const double* pa = a.data().data();
    double* po = out.mutable_data().data();
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] > 0.0 ? pa[i] : 0.0;
    detail::finalize_output("relu", out);
    if (rg) {
        // Subgradient at 0 fixed to 0.
        tape->record("relu", out.impl(), [a, out, n]() {
            a.impl()->accum_grad_alloc();
            double* ga = a.impl()->grad.data();
            const double* g = out.impl()->grad.data();
            const double* pa2 = a.data().data();
            for (int64_t i = 0; i < n; ++i)
                if (pa2[i] > 0.0) ga[i] += g[i];
        });
    }
    return out;
}

Tensor hard_sigmoid_clamp(const Tensor& a, Tape* tape) {
    const bool rg = track(a, tape);
    Tensor out = detail::make_op_result(a.shape(), rg);
    const double* pa = a.data().data();
    double* po = out.mutable_data().data();
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) po[i] = std::clamp(pa[i], 0.0, 1.0);
    detail::finalize_output("hard_sigmoid_clamp", out);
    if (rg) {
        // Gradient 1 strictly inside (0,1); 0 at and beyond the boundaries.
        tape->record("hard_sigmoid_clamp", out.impl(), [a, out, n]() {
            a.impl()->accum_grad_alloc();
            double* ga = a.impl()->grad.data();
            const double* g = out.impl()->grad.data();
            const double* pa2 = a.data().data();
            for (int64_t i = 0; i < n; ++i)
                if (pa2[i] > 0.0 && pa2[i] < 1.0) ga[i] += g[i];
        });
    }
    return out;
}

Tensor transpose(const Tensor& a, Tape* tape) {
    if (a.rank() != 2) throw ShapeError("transpose: expected rank-2 tensor, got " + a.shape_str());
    const int64_t m = a.dim(0), n = a.dim(1);
    const bool rg = track(a, tape);
    Tensor out = detail::make_op_result({n, m}, rg);
    {
        MapCM A(a.data().data(), m, n);
        MapM O(out.mutable_data().data(), n, m);
        O = A.transpose();
    }
    detail::finalize_output("transpose", out);
    if (rg) {
        tape->record("transpose", out.impl(), [a, out, m, n]() {
            a.impl()->accum_grad_alloc();
            MapM GA(a.impl()->grad.data(), m, n);
            MapCM G(out.impl()->grad.data(), n, m);
            GA.noalias() += G.transpose();
        });
    }
    return out;
}

Tensor reshape(const Tensor& a, std::vector<int64_t> new_shape, Tape* tape) {
    const int64_t n = shape_product(new_shape);
    if (n != a.size()) {
        throw ShapeError("reshape: cannot view " + a.shape_str() + " as requested shape (" +
                         std::to_string(n) + " elements)");
    }
    const bool rg = track(a, tape);
    Tensor out = detail::make_op_result(std::move(new_shape), rg);
    std::copy(a.data().begin(), a.data().end(), out.mutable_data().begin());
    if (rg) {
        tape->record("reshape", out.impl(), [a, out]() {
            detail::accumulate_grad(a.impl(), out.impl()->grad);
        });
    }
    return out;
}

// ---- conv2d (im2col + matmul) ----------------------------------------

namespace {

struct ConvDims {
    int64_t n, c, h, w, o, kh, kw, oh, ow;
    int stride, padding;
};

ConvDims conv_dims(const Tensor& input, const Tensor& kernel, int stride, int padding) {
    if (input.rank() != 4 || kernel.rank() != 4) {
        throw ShapeError("conv2d: expected 4-D input and kernel, got " + input.shape_str() +
                         " and " + kernel.shape_str());
    }
    if (input.dim(1) != kernel.dim(1)) {
        throw ShapeError("conv2d: channel mismatch, input " + input.shape_str() + " vs kernel " +
                         kernel.shape_str());
    }
    if (stride <= 0 || padding < 0) throw ShapeError("conv2d: invalid stride/padding");
    ConvDims d{input.dim(0), input.dim(1), input.dim(2), input.dim(3),
               kernel.dim(0), kernel.dim(2), kernel.dim(3), 0, 0, stride, padding};
    d.kh = kernel.dim(2);
    d.kw = kernel.dim(3);
    const int64_t oh = (d.h + 2 * padding - d.kh) / stride + 1;
    const int64_t ow = (d.w + 2 * padding - d.kw) / stride + 1;
    if (d.h + 2 * padding < d.kh || d.w + 2 * padding < d.kw) {
        throw ShapeError("conv2d: kernel larger than padded input, input " + input.shape_str() +
                         " kernel " + kernel.shape_str());
    }
    d.oh = oh;
    d.ow = ow;
    return d;
}

// Column matrix layout: row = (n, oh, ow), col = (c, kh, kw).
std::vector<double> im2col(std::span<const double> x, const ConvDims& d) {
    const int64_t ckk = d.c * d.kh * d.kw;
    std::vector<double> col(static_cast<size_t>(d.n * d.oh * d.ow * ckk), 0.0);
    for (int64_t n = 0; n < d.n; ++n) {
        const double* xn = x.data() + n * d.c * d.h * d.w;
        double* rown = col.data() + n * d.oh * d.ow * ckk;
        for (int64_t oh = 0; oh < d.oh; ++oh) {
            for (int64_t ow = 0; ow < d.ow; ++ow) {
                double* dst = rown + (oh * d.ow + ow) * ckk;
                for (int64_t c = 0; c < d.c; ++c) {
                    for (int64_t i = 0; i < d.kh; ++i) {
                        const int64_t ih = oh * d.stride - d.padding + i;
                        if (ih < 0 || ih >= d.h) {
                            dst += d.kw;
                            continue;
                        }
                        for (int64_t j = 0; j < d.kw; ++j) {
                            const int64_t iw = ow * d.stride - d.padding + j;
                            *dst++ = (iw >= 0 && iw < d.w) ? xn[(c * d.h + ih) * d.w + iw] : 0.0;
                        }
                    }
                }
            }
        }
    }
    return col;
}

void col2im_accum(std::span<const double> col, const ConvDims& d, double* gx) {
    const int64_t ckk = d.c * d.kh * d.kw;
    for (int64_t n = 0; n < d.n; ++n) {
        double* gxn = gx + n * d.c * d.h * d.w;
        const double* rown = col.data() + n * d.oh * d.ow * ckk;
        for (int64_t oh = 0; oh < d.oh; ++oh) {
            for (int64_t ow = 0; ow < d.ow; ++ow) {
                const double* src = rown + (oh * d.ow + ow) * ckk;
                for (int64_t c = 0; c < d.c; ++c) {
                    for (int64_t i = 0; i < d.kh; ++i) {
                        const int64_t ih = oh * d.stride - d.padding + i;
                        if (ih < 0 || ih >= d.h) {
                            src += d.kw;
                            continue;
                        }
                        for (int64_t j = 0; j < d.kw; ++j) {
                            const int64_t iw = ow * d.stride - d.padding + j;
                            if (iw >= 0 && iw < d.w) gxn[(c * d.h + ih) * d.w + iw] += *src;
                            ++src;
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding, Tape* tape) {
    const ConvDims d = conv_dims(input, kernel, stride, padding);
    const int64_t rows = d.n * d.oh * d.ow;
    const int64_t ckk = d.c * d.kh * d.kw;
    const bool rg = (tape != nullptr) && (input.requires_grad() || kernel.requires_grad());

    auto col = std::make_shared<std::vector<double>>(im2col(input.data(), d));
    Tensor out = detail::make_op_result({d.n, d.o, d.oh, d.ow}, rg);
    {
        // Y[row, o] = col · kflatᵀ, then permute rows (n,oh,ow) into [N,O,OH,OW].
        EMat y(rows, d.o);
        MapCM C(col->data(), rows, ckk), K(kernel.data().data(), d.o, ckk);
        y.noalias() = C * K.transpose();
        double* po = out.mutable_data().data();
        for (int64_t n = 0; n < d.n; ++n)
            for (int64_t o = 0; o < d.o; ++o)
                for (int64_t p = 0; p < d.oh * d.ow; ++p)
                    po[(n * d.o + o) * d.oh * d.ow + p] = y(n * d.oh * d.ow + p, o);
    }
    detail::finalize_output("conv2d", out);
    if (rg) {
        tape->record("conv2d", out.impl(), [input, kernel, out, col, d, rows, ckk]() {
            // Gather output grad back into (row=(n,oh,ow), col=o) layout.
            EMat g2(rows, d.o);
            const double* g = out.impl()->grad.data();
            for (int64_t n = 0; n < d.n; ++n)
                for (int64_t o = 0; o < d.o; ++o)
                    for (int64_t p = 0; p < d.oh * d.ow; ++p)
                        g2(n * d.oh * d.ow + p, o) = g[(n * d.o + o) * d.oh * d.ow + p];
            MapCM C(col->data(), rows, ckk);
            if (kernel.requires_grad()) {
                kernel.impl()->accum_grad_alloc();
                MapM GK(kernel.impl()->grad.data(), d.o, ckk);
                GK.noalias() += g2.transpose() * C;
            }
            if (input.requires_grad()) {
                EMat gcol(rows, ckk);
                MapCM K(kernel.data().data(), d.o, ckk);
                gcol.noalias() = g2 * K;
                input.impl()->accum_grad_alloc();
                col2im_accum(std::span<const double>(gcol.data(), gcol.size()), d,
                             input.impl()->grad.data());
            }
        });
    }
    return out;
}

Tensor maxpool2d(const Tensor& input, int window, int stride, Tape* tape) {
    if (input.rank() != 4) throw ShapeError("maxpool2d: expected 4-D input, got " + input.shape_str());
    if (window <= 0 || stride <= 0) throw ShapeError("maxpool2d: invalid window/stride");
    const int64_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (h < window || w < window) {
        throw ShapeError("maxpool2d: window larger than input " + input.shape_str());
    }
    const int64_t oh = (h - window) / stride + 1;
    const int64_t ow = (w - window) / stride + 1;
    const bool rg = track(input, tape);
    Tensor out = detail::make_op_result({n, c, oh, ow}, rg);
    auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(n * c * oh * ow));
    const double* px = input.data().data();
    double* po = out.mutable_data().data();
    int64_t oidx = 0;
    for (int64_t b = 0; b < n; ++b) {
        for (int64_t ch = 0; ch < c; ++ch) {
            const double* plane = px + (b * c + ch) * h * w;
            for (int64_t i = 0; i < oh; ++i) {
                for (int64_t j = 0; j < ow; ++j, ++oidx) {
                    double best = -std::numeric_limits<double>::infinity();
                    int64_t best_idx = -1;
                    for (int64_t di = 0; di < window; ++di) {
                        for (int64_t dj = 0; dj < window; ++dj) {
                            const int64_t idx = (i * stride + di) * w + (j * stride + dj);
                            if (plane[idx] > best) {
                                best = plane[idx];
                                best_idx = (b * c + ch) * h * w + idx;
                            }
                        }
                    }
                    po[oidx] = best;
                    (*argmax)[static_cast<size_t>(oidx)] = best_idx;
                }
            }
        }
    }
    detail::finalize_output("maxpool2d", out);
    if (rg) {
        tape->record("maxpool2d", out.impl(), [input, out, argmax]() {
            input.impl()->accum_grad_alloc();
            double* gx = input.impl()->grad.data();
            const double* g = out.impl()->grad.data();
            for (size_t i = 0; i < argmax->size(); ++i) gx[(*argmax)[i]] += g[i];
        });
    }
    return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int32_t> labels, Tape* tape) {
    if (logits.rank() != 2) {
        throw ShapeError("softmax_cross_entropy: expected [N,K] logits, got " + logits.shape_str());
    }
    const int64_t n = logits.dim(0), k = logits.dim(1);
    if (static_cast<int64_t>(labels.size()) != n) {
        throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for batch of " + std::to_string(n));
    }
    for (int64_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= k) {
            throw ShapeError("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                             " out of range [0," + std::to_string(k) + ")");
        }
    }
    const bool rg = track(logits, tape);
    Tensor out = detail::make_op_result({1}, rg);
    auto probs = std::make_shared<std::vector<double>>(static_cast<size_t>(n * k));
    const double* pl = logits.data().data();
    double loss = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double* row = pl + i * k;
        double* prow = probs->data() + i * k;
        const double mx = *std::max_element(row, row + k);
        double denom = 0.0;
        for (int64_t j = 0; j < k; ++j) {
            prow[j] = std::exp(row[j] - mx);
            denom += prow[j];
        }
        for (int64_t j = 0; j < k; ++j) prow[j] /= denom;
        loss += -(row[labels[i]] - mx - std::log(denom));
    }
    out.mutable_data()[0] = loss / static_cast<double>(n);
    detail::finalize_output("softmax_cross_entropy", out);
    if (rg) {
        std::vector<int32_t> lab(labels.begin(), labels.end());
        tape->record("softmax_cross_entropy", out.impl(),
                     [logits, out, probs, lab = std::move(lab), n, k]() {
                         const double g = out.impl()->grad[0];
                         logits.impl()->accum_grad_alloc();
                         double* gl = logits.impl()->grad.data();
                         const double inv_n = 1.0 / static_cast<double>(n);
                         for (int64_t i = 0; i < n; ++i) {
                             const double* prow = probs->data() + i * k;
                             double* grow = gl + i * k;
                             for (int64_t j = 0; j < k; ++j) grow[j] += g * prow[j] * inv_n;
                             grow[lab[static_cast<size_t>(i)]] -= g * inv_n;
                         }
                     });
    }
    return out;
}

uint64_t fnv1a64(const void* bytes, size_t len, uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t tensor_checksum(const Tensor& t) {
    return fnv1a64(t.data().data(), t.data().size() * sizeof(double));
}

}  // namespace slt

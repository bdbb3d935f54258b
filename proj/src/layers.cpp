#include "lucgen/layers.hpp"

#include <cmath>

#include "lucgen/errors.hpp"
#include "lucgen/kernels.hpp"

namespace lucgen::num {

const char* act_name(Act a) {
    switch (a) {
        case Act::Identity: return "identity";
        case Act::Relu: return "relu";
        case Act::Sigmoid: return "sigmoid";
        case Act::Softplus: return "softplus";
        case Act::Log1p: return "log1p";
    }
    return "?";
}

namespace {

double sigmoid_clamped(double x) {
    const double y = 1.0 / (1.0 + std::exp(-x));
    if (y < kSigmoidClamp) return kSigmoidClamp;
    if (y > 1.0 - kSigmoidClamp) return 1.0 - kSigmoidClamp;
    return y;
}

double softplus(double x) {
    // Overflow-safe: softplus(x) = max(x, 0) + log1p(exp(-|x|))
    return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

} // namespace

Tensor activate(const Tensor& x, Act kind) {
    Tensor y = x;
    switch (kind) {
        case Act::Identity:
            break;
        case Act::Relu:
            for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
            break;
        case Act::Sigmoid:
            for (double& v : y.values()) v = sigmoid_clamped(v);
            break;
        case Act::Softplus:
            for (double& v : y.values()) v = softplus(v);
            break;
        case Act::Log1p:
            for (double& v : y.values()) {
                if (v <= -1.0) throw DomainError("log1p: input <= -1");
                v = std::log1p(v);
            }
            break;
    }
    ensure_finite(y, act_name(kind));
    return y;
}

Tensor activate_grad(const Tensor& x, const Tensor& y, Act kind, const Tensor& grad_y) {
    if (!x.same_shape(grad_y) || !x.same_shape(y))
        throw ShapeError("activation backward: mismatched shapes");
    Tensor gx = grad_y;
    switch (kind) {
        case Act::Identity:
            break;
        case Act::Relu:
            for (std::size_t i = 0; i < gx.size(); ++i)
                if (x[i] <= 0.0) gx[i] = 0.0;
            break;
        case Act::Sigmoid:
            // d/dx sigmoid = y(1-y); the clamped y makes saturated gradients
            // vanish instead of overflowing the downstream logs.
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= y[i] * (1.0 - y[i]);
            break;
        case Act::Softplus:
            for (std::size_t i = 0; i < gx.size(); ++i)
                gx[i] *= 1.0 / (1.0 + std::exp(-x[i]));
            break;
        case Act::Log1p:
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= 1.0 / (1.0 + x[i]);
            break;
    }
    return gx;
}

Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b) {
    if (x.rank() != 2 || W.rank() != 2) throw ShapeError("affine: x and W must be rank-2");
    if (x.cols() != W.rows())
        throw ShapeError("affine: x " + shape_str(x) + " incompatible with W " + shape_str(W));
    if (b.rank() != 1 || b.dim(0) != W.cols())
        throw ShapeError("affine: bias must be [" + std::to_string(W.cols()) + "]");
    Tensor y = Tensor::zeros({x.rows(), W.cols()});
    matmul(x.data(), W.data(), y.data(), x.rows(), x.cols(), W.cols());
    const std::size_t o = W.cols();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double* row = y.data() + i * o;
        for (std::size_t j = 0; j < o; ++j) row[j] += b[j];
    }
    ensure_finite(y, "affine");
    return y;
}

void affine_backward(const Tensor& x, const Tensor& W, const Tensor& grad_y,
                     Tensor* grad_x, Tensor* grad_W, Tensor* grad_b) {
    if (grad_y.rank() != 2 || grad_y.rows() != x.rows() || grad_y.cols() != W.cols())
        throw ShapeError("affine backward: grad_y shape mismatch");
    if (grad_x) {
        expect_matrix(*grad_x, x.rows(), x.cols(), "affine backward grad_x");
        matmul_acc_nt(grad_y.data(), W.data(), grad_x->data(),
                      x.rows(), W.rows(), W.cols());
    }
    if (grad_W) {
        expect_matrix(*grad_W, W.rows(), W.cols(), "affine backward grad_W");
        matmul_acc_tn(x.data(), grad_y.data(), grad_W->data(),
                      x.rows(), x.cols(), grad_y.cols());
    }
    if (grad_b) {
        if (grad_b->rank() != 1 || grad_b->dim(0) != W.cols())
            throw ShapeError("affine backward: grad_b shape mismatch");
        colsum_acc(grad_y.data(), grad_b->data(), grad_y.rows(), grad_y.cols());
    }
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, SeededRng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor W = Tensor::zeros({fan_in, fan_out});
    for (double& v : W.values()) v = rng.uniform(-bound, bound);
    return W;
}

Mlp Mlp::make(std::string prefix, const std::vector<std::size_t>& widths,
              const std::vector<Act>& acts) {
    if (widths.size() < 2 || acts.size() != widths.size() - 1)
        throw PreconditionError("mlp: need widths {in,...,out} and one activation per layer");
    Mlp m;
    m.prefix = std::move(prefix);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        m.layers.push_back({widths[l], widths[l + 1], acts[l]});
    return m;
}

void Mlp::init_params(ParamSet& params, SeededRng& rng) const {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        SeededRng wr = rng.stream(prefix + ".W", l);
        params.add(prefix + ".W" + std::to_string(l),
                   glorot_uniform(layers[l].in, layers[l].out, wr));
        params.add(prefix + ".b" + std::to_string(l), Tensor::zeros({layers[l].out}));
    }
}

Tensor Mlp::forward(const ParamSet& params, const Tensor& x, Trace* trace) const {
    if (x.rank() != 2 || x.cols() != layers.front().in)
        throw ShapeError("mlp forward: input must be [batch x " +
                         std::to_string(layers.front().in) + "]");
    if (trace) {
        trace->input = x;
        trace->pre.clear();
        trace->post.clear();
    }
    Tensor h = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Tensor& W = params.value(prefix + ".W" + std::to_string(l));
        const Tensor& b = params.value(prefix + ".b" + std::to_string(l));
        Tensor pre = affine(h, W, b);
        Tensor post = activate(pre, layers[l].act);
        if (trace) {
            trace->pre.push_back(pre);
            trace->post.push_back(post);
        }
        h = std::move(post);
    }
    return h;
}

Tensor Mlp::backward(ParamSet& params, const Trace& trace, const Tensor& grad_out,
                     bool accumulate_params) const {
    if (trace.pre.size() != layers.size())
        throw PreconditionError("mlp backward: trace does not match this stack");
    Tensor g = grad_out;
    for (std::size_t l = layers.size(); l-- > 0;) {
        g = activate_grad(trace.pre[l], trace.post[l], layers[l].act, g);
        const Tensor& in = (l == 0) ? trace.input : trace.post[l - 1];
        const Tensor& W = params.value(prefix + ".W" + std::to_string(l));
        Tensor grad_in = Tensor::zeros_like(in);
        if (accumulate_params) {
            Tensor& gW = params.grad(prefix + ".W" + std::to_string(l));
            Tensor& gb = params.grad(prefix + ".b" + std::to_string(l));
            affine_backward(in, W, g, &grad_in, &gW, &gb);
        } else {
            affine_backward(in, W, g, &grad_in, nullptr, nullptr);
        }
        g = std::move(grad_in);
    }
    return g;
}

} // namespace lucgen::num

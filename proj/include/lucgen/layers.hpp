#pragma once

#include <string>
#include <vector>

#include "lucgen/params.hpp"
#include "lucgen/rng.hpp"
#include "lucgen/tensor.hpp"

namespace lucgen::num {

// Sigmoid outputs are clamped into [kSigmoidClamp, 1 - kSigmoidClamp] so the
// log-losses downstream never see exact 0 or 1.
constexpr double kSigmoidClamp = 1e-7;

enum class Act { Identity, Relu, Sigmoid, Softplus, Log1p };

const char* act_name(Act a);

// Elementwise activation. Log1p requires inputs > -1.
Tensor activate(const Tensor& x, Act kind);

// Hand-derived analytic gradient of each activation: given upstream grad_y,
// returns grad_x. `y` is the forward output (used where the derivative is
// cheapest in terms of the output).
Tensor activate_grad(const Tensor& x, const Tensor& y, Act kind, const Tensor& grad_y);

// y[b x o] = x[b x i] * W[i x o] + b[o] (bias broadcast over rows).
Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b);

// Analytic gradients of affine; accumulates (+=) into whichever of grad_x,
// grad_W, grad_b is non-null:
//   grad_x += grad_y * W^T,  grad_W += x^T * grad_y,  grad_b += colsum(grad_y)
void affine_backward(const Tensor& x, const Tensor& W, const Tensor& grad_y,
                     Tensor* grad_x, Tensor* grad_W, Tensor* grad_b);

// Glorot/Xavier uniform init: entries drawn from +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, SeededRng& rng);

// Small dense stack: affine layers with per-layer activations, parameters
// registered in a ParamSet under "<prefix>.W<l>" / "<prefix>.b<l>". Forward
// records the intermediates a hand-derived backward needs.
struct Mlp {
    struct Layer {
        std::size_t in = 0;
        std::size_t out = 0;
        Act act = Act::Identity;
    };

    std::string prefix;
    std::vector<Layer> layers;

    // widths = {in, h1, ..., out}; acts has widths.size()-1 entries.
    static Mlp make(std::string prefix, const std::vector<std::size_t>& widths,
                    const std::vector<Act>& acts);

    void init_params(ParamSet& params, SeededRng& rng) const;

    struct Trace {
        Tensor input;
        std::vector<Tensor> pre;   // affine outputs per layer
        std::vector<Tensor> post;  // activation outputs per layer
    };

    Tensor forward(const ParamSet& params, const Tensor& x, Trace* trace) const;

    // Returns grad wrt the input; accumulates parameter gradients when
    // accumulate_params is true (false = layer frozen, e.g. the discriminator
    // during a generator step).
    Tensor backward(ParamSet& params, const Trace& trace, const Tensor& grad_out,
                    bool accumulate_params) const;

    std::size_t in_dim() const { return layers.front().in; }
    std::size_t out_dim() const { return layers.back().out; }
};

} // namespace lucgen::num

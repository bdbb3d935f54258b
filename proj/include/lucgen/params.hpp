#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lucgen/tensor.hpp"

namespace lucgen::num {

// Named collection of trainable tensors with matching gradient slots.
// Iteration order is insertion order, which keeps optimizer sweeps and
// serialization deterministic.
class ParamSet {
public:
    std::size_t add(std::string name, Tensor init);

    std::size_t count() const { return names_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    bool has(std::string_view name) const;

    Tensor& value(std::string_view name);
    const Tensor& value(std::string_view name) const;
    Tensor& grad(std::string_view name);
    const Tensor& grad(std::string_view name) const;

    Tensor& value_at(std::size_t i) { return values_[i]; }
    const Tensor& value_at(std::size_t i) const { return values_[i]; }
    Tensor& grad_at(std::size_t i) { return grads_[i]; }
    const Tensor& grad_at(std::size_t i) const { return grads_[i]; }

    void zero_grads();

    // Flat coordinate view across all parameters, in insertion order.
    std::size_t coord_count() const;
    double get_coord(std::size_t c) const;
    void set_coord(std::size_t c, double v);
    double grad_coord(std::size_t c) const;

private:
    std::size_t find(std::string_view name) const;

    std::vector<std::string> names_;
    std::vector<Tensor> values_;
    std::vector<Tensor> grads_;
};

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam optimizer state (first/second moments per parameter, step count).
// Moments stay aligned with the ParamSet it was built from.
class AdamState {
public:
    AdamState(const ParamSet& params, AdamHyper hyper);

    const AdamHyper& hyper() const { return hyper_; }
    std::int64_t steps() const { return t_; }

    // One bias-corrected Adam update from the gradients in `params`;
    // gradients are zeroed afterward.
    void step(ParamSet& params);

private:
    AdamHyper hyper_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    std::int64_t t_ = 0;
};

inline void adam_step(ParamSet& params, AdamState& state) { state.step(params); }

} // namespace lucgen::num

#include "lucgen/params.hpp"

#include <cmath>

#include "lucgen/errors.hpp"

namespace lucgen::num {

std::size_t ParamSet::add(std::string name, Tensor init) {
    if (has(name)) throw PreconditionError("param already registered: " + name);
    names_.push_back(std::move(name));
    grads_.push_back(Tensor::zeros_like(init));
    values_.push_back(std::move(init));
    return names_.size() - 1;
}

bool ParamSet::has(std::string_view name) const {
    for (const auto& n : names_)
        if (n == name) return true;
    return false;
}

std::size_t ParamSet::find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    throw PreconditionError("unknown param: " + std::string(name));
}

Tensor& ParamSet::value(std::string_view name) { return values_[find(name)]; }
const Tensor& ParamSet::value(std::string_view name) const { return values_[find(name)]; }
Tensor& ParamSet::grad(std::string_view name) { return grads_[find(name)]; }
const Tensor& ParamSet::grad(std::string_view name) const { return grads_[find(name)]; }

void ParamSet::zero_grads() {
    for (auto& g : grads_) g.fill(0.0);
}

std::size_t ParamSet::coord_count() const {
    std::size_t n = 0;
    for (const auto& t : values_) n += t.size();
    return n;
}

double ParamSet::get_coord(std::size_t c) const {
    for (const auto& t : values_) {
        if (c < t.size()) return t[c];
        c -= t.size();
    }
    throw PreconditionError("coordinate out of range");
}

void ParamSet::set_coord(std::size_t c, double v) {
    for (auto& t : values_) {
        if (c < t.size()) {
            t[c] = v;
            return;
        }
        c -= t.size();
    }
    throw PreconditionError("coordinate out of range");
}

double ParamSet::grad_coord(std::size_t c) const {
    for (const auto& t : grads_) {
        if (c < t.size()) return t[c];
        c -= t.size();
    }
    throw PreconditionError("coordinate out of range");
}

AdamState::AdamState(const ParamSet& params, AdamHyper hyper) : hyper_(hyper) {
    if (!(hyper_.lr > 0.0)) throw PreconditionError("adam: lr must be positive");
    if (!(hyper_.beta1 >= 0.0 && hyper_.beta1 < 1.0))
        throw PreconditionError("adam: beta1 must lie in [0, 1)");
    if (!(hyper_.beta2 >= 0.0 && hyper_.beta2 < 1.0))
        throw PreconditionError("adam: beta2 must lie in [0, 1)");
    if (!(hyper_.eps > 0.0)) throw PreconditionError("adam: eps must be positive");
    m_.reserve(params.count());
    v_.reserve(params.count());
    for (std::size_t i = 0; i < params.count(); ++i) {
        m_.push_back(Tensor::zeros_like(params.value_at(i)));
        v_.push_back(Tensor::zeros_like(params.value_at(i)));
    }
}

void AdamState::step(ParamSet& params) {
    if (params.count() == 0) throw PreconditionError("adam: empty parameter set");
    if (params.count() != m_.size())
        throw PreconditionError("adam: parameter set changed since state creation");
    t_ += 1;
    const double b1 = hyper_.beta1;
    const double b2 = hyper_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.count(); ++p) {
        Tensor& value = params.value_at(p);
        const Tensor& grad = params.grad_at(p);
        if (!value.same_shape(grad) || !value.same_shape(m_[p]))
            throw PreconditionError("adam: shape drift on param " + params.name(p));
        double* mv = m_[p].data();
        double* vv = v_[p].data();
        double* pv = value.data();
        const double* gv = grad.data();
        const std::size_t n = value.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double g = gv[i];
            mv[i] = b1 * mv[i] + (1.0 - b1) * g;
            vv[i] = b2 * vv[i] + (1.0 - b2) * g * g;
            const double mhat = mv[i] / bc1;
            const double vhat = vv[i] / bc2;
            pv[i] -= hyper_.lr * mhat / (std::sqrt(vhat) + hyper_.eps);
        }
        ensure_finite(value, "adam: updated parameter");
    }
    params.zero_grads();
}

} // namespace lucgen::num

#include "lucgen/tensor.hpp"

#include <cmath>

#include "lucgen/errors.hpp"

namespace lucgen::num {

namespace {

std::size_t shape_volume(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

} // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.v_.assign(shape_volume(t.shape_), 0.0);
    return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.v_.assign(shape_volume(t.shape_), value);
    return t;
}

Tensor Tensor::of(std::vector<std::size_t> shape, std::vector<double> values) {
    if (shape_volume(shape) != values.size())
        throw ShapeError("tensor literal: " + std::to_string(values.size()) +
                         " values do not fill the requested shape");
    Tensor t;
    t.shape_ = std::move(shape);
    t.v_ = std::move(values);
    return t;
}

void Tensor::fill(double value) {
    for (double& x : v_) x = value;
}

std::string shape_str(const Tensor& t) {
    std::string s = "[";
    for (std::size_t i = 0; i < t.rank(); ++i) {
        if (i) s += "x";
        s += std::to_string(t.dim(i));
    }
    return s + "]";
}

void ensure_finite(const Tensor& t, const char* what) {
    for (double x : t.values())
        if (!std::isfinite(x))
            throw NumericError(std::string(what) + ": non-finite value");
}

void ensure_finite(double x, const char* what) {
    if (!std::isfinite(x))
        throw NumericError(std::string(what) + ": non-finite value");
}

void expect_matrix(const Tensor& t, std::size_t rows, std::size_t cols, const char* what) {
    if (t.rank() != 2 || t.rows() != rows || t.cols() != cols)
        throw ShapeError(std::string(what) + ": expected [" + std::to_string(rows) + "x" +
                         std::to_string(cols) + "], got " + shape_str(t));
}

} // namespace lucgen::num

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lucgen::num {

// Dense row-major tensor of doubles. Rank is the shape length; rank-2 tensors
// are matrices (rows x cols), rank-3 tensors are channel stacks (c x rows x cols).
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor of(std::vector<std::size_t> shape, std::vector<double> values);
    static Tensor zeros_like(const Tensor& other) { return zeros(other.shape_); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }

    // Rank-2 helpers.
    std::size_t rows() const { return shape_[0]; }
    std::size_t cols() const { return shape_[1]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }

    double& at2(std::size_t i, std::size_t j) { return v_[i * shape_[1] + j]; }
    double at2(std::size_t i, std::size_t j) const { return v_[i * shape_[1] + j]; }

    double& at3(std::size_t c, std::size_t i, std::size_t j) {
        return v_[(c * shape_[1] + i) * shape_[2] + j];
    }
    double at3(std::size_t c, std::size_t i, std::size_t j) const {
        return v_[(c * shape_[1] + i) * shape_[2] + j];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    void fill(double value);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> v_;
};

std::string shape_str(const Tensor& t);

// Throws NumericError when any entry is NaN or infinite. Public layer
// operations call this on their outputs so non-finite values never propagate.
void ensure_finite(const Tensor& t, const char* what);
void ensure_finite(double x, const char* what);

// Throws ShapeError unless t has the given rank-2 shape.
void expect_matrix(const Tensor& t, std::size_t rows, std::size_t cols, const char* what);

} // namespace lucgen::num

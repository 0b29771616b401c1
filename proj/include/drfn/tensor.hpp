#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace drfn {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major tensor of doubles. Most operations work on rank-2 values;
/// vectors are carried as 1×n rows or n×1 columns and scalars as 1×1.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(std::size_t rows, std::size_t cols);
    static Tensor filled(std::size_t rows, std::size_t cols, double value);
    static Tensor identity(std::size_t n);
    static Tensor scalar(double value);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor row(std::span<const double> values);
    static Tensor column(std::span<const double> values);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // Rank-2 accessors; throw DimensionError on other ranks.
    std::size_t rows() const {
        if (shape_.size() != 2) throw_not_rank2();
        return shape_[0];
    }
    std::size_t cols() const {
        if (shape_.size() != 2) throw_not_rank2();
        return shape_[1];
    }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::vector<double>& storage() { return data_; }

    double item() const;
    bool all_finite() const;
    void fill(double value);

    bool operator==(const Tensor& other) const = default;

private:
    [[noreturn]] void throw_not_rank2() const;

    Shape shape_;
    std::vector<double> data_;
};

// Plain kernels with no graph attached. The differentiable ops in autodiff.hpp
// are built on these.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor softmax_rows(const Tensor& x);
Tensor pairwise_l1(const Tensor& u, const Tensor& w);

/// Tanh-form GELU: 0.5·x·(1 + tanh(√(2/π)·(x + 0.044715·x³))).
double gelu(double x);
double gelu_derivative(double x);
double sigmoid(double x);

double max_abs_diff(const Tensor& a, const Tensor& b);

void require_rank2(const Tensor& t, const char* what);
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace drfn

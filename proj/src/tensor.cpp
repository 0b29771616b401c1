#include "drfn/tensor.hpp"

#include "drfn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>

namespace drfn {

namespace {

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(element_count(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_string(shape_));
    }
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value) {
    Tensor t({rows, cols});
    t.fill(value);
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, {value}); }

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::row(std::span<const double> values) {
    return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::column(std::span<const double> values) {
    return Tensor({values.size(), 1}, std::vector<double>(values.begin(), values.end()));
}

void Tensor::throw_not_rank2() const {
    throw DimensionError("expected rank-2 tensor, got " + shape_string(shape_));
}

double Tensor::item() const {
    if (data_.size() != 1) throw DimensionError("item() on non-scalar tensor " + shape_string(shape_));
    return data_[0];
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void require_rank2(const Tensor& t, const char* what) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(what) + ": expected rank-2 tensor, got " + shape_string(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) {
        throw DimensionError("matmul: inner dimensions disagree, " + shape_string(a.shape()) + " · " +
                             shape_string(b.shape()));
    }
    Tensor out({m, n});
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = po + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            if (av == 0.0) continue;
            const double* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    require_rank2(a, "transpose");
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(j, i) = a(i, j);
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    require_rank2(x, "softmax_rows");
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            const double v = x(i, j);
            if (std::isnan(v)) throw NumericError("softmax_rows: NaN input in row " + std::to_string(i));
            mx = std::max(mx, v);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double e = std::exp(x(i, j) - mx);
            out(i, j) = e;
            total += e;
        }
        for (std::size_t j = 0; j < n; ++j) out(i, j) /= total;
    }
    return out;
}

Tensor pairwise_l1(const Tensor& u, const Tensor& w) {
    require_rank2(u, "pairwise_l1");
    require_rank2(w, "pairwise_l1");
    if (u.cols() != w.cols()) {
        throw DimensionError("pairwise_l1: feature dimensions disagree, " + shape_string(u.shape()) + " vs " +
                             shape_string(w.shape()));
    }
    const std::size_t zu = u.rows(), zw = w.rows(), f = u.cols();
    Tensor out({zu, zw});
    for (std::size_t i = 0; i < zu; ++i)
        for (std::size_t j = 0; j < zw; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < f; ++k) s += std::abs(u(i, k) - w(j, k));
            out(i, j) = s;
        }
    return out;
}

namespace {
constexpr double kGeluCoeff = 0.044715;
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);
}  // namespace

double gelu(double x) {
    const double inner = kSqrt2OverPi * (x + kGeluCoeff * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(inner));
}

double gelu_derivative(double x) {
    const double inner = kSqrt2OverPi * (x + kGeluCoeff * x * x * x);
    const double th = std::tanh(inner);
    const double dinner = kSqrt2OverPi * (1.0 + 3.0 * kGeluCoeff * x * x);
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * dinner;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace drfn

#include "drfn/autodiff.hpp"

#include "drfn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace drfn::ad {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
    if (consumed_) throw ContractError("tape already consumed by backward()");
    Node node;
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor value) {
    Var v = constant(std::move(value));
    nodes_[v.id()].requires_grad = true;
    return v;
}

Var Tape::param(Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
    if (consumed_) throw ContractError("tape already consumed by backward()");
    Node node;
    node.param = &p;
    node.requires_grad = p.trainable;
    nodes_.push_back(std::move(node));
    param_nodes_.emplace(&p, nodes_.size() - 1);
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward fn) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backward fn) {
    if (consumed_) throw ContractError("tape already consumed by backward()");
    Node node;
    node.value = std::move(value);
    node.inputs.reserve(inputs.size());
    for (const Var& in : inputs) {
        if (&in.tape() != this) throw ContractError("operands recorded on different tapes");
        node.inputs.push_back(in.id());
        node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
    }
    if (node.requires_grad) node.backward = std::move(fn);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.param ? n.param->value : n.value;
}

Tensor Tape::grad(Var v) const {
    const Node& n = nodes_[v.id()];
    if (n.has_grad) return n.grad;
    return Tensor(value(v.id()).shape());
}

Tensor* Tape::grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return nullptr;
    if (!n.has_grad) {
        n.grad = Tensor(value(id).shape());
        n.has_grad = true;
    }
    return &n.grad;
}

void Tape::backward(Var loss) {
    if (consumed_) throw ContractError("backward() called twice on one tape");
    const Tensor& lv = value(loss.id());
    if (lv.size() != 1) throw ContractError("backward() needs a scalar loss, got " + shape_string(lv.shape()));
    consumed_ = true;
    if (!nodes_[loss.id()].requires_grad) return;
    grad_buffer(loss.id())->fill(1.0);

    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.has_grad) continue;
        if (n.backward) n.backward(*this, id);
        if (n.param) {
            auto dst = n.param->grad.data();
            const auto src = n.grad.data();
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
    }
}

namespace {

Tape& tape_of(Var a, Var b) {
    if (&a.tape() != &b.tape()) throw ContractError("operands recorded on different tapes");
    return a.tape();
}

// Gradient buffer of the i-th input of `self`, or nullptr.
Tensor* in_grad(Tape& t, std::size_t self, std::size_t i) { return t.grad_buffer(t.inputs(self)[i]); }
const Tensor& in_value(Tape& t, std::size_t self, std::size_t i) { return t.value(t.inputs(self)[i]); }

}  // namespace

Var add(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    const auto bv = b.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
    return t.record(std::move(out), {a, b}, [](Tape& tp, std::size_t self) {
        const auto g = tp.out_grad(self).data();
        for (std::size_t k = 0; k < 2; ++k)
            if (Tensor* gi = in_grad(tp, self, k))
                for (std::size_t i = 0; i < g.size(); ++i) (*gi)[i] += g[i];
    });
}

Var sub(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape(a.value(), b.value(), "sub");
    Tensor out = a.value();
    const auto bv = b.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
    return t.record(std::move(out), {a, b}, [](Tape& tp, std::size_t self) {
        const auto g = tp.out_grad(self).data();
        if (Tensor* ga = in_grad(tp, self, 0))
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        if (Tensor* gb = in_grad(tp, self, 1))
            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    });
}

Var mul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    const auto bv = b.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
    return t.record(std::move(out), {a, b}, [](Tape& tp, std::size_t self) {
        const auto g = tp.out_grad(self).data();
        const auto av = in_value(tp, self, 0).data();
        const auto bv = in_value(tp, self, 1).data();
        if (Tensor* ga = in_grad(tp, self, 0))
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
        if (Tensor* gb = in_grad(tp, self, 1))
            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    });
}

Var scale(Var a, double c) {
    Tensor out = a.value();
    for (auto& v : out.data()) v *= c;
    return a.tape().record(std::move(out), {a}, [c](Tape& tp, std::size_t self) {
        const auto g = tp.out_grad(self).data();
        if (Tensor* ga = in_grad(tp, self, 0))
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += c * g[i];
    });
}

Var add_scalar(Var a, double c) {
    Tensor out = a.value();
    for (auto& v : out.data()) v += c;
    return a.tape().record(std::move(out), {a}, [](Tape& tp, std::size_t self) {
        const auto g = tp.out_grad(self).data();
        if (Tensor* ga = in_grad(tp, self, 0))
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    });
}

Var neg(Var a) { return scale(a, -1.0); }

Var matmul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    Tensor out = drfn::matmul(a.value(), b.value());
    return t.record(std::move(out), {a, b}, [](Tape& tp, std::size_t self) {
        const Tensor& g = tp.out_grad(self);
        const Tensor& av = in_value(tp, self, 0);
        const Tensor& bv = in_value(tp, self, 1);
        const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
        const double* pg = g.data().data();
        if (Tensor* ga = in_grad(tp, self, 0)) {
            // dA = G·Bᵀ, accumulated row by row so the inner loop is a contiguous axpy.
            const Tensor bt = drfn::transpose(bv);
            const double* pbt = bt.data().data();
            double* pga = ga->data().data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double gij = pg[i * n + j];
                    if (gij == 0.0) continue;
                    const double* src = pbt + j * k;
                    double* dst = pga + i * k;
                    for (std::size_t p = 0; p < k; ++p) dst[p] += gij * src[p];
                }
        }
        if (Tensor* gb = in_grad(tp, self, 1)) {
            // dB = Aᵀ·G
            const double* pa = av.data().data();
            double* pgb = gb->data().data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double a_ip = pa[i * k + p];
                    if (a_ip == 0.0) continue;
                    const double* src = pg + i * n;
                    double* dst = pgb + p * n;
                    for (std::size_t j = 0; j < n; ++j) dst[j] += a_ip * src[j];
                }
        }
    });
}

Var transpose(Var a) {
    return a.tape().record(drfn::transpose(a.value()), {a}, [](Tape& tp, std::size_t self) {
        const Tensor& g = tp.out_grad(self);
        if (Tensor* ga = in_grad(tp, self, 0))
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) (*ga)(j, i) += g(i, j);
    });
}

Var add_row(Var m, Var row) {
    Tape& t = tape_of(m, row);
    const Tensor& mv = m.value();
    const Tensor& rv = row.value();
    require_rank2(mv, "add_row");
    if (rv.rank() != 2 || rv.rows() != 1 || rv.cols() != mv.cols()) {
        throw DimensionError("add_row: expected 1x" + std::to_string(mv.cols()) + " row, got " +
                             shape_string(rv.shape()));
    }
    Tensor out = mv;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv(0, j);
    return t.record(std::move(out), {m, row}, [](Tape& tp, std::size_t self) {
        const Tensor& g = tp.out_grad(self);
        if (Tensor* gm = in_grad(tp, self, 0))
            for (std::size_t i = 0; i < g.size(); ++i) (*gm)[i] += g[i];
        if (Tensor* gr = in_grad(tp, self, 1))
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) (*gr)(0, j) += g(i, j);
    });
}

Var mul_rows(Var m, Var col) {
    Tape& t = tape_of(m, col);
    const Tensor& mv = m.value();
    const Tensor& cv = col.value();
    require_rank2(mv, "mul_rows");
    if (cv.rank() != 2 || cv.cols() != 1 || cv.rows() != mv.rows()) {
        throw DimensionError("mul_rows: expected " + std::to_string(mv.rows()) + "x1 column, got " +
                             shape_string(cv.shape()));
    }
    Tensor out = mv;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= cv(i, 0);
    return t.record(std::move(out), {m, col}, [](Tape& tp, std::size_t self) {
        const Tensor& g = tp.out_grad(self);
        const Tensor& mv = in_value(tp, self, 0);
        const Tensor& cv = in_value(tp, self, 1);
        if (Tensor* gm = in_grad(tp, self, 0))
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) (*gm)(i, j) += g(i, j) * cv(i, 0);
        if (Tensor* gc = in_grad(tp, self, 1))
            for (std::size_t i = 0; i < g.rows(); ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < g.cols(); ++j) s += g(i, j) * mv(i, j);
                (*gc)(i, 0) += s;
            }
    });
}

Var mul_scalar(Var m, Var s) {
    Tape& t = tape_of(m, s);
    const double sv = s.value().item();
    Tensor out = m.value();
    for (auto& v : out.data()) v *= sv;
    return t.record(std::move(out), {m, s}, [](Tape& tp, std::size_t self) {
        const auto g = tp.out_grad(self).data();
        const auto mv = in_value(tp, self, 0).data();
        const double sv = in_value(tp, self, 1).item();
        if (Tensor* gm = in_grad(tp, self, 0))
            for (std::size_t i = 0; i < g.size(); ++i) (*gm)[i] += g[i] * sv;
        if (Tensor* gs = in_grad(tp, self, 1)) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * mv[i];
            (*gs)[0] += acc;
        }
    });
}

Var add_scalar(Var m, Var s) {
    Tape& t = tape_of(m, s);
    const double sv = s.value().item();
    Tensor out = m.value();
    for (auto& v : out.data()) v += sv;
    return t.record(std::move(out), {m, s}, [](Tape& tp, std::size_t self) {
        const auto g = tp.out_grad(self).data();
        if (Tensor* gm = in_grad(tp, self, 0))
            for (std::size_t i = 0; i < g.size(); ++i) (*gm)[i] += g[i];
        if (Tensor* gs = in_grad(tp, self, 1)) {
            double acc = 0.0;
            for (double v : g) acc += v;
            (*gs)[0] += acc;
        }
    });
}

namespace {

// Elementwise op whose local derivative is expressed through input x and output y.
template <class Fwd, class Deriv>
Var elementwise(Var a, Fwd fwd, Deriv deriv) {
    Tensor out(a.value().shape());
    const auto src = a.value().data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = fwd(src[i]);
    return a.tape().record(std::move(out), {a}, [deriv](Tape& tp, std::size_t self) {
        const auto g = tp.out_grad(self).data();
        const auto x = in_value(tp, self, 0).data();
        const auto y = tp.value(self).data();
        if (Tensor* ga = in_grad(tp, self, 0))
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * deriv(x[i], y[i]);
    });
}

}  // namespace

Var sigmoid(Var a) {
    return elementwise(a, [](double x) { return drfn::sigmoid(x); },
                       [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
    return elementwise(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var gelu(Var a) {
    return elementwise(a, [](double x) { return drfn::gelu(x); },
                       [](double x, double) { return drfn::gelu_derivative(x); });
}

Var exp(Var a) {
    return elementwise(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var square(Var a) {
    return elementwise(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var softmax_rows(Var a) {
    return a.tape().record(drfn::softmax_rows(a.value()), {a}, [](Tape& tp, std::size_t self) {
        Tensor* ga = in_grad(tp, self, 0);
        if (!ga) return;
        const Tensor& g = tp.out_grad(self);
        const Tensor& y = tp.value(self);
        for (std::size_t i = 0; i < y.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < y.cols(); ++j) (*ga)(i, j) += y(i, j) * (g(i, j) - dot);
        }
    });
}

Var logsumexp_rows(Var a) {
    const Tensor& x = a.value();
    require_rank2(x, "logsumexp_rows");
    Tensor out({x.rows(), 1});
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
        double s = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) s += std::exp(x(i, j) - mx);
        out(i, 0) = mx + std::log(s);
    }
    return a.tape().record(std::move(out), {a}, [](Tape& tp, std::size_t self) {
        Tensor* ga = in_grad(tp, self, 0);
        if (!ga) return;
        const Tensor& g = tp.out_grad(self);
        const Tensor& x = in_value(tp, self, 0);
        const Tensor& lse = tp.value(self);
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j) (*ga)(i, j) += g(i, 0) * std::exp(x(i, j) - lse(i, 0));
    });
}

Var diag(Var a) {
    const Tensor& x = a.value();
    require_rank2(x, "diag");
    if (x.rows() != x.cols()) throw DimensionError("diag: expected square matrix, got " + shape_string(x.shape()));
    Tensor out({x.rows(), 1});
    for (std::size_t i = 0; i < x.rows(); ++i) out(i, 0) = x(i, i);
    return a.tape().record(std::move(out), {a}, [](Tape& tp, std::size_t self) {
        const Tensor& g = tp.out_grad(self);
        if (Tensor* ga = in_grad(tp, self, 0))
            for (std::size_t i = 0; i < g.rows(); ++i) (*ga)(i, i) += g(i, 0);
    });
}

Var sum(Var a) {
    double s = 0.0;
    for (double v : a.value().data()) s += v;
    return a.tape().record(Tensor::scalar(s), {a}, [](Tape& tp, std::size_t self) {
        const double g = tp.out_grad(self)[0];
        if (Tensor* ga = in_grad(tp, self, 0))
            for (auto& v : ga->data()) v += g;
    });
}

Var mean(Var a) {
    const double n = static_cast<double>(a.value().size());
    if (n == 0) throw DimensionError("mean of empty tensor");
    return scale(sum(a), 1.0 / n);
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no operands");
    Tape& t = parts.front().tape();
    const std::size_t rows = parts.front().value().rows();
    std::size_t cols = 0;
    for (const Var& p : parts) {
        if (p.value().rows() != rows) {
            throw DimensionError("concat_cols: row counts disagree, " + shape_string(parts.front().value().shape()) +
                                 " vs " + shape_string(p.value().shape()));
        }
        cols += p.value().cols();
    }
    Tensor out({rows, cols});
    std::size_t offset = 0;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < v.cols(); ++j) out(i, offset + j) = v(i, j);
        offset += v.cols();
    }
    return t.record(std::move(out), parts, [](Tape& tp, std::size_t self) {
        const Tensor& g = tp.out_grad(self);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < tp.inputs(self).size(); ++k) {
            const std::size_t c = in_value(tp, self, k).cols();
            if (Tensor* gi = in_grad(tp, self, k))
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < c; ++j) (*gi)(i, j) += g(i, offset + j);
            offset += c;
        }
    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no operands");
    Tape& t = parts.front().tape();
    const std::size_t cols = parts.front().value().cols();
    std::size_t rows = 0;
    for (const Var& p : parts) {
        if (p.value().cols() != cols) {
            throw DimensionError("concat_rows: column counts disagree, " +
                                 shape_string(parts.front().value().shape()) + " vs " + shape_string(p.value().shape()));
        }
        rows += p.value().rows();
    }
    std::vector<double> data;
    data.reserve(rows * cols);
    for (const Var& p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
    return t.record(Tensor({rows, cols}, std::move(data)), parts, [](Tape& tp, std::size_t self) {
        const auto g = tp.out_grad(self).data();
        std::size_t offset = 0;
        for (std::size_t k = 0; k < tp.inputs(self).size(); ++k) {
            const std::size_t n = in_value(tp, self, k).size();
            if (Tensor* gi = in_grad(tp, self, k))
                for (std::size_t i = 0; i < n; ++i) (*gi)[i] += g[offset + i];
            offset += n;
        }
    });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
    const Tensor& x = a.value();
    require_rank2(x, "slice_rows");
    if (begin + count > x.rows()) {
        throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                             ") out of range for " + shape_string(x.shape()));
    }
    const std::size_t c = x.cols();
    std::vector<double> data(x.data().begin() + static_cast<std::ptrdiff_t>(begin * c),
                             x.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * c));
    return a.tape().record(Tensor({count, c}, std::move(data)), {a}, [begin](Tape& tp, std::size_t self) {
        const auto g = tp.out_grad(self).data();
        const std::size_t c = in_value(tp, self, 0).cols();
        if (Tensor* ga = in_grad(tp, self, 0))
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[begin * c + i] += g[i];
    });
}

Var normalize_rows(Var a) {
    const Tensor& x = a.value();
    require_rank2(x, "normalize_rows");
    Tensor out({x.rows(), x.cols()});
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double n2 = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) n2 += x(i, j) * x(i, j);
        if (n2 == 0.0) continue;
        const double inv = 1.0 / std::sqrt(n2);
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) * inv;
    }
    return a.tape().record(std::move(out), {a}, [](Tape& tp, std::size_t self) {
        Tensor* ga = in_grad(tp, self, 0);
        if (!ga) return;
        const Tensor& g = tp.out_grad(self);
        const Tensor& x = in_value(tp, self, 0);
        const Tensor& y = tp.value(self);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            double n2 = 0.0, dot = 0.0;
            for (std::size_t j = 0; j < x.cols(); ++j) {
                n2 += x(i, j) * x(i, j);
                dot += y(i, j) * g(i, j);
            }
            if (n2 == 0.0) continue;
            const double inv = 1.0 / std::sqrt(n2);
            for (std::size_t j = 0; j < x.cols(); ++j) (*ga)(i, j) += (g(i, j) - y(i, j) * dot) * inv;
        }
    });
}

Var pairwise_l1(Var u, Var w) {
    Tape& t = tape_of(u, w);
    return t.record(drfn::pairwise_l1(u.value(), w.value()), {u, w}, [](Tape& tp, std::size_t self) {
        const Tensor& g = tp.out_grad(self);
        const Tensor& uv = in_value(tp, self, 0);
        const Tensor& wv = in_value(tp, self, 1);
        Tensor* gu = in_grad(tp, self, 0);
        Tensor* gw = in_grad(tp, self, 1);
        const std::size_t f = uv.cols();
        for (std::size_t i = 0; i < uv.rows(); ++i)
            for (std::size_t j = 0; j < wv.rows(); ++j) {
                const double gij = g(i, j);
                if (gij == 0.0) continue;
                for (std::size_t k = 0; k < f; ++k) {
                    const double d = uv(i, k) - wv(j, k);
                    const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                    if (gu) (*gu)(i, k) += gij * s;
                    if (gw) (*gw)(j, k) -= gij * s;
                }
            }
    });
}

Var bilinear(Var hn, Var hm, Var t3) {
    Tape& t = tape_of(hn, hm);
    tape_of(hn, t3);
    const Tensor& n = hn.value();
    const Tensor& m = hm.value();
    const Tensor& w = t3.value();
    require_rank2(n, "bilinear");
    require_rank2(m, "bilinear");
    if (w.rank() != 3 || w.shape()[0] != n.cols() || w.shape()[1] != m.cols() || n.rows() != m.rows()) {
        throw DimensionError("bilinear: hn " + shape_string(n.shape()) + ", hm " + shape_string(m.shape()) +
                             " incompatible with tensor " + shape_string(w.shape()));
    }
    // Viewing t as an (L·L')×K matrix W, out(i,:) = vec(hn_i ⊗ hm_i)·W.
    const std::size_t rows = n.rows(), L = n.cols(), Lp = m.cols(), K = w.shape()[2];
    Tensor out({rows, K});
    const double* pw = w.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < rows; ++i) {
        double* orow = po + i * K;
        for (std::size_t p = 0; p < L; ++p) {
            const double np = n(i, p);
            if (np == 0.0) continue;
            for (std::size_t q = 0; q < Lp; ++q) {
                const double c = np * m(i, q);
                const double* slice = pw + (p * Lp + q) * K;
                for (std::size_t k = 0; k < K; ++k) orow[k] += slice[k] * c;
            }
        }
    }
    return t.record(std::move(out), {hn, hm, t3}, [](Tape& tp, std::size_t self) {
        const Tensor& g = tp.out_grad(self);
        const Tensor& n = in_value(tp, self, 0);
        const Tensor& m = in_value(tp, self, 1);
        const Tensor& w = in_value(tp, self, 2);
        Tensor* gn = in_grad(tp, self, 0);
        Tensor* gm = in_grad(tp, self, 1);
        Tensor* gw = in_grad(tp, self, 2);
        const std::size_t rows = n.rows(), L = n.cols(), Lp = m.cols(), K = w.shape()[2], PQ = L * Lp;
        const double* pg = g.data().data();
        if (gn || gm) {
            // go(i,:) = g(i,:)·Wᵀ, the gradient with respect to the outer product.
            Tensor wt({K, PQ});
            const double* pw = w.data().data();
            for (std::size_t pq = 0; pq < PQ; ++pq)
                for (std::size_t k = 0; k < K; ++k) wt[k * PQ + pq] = pw[pq * K + k];
            std::vector<double> go(PQ);
            for (std::size_t i = 0; i < rows; ++i) {
                std::fill(go.begin(), go.end(), 0.0);
                for (std::size_t k = 0; k < K; ++k) {
                    const double gik = pg[i * K + k];
                    if (gik == 0.0) continue;
                    const double* src = wt.data().data() + k * PQ;
                    for (std::size_t pq = 0; pq < PQ; ++pq) go[pq] += gik * src[pq];
                }
                for (std::size_t p = 0; p < L; ++p) {
                    const double* gorow = go.data() + p * Lp;
                    if (gn) {
                        double s = 0.0;
                        for (std::size_t q = 0; q < Lp; ++q) s += gorow[q] * m(i, q);
                        (*gn)(i, p) += s;
                    }
                    if (gm) {
                        const double np = n(i, p);
                        for (std::size_t q = 0; q < Lp; ++q) (*gm)(i, q) += gorow[q] * np;
                    }
                }
            }
        }
        if (gw) {
            double* pgw = gw->data().data();
            for (std::size_t i = 0; i < rows; ++i) {
                const double* grow = pg + i * K;
                for (std::size_t p = 0; p < L; ++p) {
                    const double np = n(i, p);
                    if (np == 0.0) continue;
                    for (std::size_t q = 0; q < Lp; ++q) {
                        const double c = np * m(i, q);
                        double* gslice = pgw + (p * Lp + q) * K;
                        for (std::size_t k = 0; k < K; ++k) gslice[k] += grow[k] * c;
                    }
                }
            }
        }
    });
}

Var fill_rows(Var base, const std::vector<bool>& use_row_param, Var row_param) {
    Tape& t = tape_of(base, row_param);
    const Tensor& b = base.value();
    const Tensor& r = row_param.value();
    require_rank2(b, "fill_rows");
    if (use_row_param.size() != b.rows() || r.rank() != 2 || r.rows() != 1 || r.cols() != b.cols()) {
        throw DimensionError("fill_rows: base " + shape_string(b.shape()) + ", row " + shape_string(r.shape()) +
                             ", mask length " + std::to_string(use_row_param.size()));
    }
    Tensor out = b;
    for (std::size_t i = 0; i < b.rows(); ++i)
        if (use_row_param[i])
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) = r(0, j);
    return t.record(std::move(out), {base, row_param}, [use_row_param](Tape& tp, std::size_t self) {
        const Tensor& g = tp.out_grad(self);
        Tensor* gb = in_grad(tp, self, 0);
        Tensor* gr = in_grad(tp, self, 1);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) {
                if (use_row_param[i]) {
                    if (gr) (*gr)(0, j) += g(i, j);
                } else if (gb) {
                    (*gb)(i, j) += g(i, j);
                }
            }
    });
}

}  // namespace drfn::ad

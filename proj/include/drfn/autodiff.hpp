#pragma once

#include "drfn/params.hpp"
#include "drfn/tensor.hpp"

#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

namespace drfn::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    Tape& tape() const { return *tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Records one forward pass. Nodes are appended in evaluation order, which is a
/// topological order, so backward simply walks the node list in reverse.
/// A tape is single-use: build, call backward() once, discard.
class Tape {
public:
    /// Propagates the gradient of node `self` into its inputs' gradient buffers.
    using Backward = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var leaf(Tensor value);
    /// One node per Parameter per tape; repeated uses share it so gradients add up.
    Var param(Parameter& p);

    Var record(Tensor value, std::initializer_list<Var> inputs, Backward fn);
    Var record(Tensor value, std::span<const Var> inputs, Backward fn);

    /// Seeds d(loss)/d(loss) = 1 and accumulates into every reachable node. Parameter
    /// gradients are added into Parameter::grad.
    void backward(Var loss);

    const Tensor& value(std::size_t id) const;
    Tensor grad(Var v) const;

    // For use inside Backward callbacks.
    const Tensor& out_grad(std::size_t self) const { return nodes_[self].grad; }
    const std::vector<std::size_t>& inputs(std::size_t self) const { return nodes_[self].inputs; }
    /// Gradient buffer of node `id`, allocated on first use; nullptr for constants.
    Tensor* grad_buffer(std::size_t id);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Parameter* param = nullptr;
        Tensor grad;
        bool requires_grad = false;
        bool has_grad = false;
        std::vector<std::size_t> inputs;
        Backward backward;
    };

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, std::size_t> param_nodes_;
    bool consumed_ = false;
};

// Elementwise and linear algebra ops. Binary elementwise ops require equal shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var neg(Var a);
Var matmul(Var a, Var b);
Var transpose(Var a);

/// m (n×k) plus a 1×k row added to every row.
Var add_row(Var m, Var row);
/// Row i of m scaled by col(i, 0).
Var mul_rows(Var m, Var col);
/// Every entry of m times the 1×1 value s.
Var mul_scalar(Var m, Var s);
/// Every entry of m plus the 1×1 value s.
Var add_scalar(Var m, Var s);

Var sigmoid(Var a);
Var tanh(Var a);
Var gelu(Var a);
Var exp(Var a);
Var square(Var a);

Var softmax_rows(Var a);
/// n×1 column of log Σ_j exp(a_ij).
Var logsumexp_rows(Var a);
/// Diagonal of a square matrix as an n×1 column.
Var diag(Var a);
Var sum(Var a);
Var mean(Var a);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t begin, std::size_t count);

/// Rows scaled to unit L2 norm. A zero row stays zero and passes no gradient.
Var normalize_rows(Var a);
/// out(i,j) = Σ_f |u(i,f) − w(j,f)|, subgradient sign(0) = 0.
Var pairwise_l1(Var u, Var w);
/// out(i,k) = Σ_{p,q} t(p,q,k)·hn(i,p)·hm(i,q) for a rank-3 t of shape {L, L', K}.
Var bilinear(Var hn, Var hm, Var t);
/// Rows flagged in `use_row_param` are replaced by the 1×n `row_param`.
Var fill_rows(Var base, const std::vector<bool>& use_row_param, Var row_param);

}  // namespace drfn::ad

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aart/tensor.hpp"

namespace aart {

using NodeId = std::size_t;

// Leaf id -> d(scalar output)/d(leaf), same shape as the leaf.
using GradientMap = std::map<NodeId, Tensor>;

enum class OpKind : std::uint8_t {
    Leaf,
    MatMul,
    Transpose,
    Add,
    Mul,
    Scale,
    RowSoftmax,
    Sigmoid,
    Relu,
    MeanAxis,
    Concat,
    FrobeniusNorm,
    L2Norm,
    Bce,
};

const char* op_name(OpKind op);

// Reverse-mode tape over float32 tensors, rank <= 3. Ops evaluate eagerly:
// calling an op appends a node, computes its value, and returns the node id,
// so the graph always holds every intermediate needed for backward().
//
// The op vocabulary is fixed; the model is a fixed architecture and every op
// has a gradient test. Forward values are float32 with double-precision
// reductions; backward adjoints accumulate in double and gradients are cast
// to float32 at the end.
//
// A Graph is confined to one thread. Independent graphs may run in parallel.
class Graph {
public:
    struct Node {
        OpKind op = OpKind::Leaf;
        std::vector<NodeId> inputs;
        Tensor value;
        bool requires_grad = false;
        // Double-precision copy of a scalar-shaped value, kept before the
        // float32 cast so losses can be read without the cast's rounding.
        double scalar64 = 0.0;
        bool has_scalar64 = false;
        // op attributes
        double scale_factor = 0.0;  // Scale
        std::size_t axis = 0;       // MeanAxis, Concat
        Tensor labels;              // Bce target vector (constant)
    };

    // Leaves. Parameter and input leaves use requires_grad=true; constants
    // (labels, selection matrices, perturbations) use constant().
    NodeId leaf(Tensor value, bool requires_grad);
    NodeId constant(Tensor value) { return leaf(std::move(value), false); }

    // a @ b. Rank-1 operands are treated as a row vector (left) or column
    // vector (right); the singleton axis is dropped from the result, so
    // vec @ vec is a rank-0 dot product.
    NodeId matmul(NodeId a, NodeId b);
    NodeId transpose(NodeId a);
    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double factor);
    // Softmax over the last axis of a rank-1 or rank-2 tensor, with row-max
    // subtraction for stability.
    NodeId row_softmax(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId relu(NodeId a);
    // Mean over one axis; the axis is removed (rank-1 input gives a scalar).
    NodeId mean_axis(NodeId a, std::size_t axis);
    NodeId concat(const std::vector<NodeId>& parts, std::size_t axis);
    // sqrt of the sum of squared entries of a rank-2 tensor.
    NodeId frobenius_norm(NodeId a);
    // Global L2 norm of a tensor of any rank.
    NodeId l2_norm(NodeId a);
    // Mean over classes of -[y log p + (1-y) log(1-p)], p clamped to
    // [1e-7, 1-1e-7]. labels is a constant, same shape as probs.
    NodeId bce(NodeId probs, Tensor labels);

    const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
    const Node& node(NodeId id) const { return nodes_.at(id); }
    std::size_t size() const { return nodes_.size(); }

    // Double-precision value of a scalar-shaped node. Reduction ops record
    // their 64-bit accumulator and scalar elementwise ops propagate it;
    // falls back to the float32 value when no shadow was recorded.
    double scalar_value(NodeId id) const;

    // Reverse-mode gradients of a scalar-shaped output node with respect to
    // the requested leaves. Every requested leaf appears in the result
    // (zero tensor when the output does not depend on it); non-requested
    // leaves are absent.
    GradientMap backward(NodeId output, const std::vector<NodeId>& wrt) const;

    static constexpr double kBceClamp = 1e-7;

private:
    NodeId push(Node n, const char* op);
    const Tensor& in(const Node& n, std::size_t i) const { return nodes_[n.inputs[i]].value; }

    std::vector<Node> nodes_;
};

}  // namespace aart

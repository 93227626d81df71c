#include "aart/graph.hpp"

#include <algorithm>
#include <cmath>

namespace aart {

namespace {

// Normalized 2-D view of a rank-1/rank-2 tensor for matmul. Rank-1 tensors
// act as a row vector on the left and a column vector on the right; the
// flat row-major layout is unchanged either way.
struct View2d {
    std::size_t rows, cols;
};

View2d as_left(const Tensor& t) {
    return t.rank() == 1 ? View2d{1, t.dim(0)} : View2d{t.dim(0), t.dim(1)};
}

View2d as_right(const Tensor& t) {
    return t.rank() == 1 ? View2d{t.dim(0), 1} : View2d{t.dim(0), t.dim(1)};
}

// pre * extent * post decomposition around one axis, valid for rank 1..3.
struct AxisSplit {
    std::size_t pre, extent, post;
};

AxisSplit split_axis(const std::vector<std::size_t>& shape, std::size_t axis) {
    AxisSplit s{1, shape[axis], 1};
    for (std::size_t i = 0; i < axis; ++i) s.pre *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.post *= shape[i];
    return s;
}

double shadow_or_value(const Graph::Node& n) {
    return n.has_scalar64 ? n.scalar64 : static_cast<double>(n.value.at(0));
}

}  // namespace

const char* op_name(OpKind op) {
    switch (op) {
        case OpKind::Leaf: return "leaf";
        case OpKind::MatMul: return "matmul";
        case OpKind::Transpose: return "transpose";
        case OpKind::Add: return "add";
        case OpKind::Mul: return "mul";
        case OpKind::Scale: return "scale";
        case OpKind::RowSoftmax: return "row_softmax";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Relu: return "relu";
        case OpKind::MeanAxis: return "mean_axis";
        case OpKind::Concat: return "concat";
        case OpKind::FrobeniusNorm: return "frobenius_norm";
        case OpKind::L2Norm: return "l2_norm";
        case OpKind::Bce: return "bce";
    }
    return "?";
}

NodeId Graph::push(Node n, const char* op) {
    if (!n.value.all_finite()) {
        throw NumericError(std::string(op) + " produced a non-finite value");
    }
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

double Graph::scalar_value(NodeId id) const {
    const Node& n = nodes_.at(id);
    if (n.value.numel() != 1) {
        throw ShapeError("scalar_value: node is not scalar-shaped, got " +
                         n.value.shape_string());
    }
    return shadow_or_value(n);
}

NodeId Graph::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.op = OpKind::Leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (n.value.numel() == 1) {
        n.scalar64 = static_cast<double>(n.value.at(0));
        n.has_scalar64 = true;
    }
    return push(std::move(n), "leaf");
}

NodeId Graph::matmul(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.rank() < 1 || A.rank() > 2 || B.rank() < 1 || B.rank() > 2) {
        throw ShapeError("matmul: operands must be rank 1 or 2, got " + A.shape_string() +
                         " and " + B.shape_string());
    }
    const View2d va = as_left(A), vb = as_right(B);
    if (va.cols != vb.rows) {
        throw ShapeError("matmul: incompatible shapes " + A.shape_string() + " and " +
                         B.shape_string());
    }

    std::vector<std::size_t> out_shape;
    if (A.rank() == 2) out_shape.push_back(va.rows);
    if (B.rank() == 2) out_shape.push_back(vb.cols);
    Tensor out(out_shape);

    const float* pa = A.data();
    const float* pb = B.data();
    float* pc = out.data();
    const std::size_t n = va.rows, m = va.cols, p = vb.cols;

    Node node;
    node.op = OpKind::MatMul;
    node.inputs = {a, b};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < m; ++k)
                acc += static_cast<double>(pa[i * m + k]) * static_cast<double>(pb[k * p + j]);
            pc[i * p + j] = static_cast<float>(acc);
            if (out_shape.empty()) {
                node.scalar64 = acc;
                node.has_scalar64 = true;
            }
        }
    }
    node.value = std::move(out);
    node.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(node), "matmul");
}

NodeId Graph::transpose(NodeId a) {
    const Tensor& A = value(a);
    if (A.rank() != 2) {
        throw ShapeError("transpose: expected rank 2, got " + A.shape_string());
    }
    const std::size_t n = A.dim(0), m = A.dim(1);
    Tensor out({m, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out.at2(j, i) = A.at2(i, j);

    Node node;
    node.op = OpKind::Transpose;
    node.inputs = {a};
    node.value = std::move(out);
    node.requires_grad = nodes_[a].requires_grad;
    return push(std::move(node), "transpose");
}

NodeId Graph::add(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B)) {
        throw ShapeError("add: shape mismatch " + A.shape_string() + " vs " + B.shape_string());
    }
    Tensor out(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) out.at(i) = A.at(i) + B.at(i);

    Node node;
    node.op = OpKind::Add;
    node.inputs = {a, b};
    node.value = std::move(out);
    if (node.value.numel() == 1) {
        node.scalar64 = shadow_or_value(nodes_[a]) + shadow_or_value(nodes_[b]);
        node.has_scalar64 = true;
        node.value.at(0) = static_cast<float>(node.scalar64);
    }
    node.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(node), "add");
}

NodeId Graph::mul(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B)) {
        throw ShapeError("mul: shape mismatch " + A.shape_string() + " vs " + B.shape_string());
    }
    Tensor out(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) out.at(i) = A.at(i) * B.at(i);

    Node node;
    node.op = OpKind::Mul;
    node.inputs = {a, b};
    node.value = std::move(out);
    if (node.value.numel() == 1) {
        node.scalar64 = shadow_or_value(nodes_[a]) * shadow_or_value(nodes_[b]);
        node.has_scalar64 = true;
        node.value.at(0) = static_cast<float>(node.scalar64);
    }
    node.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(node), "mul");
}

NodeId Graph::scale(NodeId a, double factor) {
    const Tensor& A = value(a);
    Tensor out(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i)
        out.at(i) = static_cast<float>(static_cast<double>(A.at(i)) * factor);

    Node node;
    node.op = OpKind::Scale;
    node.inputs = {a};
    node.value = std::move(out);
    node.scale_factor = factor;
    if (node.value.numel() == 1) {
        node.scalar64 = shadow_or_value(nodes_[a]) * factor;
        node.has_scalar64 = true;
        node.value.at(0) = static_cast<float>(node.scalar64);
    }
    node.requires_grad = nodes_[a].requires_grad;
    return push(std::move(node), "scale");
}

NodeId Graph::row_softmax(NodeId a) {
    const Tensor& A = value(a);
    if (A.rank() < 1 || A.rank() > 2) {
        throw ShapeError("row_softmax: expected rank 1 or 2, got " + A.shape_string());
    }
    const std::size_t rows = A.rank() == 2 ? A.dim(0) : 1;
    const std::size_t cols = A.rank() == 2 ? A.dim(1) : A.dim(0);
    Tensor out(A.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const float* x = A.data() + r * cols;
        float* y = out.data() + r * cols;
        float row_max = x[0];
        for (std::size_t j = 1; j < cols; ++j) row_max = std::max(row_max, x[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < cols; ++j)
            denom += std::exp(static_cast<double>(x[j]) - static_cast<double>(row_max));
        for (std::size_t j = 0; j < cols; ++j) {
            const double e = std::exp(static_cast<double>(x[j]) - static_cast<double>(row_max));
            y[j] = static_cast<float>(e / denom);
        }
    }

    Node node;
    node.op = OpKind::RowSoftmax;
    node.inputs = {a};
    node.value = std::move(out);
    node.requires_grad = nodes_[a].requires_grad;
    return push(std::move(node), "row_softmax");
}

NodeId Graph::sigmoid(NodeId a) {
    const Tensor& A = value(a);
    Tensor out(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) {
        out.at(i) = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(A.at(i)))));
    }
    Node node;
    node.op = OpKind::Sigmoid;
    node.inputs = {a};
    node.value = std::move(out);
    if (node.value.numel() == 1) {
        node.scalar64 = 1.0 / (1.0 + std::exp(-shadow_or_value(nodes_[a])));
        node.has_scalar64 = true;
        node.value.at(0) = static_cast<float>(node.scalar64);
    }
    node.requires_grad = nodes_[a].requires_grad;
    return push(std::move(node), "sigmoid");
}

NodeId Graph::relu(NodeId a) {
    const Tensor& A = value(a);
    Tensor out(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) out.at(i) = A.at(i) > 0.0f ? A.at(i) : 0.0f;

    Node node;
    node.op = OpKind::Relu;
    node.inputs = {a};
    node.value = std::move(out);
    if (node.value.numel() == 1) {
        const double x = shadow_or_value(nodes_[a]);
        node.scalar64 = x > 0.0 ? x : 0.0;
        node.has_scalar64 = true;
        node.value.at(0) = static_cast<float>(node.scalar64);
    }
    node.requires_grad = nodes_[a].requires_grad;
    return push(std::move(node), "relu");
}

NodeId Graph::mean_axis(NodeId a, std::size_t axis) {
    const Tensor& A = value(a);
    if (axis >= A.rank()) {
        throw ShapeError("mean_axis: axis " + std::to_string(axis) + " out of range for " +
                         A.shape_string());
    }
    const AxisSplit s = split_axis(A.shape(), axis);
    std::vector<std::size_t> out_shape;
    for (std::size_t i = 0; i < A.rank(); ++i)
        if (i != axis) out_shape.push_back(A.dim(i));
    Tensor out(out_shape);
    Node node;
    node.op = OpKind::MeanAxis;
    node.inputs = {a};
    for (std::size_t p = 0; p < s.pre; ++p) {
        for (std::size_t q = 0; q < s.post; ++q) {
            double acc = 0.0;
            for (std::size_t k = 0; k < s.extent; ++k)
                acc += static_cast<double>(A.at((p * s.extent + k) * s.post + q));
            const double mean = acc / static_cast<double>(s.extent);
            out.at(p * s.post + q) = static_cast<float>(mean);
            if (out_shape.empty()) {
                node.scalar64 = mean;
                node.has_scalar64 = true;
            }
        }
    }
    node.value = std::move(out);
    node.axis = axis;
    node.requires_grad = nodes_[a].requires_grad;
    return push(std::move(node), "mean_axis");
}

NodeId Graph::concat(const std::vector<NodeId>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const Tensor& first = value(parts[0]);
    if (axis >= first.rank()) {
        throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for " +
                         first.shape_string());
    }
    std::size_t total = 0;
    for (NodeId id : parts) {
        const Tensor& t = value(id);
        if (t.rank() != first.rank()) {
            throw ShapeError("concat: rank mismatch " + t.shape_string() + " vs " +
                             first.shape_string());
        }
        for (std::size_t i = 0; i < t.rank(); ++i) {
            if (i != axis && t.dim(i) != first.dim(i)) {
                throw ShapeError("concat: extent mismatch " + t.shape_string() + " vs " +
                                 first.shape_string());
            }
        }
        total += t.dim(axis);
    }
    std::vector<std::size_t> out_shape = first.shape();
    out_shape[axis] = total;
    Tensor out(out_shape);
    const AxisSplit so = split_axis(out_shape, axis);
    std::size_t offset = 0;
    for (NodeId id : parts) {
        const Tensor& t = value(id);
        const AxisSplit si = split_axis(t.shape(), axis);
        for (std::size_t p = 0; p < si.pre; ++p)
            for (std::size_t k = 0; k < si.extent; ++k)
                for (std::size_t q = 0; q < si.post; ++q)
                    out.at((p * so.extent + offset + k) * so.post + q) =
                        t.at((p * si.extent + k) * si.post + q);
        offset += si.extent;
    }

    Node node;
    node.op = OpKind::Concat;
    node.inputs = parts;
    node.value = std::move(out);
    node.axis = axis;
    for (NodeId id : parts) node.requires_grad = node.requires_grad || nodes_[id].requires_grad;
    return push(std::move(node), "concat");
}

NodeId Graph::frobenius_norm(NodeId a) {
    const Tensor& A = value(a);
    if (A.rank() != 2) {
        throw ShapeError("frobenius_norm: expected rank 2, got " + A.shape_string());
    }
    Node node;
    node.op = OpKind::FrobeniusNorm;
    node.inputs = {a};
    node.scalar64 = A.l2_norm();
    node.has_scalar64 = true;
    node.value = Tensor::scalar(static_cast<float>(node.scalar64));
    node.requires_grad = nodes_[a].requires_grad;
    return push(std::move(node), "frobenius_norm");
}

NodeId Graph::l2_norm(NodeId a) {
    const Tensor& A = value(a);
    Node node;
    node.op = OpKind::L2Norm;
    node.inputs = {a};
    node.scalar64 = A.l2_norm();
    node.has_scalar64 = true;
    node.value = Tensor::scalar(static_cast<float>(node.scalar64));
    node.requires_grad = nodes_[a].requires_grad;
    return push(std::move(node), "l2_norm");
}

NodeId Graph::bce(NodeId probs, Tensor labels) {
    const Tensor& P = value(probs);
    if (!P.same_shape(labels)) {
        throw ShapeError("bce: probs " + P.shape_string() + " vs labels " +
                         labels.shape_string());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < P.numel(); ++i) {
        const double p =
            std::min(std::max(static_cast<double>(P.at(i)), kBceClamp), 1.0 - kBceClamp);
        const double y = static_cast<double>(labels.at(i));
        acc += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
    Node node;
    node.op = OpKind::Bce;
    node.inputs = {probs};
    node.scalar64 = acc / static_cast<double>(P.numel());
    node.has_scalar64 = true;
    node.value = Tensor::scalar(static_cast<float>(node.scalar64));
    node.labels = std::move(labels);
    node.requires_grad = nodes_[probs].requires_grad;
    return push(std::move(node), "bce");
}

GradientMap Graph::backward(NodeId output, const std::vector<NodeId>& wrt) const {
    if (output >= nodes_.size()) throw ShapeError("backward: unknown output node");
    if (nodes_[output].value.numel() != 1) {
        throw ShapeError("backward: output must be scalar-shaped, got " +
                         nodes_[output].value.shape_string());
    }

    // Mark nodes that depend on a requested leaf; adjoints are only
    // propagated along those paths.
    std::vector<char> relevant(nodes_.size(), 0);
    for (NodeId id : wrt) {
        if (id >= nodes_.size() || nodes_[id].op != OpKind::Leaf) {
            throw ShapeError("backward: wrt id " + std::to_string(id) + " is not a leaf");
        }
        relevant[id] = 1;
    }
    for (NodeId i = 0; i < nodes_.size(); ++i) {
        for (NodeId in_id : nodes_[i].inputs) {
            if (relevant[in_id]) {
                relevant[i] = 1;
                break;
            }
        }
    }

    std::vector<std::vector<double>> adj(nodes_.size());
    auto touch = [&](NodeId id) -> std::vector<double>& {
        if (adj[id].empty()) adj[id].assign(nodes_[id].value.numel(), 0.0);
        return adj[id];
    };
    touch(output)[0] = 1.0;

    for (NodeId id = output + 1; id-- > 0;) {
        const Node& n = nodes_[id];
        if (adj[id].empty() || !relevant[id] || n.op == OpKind::Leaf) continue;
        const std::vector<double>& u = adj[id];

        switch (n.op) {
            case OpKind::MatMul: {
                const Tensor& A = in(n, 0);
                const Tensor& B = in(n, 1);
                const View2d va = as_left(A), vb = as_right(B);
                const std::size_t nn = va.rows, m = va.cols, p = vb.cols;
                if (relevant[n.inputs[0]]) {
                    std::vector<double>& da = touch(n.inputs[0]);
                    for (std::size_t i = 0; i < nn; ++i)
                        for (std::size_t k = 0; k < m; ++k) {
                            double acc = 0.0;
                            for (std::size_t j = 0; j < p; ++j)
                                acc += u[i * p + j] * static_cast<double>(B.at(k * p + j));
                            da[i * m + k] += acc;
                        }
                }
                if (relevant[n.inputs[1]]) {
                    std::vector<double>& db = touch(n.inputs[1]);
                    for (std::size_t i = 0; i < nn; ++i)
                        for (std::size_t k = 0; k < m; ++k) {
                            const double aik = static_cast<double>(A.at(i * m + k));
                            for (std::size_t j = 0; j < p; ++j)
                                db[k * p + j] += aik * u[i * p + j];
                        }
                }
                break;
            }
            case OpKind::Transpose: {
                if (!relevant[n.inputs[0]]) break;
                const Tensor& A = in(n, 0);
                const std::size_t rows = A.dim(0), cols = A.dim(1);
                std::vector<double>& da = touch(n.inputs[0]);
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < cols; ++j)
                        da[i * cols + j] += u[j * rows + i];
                break;
            }
            case OpKind::Add: {
                for (int side = 0; side < 2; ++side) {
                    if (!relevant[n.inputs[side]]) continue;
                    std::vector<double>& d = touch(n.inputs[side]);
                    for (std::size_t i = 0; i < u.size(); ++i) d[i] += u[i];
                }
                break;
            }
            case OpKind::Mul: {
                const Tensor& A = in(n, 0);
                const Tensor& B = in(n, 1);
                if (relevant[n.inputs[0]]) {
                    std::vector<double>& da = touch(n.inputs[0]);
                    for (std::size_t i = 0; i < u.size(); ++i)
                        da[i] += u[i] * static_cast<double>(B.at(i));
                }
                if (relevant[n.inputs[1]]) {
                    std::vector<double>& db = touch(n.inputs[1]);
                    for (std::size_t i = 0; i < u.size(); ++i)
                        db[i] += u[i] * static_cast<double>(A.at(i));
                }
                break;
            }
            case OpKind::Scale: {
                if (!relevant[n.inputs[0]]) break;
                std::vector<double>& da = touch(n.inputs[0]);
                for (std::size_t i = 0; i < u.size(); ++i) da[i] += u[i] * n.scale_factor;
                break;
            }
            case OpKind::RowSoftmax: {
                if (!relevant[n.inputs[0]]) break;
                const Tensor& Y = n.value;
                const std::size_t rows = Y.rank() == 2 ? Y.dim(0) : 1;
                const std::size_t cols = Y.rank() == 2 ? Y.dim(1) : Y.dim(0);
                std::vector<double>& da = touch(n.inputs[0]);
                for (std::size_t r = 0; r < rows; ++r) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < cols; ++j)
                        dot += u[r * cols + j] * static_cast<double>(Y.at(r * cols + j));
                    for (std::size_t j = 0; j < cols; ++j) {
                        const double y = static_cast<double>(Y.at(r * cols + j));
                        da[r * cols + j] += y * (u[r * cols + j] - dot);
                    }
                }
                break;
            }
            case OpKind::Sigmoid: {
                if (!relevant[n.inputs[0]]) break;
                std::vector<double>& da = touch(n.inputs[0]);
                for (std::size_t i = 0; i < u.size(); ++i) {
                    const double y = static_cast<double>(n.value.at(i));
                    da[i] += u[i] * y * (1.0 - y);
                }
                break;
            }
            case OpKind::Relu: {
                if (!relevant[n.inputs[0]]) break;
                const Tensor& X = in(n, 0);
                std::vector<double>& da = touch(n.inputs[0]);
                for (std::size_t i = 0; i < u.size(); ++i)
                    if (X.at(i) > 0.0f) da[i] += u[i];
                break;
            }
            case OpKind::MeanAxis: {
                if (!relevant[n.inputs[0]]) break;
                const Tensor& X = in(n, 0);
                const AxisSplit s = split_axis(X.shape(), n.axis);
                std::vector<double>& da = touch(n.inputs[0]);
                const double inv = 1.0 / static_cast<double>(s.extent);
                for (std::size_t p = 0; p < s.pre; ++p)
                    for (std::size_t q = 0; q < s.post; ++q) {
                        const double g = u[p * s.post + q] * inv;
                        for (std::size_t k = 0; k < s.extent; ++k)
                            da[(p * s.extent + k) * s.post + q] += g;
                    }
                break;
            }
            case OpKind::Concat: {
                const AxisSplit so = split_axis(n.value.shape(), n.axis);
                std::size_t offset = 0;
                for (NodeId part : n.inputs) {
                    const Tensor& t = nodes_[part].value;
                    const AxisSplit si = split_axis(t.shape(), n.axis);
                    if (relevant[part]) {
                        std::vector<double>& d = touch(part);
                        for (std::size_t p = 0; p < si.pre; ++p)
                            for (std::size_t k = 0; k < si.extent; ++k)
                                for (std::size_t q = 0; q < si.post; ++q)
                                    d[(p * si.extent + k) * si.post + q] +=
                                        u[(p * so.extent + offset + k) * so.post + q];
                    }
                    offset += si.extent;
                }
                break;
            }
            case OpKind::FrobeniusNorm:
            case OpKind::L2Norm: {
                if (!relevant[n.inputs[0]]) break;
                const double norm = static_cast<double>(n.value.at(0));
                if (norm < 1e-12) break;  // subgradient 0 at the kink
                const Tensor& X = in(n, 0);
                std::vector<double>& da = touch(n.inputs[0]);
                const double g = u[0] / norm;
                for (std::size_t i = 0; i < X.numel(); ++i)
                    da[i] += g * static_cast<double>(X.at(i));
                break;
            }
            case OpKind::Bce: {
                if (!relevant[n.inputs[0]]) break;
                const Tensor& P = in(n, 0);
                std::vector<double>& da = touch(n.inputs[0]);
                const double inv = u[0] / static_cast<double>(P.numel());
                for (std::size_t i = 0; i < P.numel(); ++i) {
                    const double p = static_cast<double>(P.at(i));
                    if (p < kBceClamp || p > 1.0 - kBceClamp) continue;  // clamp is flat
                    const double y = static_cast<double>(n.labels.at(i));
                    da[i] += inv * (-y / p + (1.0 - y) / (1.0 - p));
                }
                break;
            }
            case OpKind::Leaf:
                break;
        }
    }

    GradientMap result;
    for (NodeId id : wrt) {
        Tensor g(nodes_[id].value.shape());
        if (!adj[id].empty()) {
            for (std::size_t i = 0; i < g.numel(); ++i)
                g.at(i) = static_cast<float>(adj[id][i]);
        }
        result.emplace(id, std::move(g));
    }
    return result;
}

}  // namespace aart

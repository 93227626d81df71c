#pragma once

#include <functional>
#include <vector>

#include "aart/graph.hpp"

namespace aart {

struct BuiltLoss {
    NodeId loss = 0;
    std::vector<NodeId> leaves;  // aligned with the tensor list passed to the builder
};

// Rebuildable description of a scalar loss: the builder adds leaves for the
// given tensors (in order) and returns the loss node.
using LossBuilder = std::function<BuiltLoss(Graph&, const std::vector<Tensor>&)>;

// Compares reverse-mode gradients against central finite differences with the
// given step, over every coordinate of the selected leaves. Returns
// max |analytic - cd| / max(1, |cd|). The finite-difference side divides by
// the actually-representable float32 step, accumulated in double.
double grad_check(const LossBuilder& build, const std::vector<Tensor>& leaves,
                  const std::vector<std::size_t>& wrt_indices, double step);

}  // namespace aart

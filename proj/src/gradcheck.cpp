#include "aart/gradcheck.hpp"

#include <cmath>

namespace aart {

namespace {

double eval_loss(const LossBuilder& build, const std::vector<Tensor>& leaves) {
    Graph g;
    BuiltLoss built = build(g, leaves);
    return g.scalar_value(built.loss);
}

}  // namespace

double grad_check(const LossBuilder& build, const std::vector<Tensor>& leaves,
                  const std::vector<std::size_t>& wrt_indices, double step) {
    if (step <= 0.0) throw ConfigError("grad_check: step must be positive");
    if (wrt_indices.empty()) return 0.0;

    Graph g;
    BuiltLoss built = build(g, leaves);
    std::vector<NodeId> wrt_ids;
    for (std::size_t idx : wrt_indices) wrt_ids.push_back(built.leaves.at(idx));
    GradientMap analytic = g.backward(built.loss, wrt_ids);

    double max_err = 0.0;
    std::vector<Tensor> probe = leaves;
    for (std::size_t w = 0; w < wrt_indices.size(); ++w) {
        const std::size_t idx = wrt_indices[w];
        const Tensor& grad = analytic.at(wrt_ids[w]);
        for (std::size_t i = 0; i < probe[idx].numel(); ++i) {
            const float x0 = leaves[idx].at(i);
            const float xp = static_cast<float>(static_cast<double>(x0) + step);
            const float xm = static_cast<float>(static_cast<double>(x0) - step);

            probe[idx].at(i) = xp;
            const double lp = eval_loss(build, probe);
            probe[idx].at(i) = xm;
            const double lm = eval_loss(build, probe);
            probe[idx].at(i) = x0;

            const double h = static_cast<double>(xp) - static_cast<double>(xm);
            const double cd = (lp - lm) / h;
            const double err = std::abs(static_cast<double>(grad.at(i)) - cd) /
                               std::max(1.0, std::abs(cd));
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

}  // namespace aart

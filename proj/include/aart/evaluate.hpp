#pragma once

#include "aart/data.hpp"
#include "aart/metrics.hpp"
#include "aart/model.hpp"

namespace aart {

struct MetricsSummary {
    double gap = 0.0;
    double perr = 0.0;
    double hit_at_1 = 0.0;
};

// Forward pass over every example; scores are the sigmoid outputs.
// Deterministic regardless of thread count.
PredictionSet predict(const Dataset& dataset, const ModelParams& params,
                      const ModelConfig& config, unsigned threads);

MetricsSummary evaluate(const Dataset& dataset, const ModelParams& params,
                        const ModelConfig& config, unsigned threads);

}  // namespace aart

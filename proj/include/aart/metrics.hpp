#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aart {

struct VideoPrediction {
    std::string id;
    std::vector<float> scores;           // per-class, finite, in [0, 1]
    std::vector<std::uint32_t> labels;   // ground truth, non-empty
};

using PredictionSet = std::vector<VideoPrediction>;

// Global average precision over the pooled top-k predictions of every video
// (k = 20 by default). Recall is normalized by the total ground-truth label
// count, so labels pushed out of a video's top-k are counted as misses.
// Ties break deterministically: within a video by class index, in the pool
// by (score desc, video id asc, class asc).
double gap(const PredictionSet& predictions, std::size_t top_k = 20);

// Mean precision at the number of ground-truth labels of each video.
double perr(const PredictionSet& predictions);

// Fraction of videos whose top-scoring class is a ground-truth label.
double hit_at_1(const PredictionSet& predictions);

}  // namespace aart

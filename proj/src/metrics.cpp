#include "aart/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "aart/errors.hpp"

namespace aart {
namespace {

void validate(const PredictionSet& predictions) {
    if (predictions.empty()) throw ConfigError("metrics over an empty prediction set");
    for (const auto& p : predictions) {
        if (p.scores.empty()) throw ConfigError("video '" + p.id + "' has no scores");
        if (p.labels.empty()) throw ConfigError("video '" + p.id + "' has no ground-truth labels");
        for (float s : p.scores) {
            if (!std::isfinite(s) || s < 0.0f || s > 1.0f)
                throw ConfigError("video '" + p.id + "' has a score outside [0, 1]");
        }
        for (std::uint32_t k : p.labels) {
            if (k >= p.scores.size())
                throw ConfigError("video '" + p.id + "' has label " + std::to_string(k) +
                                  " outside its " + std::to_string(p.scores.size()) + " classes");
        }
    }
}

// Class indices of one video ordered by (score desc, class asc).
std::vector<std::uint32_t> ranked_classes(const VideoPrediction& p) {
    std::vector<std::uint32_t> order(p.scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = std::uint32_t(i);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (p.scores[a] != p.scores[b]) return p.scores[a] > p.scores[b];
        return a < b;
    });
    return order;
}

}  // namespace

double gap(const PredictionSet& predictions, std::size_t top_k) {
    validate(predictions);
    if (top_k == 0) throw ConfigError("gap: top_k must be positive");

    struct Entry {
        float score;
        const std::string* id;
        std::uint32_t cls;
        bool relevant;
    };
    std::vector<Entry> pool;
    std::size_t total_positives = 0;
    for (const auto& p : predictions) {
        total_positives += p.labels.size();
        std::unordered_set<std::uint32_t> truth(p.labels.begin(), p.labels.end());
        auto order = ranked_classes(p);
        std::size_t take = std::min(top_k, order.size());
        for (std::size_t i = 0; i < take; ++i)
            pool.push_back({p.scores[order[i]], &p.id, order[i], truth.count(order[i]) > 0});
    }

    std::sort(pool.begin(), pool.end(), [](const Entry& a, const Entry& b) {
        if (a.score != b.score) return a.score > b.score;
        if (*a.id != *b.id) return *a.id < *b.id;
        return a.cls < b.cls;
    });

    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t j = 0; j < pool.size(); ++j) {
        if (pool[j].relevant) {
            ++hits;
            ap += double(hits) / double(j + 1);
        }
    }
    return ap / double(total_positives);
}

double perr(const PredictionSet& predictions) {
    validate(predictions);
    double acc = 0.0;
    for (const auto& p : predictions) {
        std::unordered_set<std::uint32_t> truth(p.labels.begin(), p.labels.end());
        auto order = ranked_classes(p);
        std::size_t n = std::min(truth.size(), order.size());
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (truth.count(order[i])) ++hits;
        acc += double(hits) / double(n);
    }
    return acc / double(predictions.size());
}

double hit_at_1(const PredictionSet& predictions) {
    validate(predictions);
    std::size_t hits = 0;
    for (const auto& p : predictions) {
        std::uint32_t top = ranked_classes(p)[0];
        if (std::find(p.labels.begin(), p.labels.end(), top) != p.labels.end()) ++hits;
    }
    return double(hits) / double(predictions.size());
}

}  // namespace aart

#include "aart/evaluate.hpp"

#include "aart/parallel.hpp"

namespace aart {

PredictionSet predict(const Dataset& dataset, const ModelParams& params,
                      const ModelConfig& config, unsigned threads) {
    PredictionSet out(dataset.size());
    parallel_for(dataset.size(), threads, [&](std::size_t i) {
        const VideoExample& ex = dataset.examples[i];
        ForwardOutput f = forward(ex.video_frames, ex.audio_frames, params, config);
        VideoPrediction p;
        p.id = ex.id;
        p.scores.assign(f.probs.data(), f.probs.data() + f.probs.numel());
        p.labels = ex.labels;
        out[i] = std::move(p);
    });
    return out;
}

MetricsSummary evaluate(const Dataset& dataset, const ModelParams& params,
                        const ModelConfig& config, unsigned threads) {
    PredictionSet preds = predict(dataset, params, config, threads);
    MetricsSummary m;
    m.gap = gap(preds);
    m.perr = perr(preds);
    m.hit_at_1 = hit_at_1(preds);
    return m;
}

}  // namespace aart

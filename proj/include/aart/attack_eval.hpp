#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aart/data.hpp"
#include "aart/losses.hpp"
#include "aart/model.hpp"

namespace aart {

// FGSM-perturbed copy of a dataset against the given model. Labels and ids
// are unchanged; epsilon = 0 returns a bit-identical copy.
Dataset make_adversarial_testset(const Dataset& dataset, const ModelParams& params,
                                 const ModelConfig& config, double epsilon, unsigned threads);

// Mean squared distance between clean and FGSM-adversarial head-averaged
// attention maps, (1/T^2) * sum of squared entry differences, averaged over
// the two modalities per example and then over examples.
struct AttentionMseReport {
    double mean = 0.0;
    double mean_video = 0.0;
    double mean_audio = 0.0;
    std::vector<double> per_example;
};

AttentionMseReport attention_mse(const Dataset& dataset, const ModelParams& params,
                                 const ModelConfig& config, double epsilon, unsigned threads);

// Multiclass DeepFool adapted to this model: "fooled" means the top-1 logit
// class changes. Margins and their input gradients are taken at the current
// overshot point; candidate classes are the highest original logits.
struct DeepFoolOptions {
    std::size_t max_iter = 50;
    double overshoot = 0.02;
    std::size_t num_classes = 10;  // candidate classes, including the top-1

    void validate() const;
};

struct DeepFoolResult {
    Tensor r_video;  // includes the (1 + overshoot) factor
    Tensor r_audio;
    bool converged = false;
    std::size_t iterations = 0;
};

DeepFoolResult deepfool(const VideoExample& example, const ModelParams& params,
                        const ModelConfig& config, const DeepFoolOptions& options);

// rho per example = ||r_tot||_2 / ||X||_2, both joint over the two
// modalities; rho_tot averages the converged examples.
struct RobustnessReport {
    struct Row {
        std::string id;
        double rho = 0.0;
        std::size_t iterations = 0;
        bool converged = false;
        double attention_mse = 0.0;
    };

    double rho_tot = 0.0;
    std::vector<double> per_example_rho;  // aligned with rows
    double fooled_fraction = 0.0;
    std::map<std::size_t, std::size_t> iterations_histogram;  // over converged examples
    std::vector<Row> rows;
};

// Errors when DeepFool converges on no example. mse_epsilon drives the
// per-example attention MSE column.
RobustnessReport average_robustness(const Dataset& dataset, const ModelParams& params,
                                    const ModelConfig& config, const DeepFoolOptions& options,
                                    double mse_epsilon, unsigned threads);

void write_robustness_csv(const std::string& path, const RobustnessReport& report);
void write_robustness_summary_json(const std::string& path, const RobustnessReport& report);

}  // namespace aart

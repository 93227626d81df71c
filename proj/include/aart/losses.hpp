#pragma once

#include <span>
#include <vector>

#include "aart/data.hpp"
#include "aart/model.hpp"

namespace aart {

// Adversarial-regularization settings shared by training and evaluation.
struct AdvConfig {
    double epsilon = 0.5;   // FGSM perturbation norm per modality
    double alpha = 1.0;     // weight of the adversarial loss term
    double beta_fr = 0.001; // weight of the attention Frobenius term

    void validate() const;
};

enum class Regime { non_art, art, a_art };

const char* regime_name(Regime r);
Regime parse_regime(const std::string& name);

// Mean over classes of clamped binary cross-entropy. Reference scalar path;
// the graph op computes the same formula for training.
double classification_loss(const Tensor& probs, const Tensor& labels);

// L2-normalized fast gradient perturbation per modality:
// R = epsilon * G / ||G||_2 with G the input gradient of the clean BCE loss.
// A modality whose gradient norm falls below 1e-12 gets a zero perturbation
// and its degenerate flag set.
struct Perturbation {
    Tensor video;  // T x D_v
    Tensor audio;  // T x D_a
    bool video_degenerate = false;
    bool audio_degenerate = false;
};

Perturbation fgsm_perturbation(const VideoExample& example, const ModelParams& params,
                               const ModelConfig& config, double epsilon);

// (1/L) sum l(y_i, f(X_i)) + alpha * (1/L) sum l(y_i, f(X_i + R_i)).
double adversarial_loss(std::span<const VideoExample> batch, const ModelParams& params,
                        const ModelConfig& config, const AdvConfig& adv);

// ||A_v - A_v_adv||_Fr + ||A_a - A_a_adv||_Fr on head-averaged maps.
double attention_regularizer(const ForwardOutput& clean, const ForwardOutput& adversarial);

// adversarial_loss plus beta_fr * (1/L) sum attention_regularizer_i.
double total_loss(std::span<const VideoExample> batch, const ModelParams& params,
                  const ModelConfig& config, const AdvConfig& adv);

// Differentiable per-example loss used by the training loop. For art/a_art
// the clean and adversarial branches share the parameter leaves, and the
// adversarial input is x + R with R a constant (the perturbation is treated
// as fixed, matching the stop-gradient in its definition), so input
// gradients flow through both branches.
struct ExampleLossGraph {
    Graph graph;
    NodeId loss = kNoNode;
    ParamNodes params;
    NodeId x_video = kNoNode;
    NodeId x_audio = kNoNode;
    ForwardNodes clean;
    ForwardNodes adversarial;  // ids valid only for art/a_art
};

ExampleLossGraph build_example_loss(const VideoExample& example, const ModelParams& params,
                                    const ModelConfig& config, Regime regime,
                                    const AdvConfig& adv, const Perturbation* perturbation,
                                    bool inputs_require_grad);

}  // namespace aart

#include "aart/losses.hpp"

#include <algorithm>
#include <cmath>

#include "aart/errors.hpp"

namespace aart {
namespace {

constexpr double kDegenerateNorm = 1e-12;

// Scales the f64 gradient to L2 norm epsilon and casts to f32.
Tensor normalized_step(const Tensor& grad, double epsilon, bool& degenerate) {
    Tensor r(grad.shape());
    degenerate = false;
    if (epsilon == 0.0) return r;
    double norm = grad.l2_norm();
    if (norm < kDegenerateNorm) {
        degenerate = true;
        return r;
    }
    const double factor = epsilon / norm;
    for (std::size_t i = 0; i < grad.numel(); ++i)
        r.at(i) = static_cast<float>(factor * static_cast<double>(grad.at(i)));
    return r;
}

Tensor add_tensors(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw ShapeError("perturbation shape " + b.shape_string() + " does not match input " +
                         a.shape_string());
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) += b.at(i);
    return out;
}

double frobenius_distance(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw ShapeError("attention maps differ in shape: " + a.shape_string() + " vs " +
                         b.shape_string());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        double d = static_cast<double>(a.at(i)) - static_cast<double>(b.at(i));
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace

void AdvConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw ConfigError("epsilon must be finite and >= 0");
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw ConfigError("alpha must be finite and >= 0");
    if (!(beta_fr >= 0.0) || !std::isfinite(beta_fr))
        throw ConfigError("beta_fr must be finite and >= 0");
}

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::non_art: return "non_art";
        case Regime::art: return "art";
        case Regime::a_art: return "a_art";
    }
    return "?";
}

Regime parse_regime(const std::string& name) {
    if (name == "non_art") return Regime::non_art;
    if (name == "art") return Regime::art;
    if (name == "a_art") return Regime::a_art;
    throw ConfigError("unknown regime '" + name + "' (expected non_art, art or a_art)");
}

double classification_loss(const Tensor& probs, const Tensor& labels) {
    if (!probs.same_shape(labels))
        throw ShapeError("probs shape " + probs.shape_string() + " does not match labels " +
                         labels.shape_string());
    if (probs.numel() == 0) throw ShapeError("classification loss over zero classes");
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.numel(); ++i) {
        double p = std::clamp(static_cast<double>(probs.at(i)), Graph::kBceClamp,
                              1.0 - Graph::kBceClamp);
        double y = static_cast<double>(labels.at(i));
        acc -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    return acc / static_cast<double>(probs.numel());
}

Perturbation fgsm_perturbation(const VideoExample& example, const ModelParams& params,
                               const ModelConfig& config, double epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw ConfigError("epsilon must be finite and >= 0");
    Perturbation out;
    out.video = Tensor(example.video_frames.shape());
    out.audio = Tensor(example.audio_frames.shape());
    if (epsilon == 0.0) return out;

    Graph g;
    ParamNodes p = attach_params(g, params, config, /*trainable=*/false);
    NodeId xv = g.leaf(example.video_frames, /*requires_grad=*/true);
    NodeId xa = g.leaf(example.audio_frames, /*requires_grad=*/true);
    ForwardNodes f = build_forward(g, p, xv, xa, config);
    NodeId loss = g.bce(f.probs, example.label_vector(config.num_classes));
    GradientMap grads = g.backward(loss, {xv, xa});

    out.video = normalized_step(grads.at(xv), epsilon, out.video_degenerate);
    out.audio = normalized_step(grads.at(xa), epsilon, out.audio_degenerate);
    return out;
}

double adversarial_loss(std::span<const VideoExample> batch, const ModelParams& params,
                        const ModelConfig& config, const AdvConfig& adv) {
    adv.validate();
    if (batch.empty()) throw ConfigError("adversarial loss over an empty batch");
    double clean_sum = 0.0, adv_sum = 0.0;
    for (const VideoExample& ex : batch) {
        Tensor y = ex.label_vector(config.num_classes);
        ForwardOutput clean = forward(ex.video_frames, ex.audio_frames, params, config);
        clean_sum += classification_loss(clean.probs, y);
        Perturbation r = fgsm_perturbation(ex, params, config, adv.epsilon);
        ForwardOutput pert = forward(add_tensors(ex.video_frames, r.video),
                                     add_tensors(ex.audio_frames, r.audio), params, config);
        adv_sum += classification_loss(pert.probs, y);
    }
    const double n = static_cast<double>(batch.size());
    return clean_sum / n + adv.alpha * (adv_sum / n);
}

double attention_regularizer(const ForwardOutput& clean, const ForwardOutput& adversarial) {
    return frobenius_distance(clean.attn_video, adversarial.attn_video) +
           frobenius_distance(clean.attn_audio, adversarial.attn_audio);
}

double total_loss(std::span<const VideoExample> batch, const ModelParams& params,
                  const ModelConfig& config, const AdvConfig& adv) {
    adv.validate();
    if (batch.empty()) throw ConfigError("total loss over an empty batch");
    double clean_sum = 0.0, adv_sum = 0.0, fr_sum = 0.0;
    for (const VideoExample& ex : batch) {
        Tensor y = ex.label_vector(config.num_classes);
        ForwardOutput clean = forward(ex.video_frames, ex.audio_frames, params, config);
        clean_sum += classification_loss(clean.probs, y);
        Perturbation r = fgsm_perturbation(ex, params, config, adv.epsilon);
        ForwardOutput pert = forward(add_tensors(ex.video_frames, r.video),
                                     add_tensors(ex.audio_frames, r.audio), params, config);
        adv_sum += classification_loss(pert.probs, y);
        fr_sum += attention_regularizer(clean, pert);
    }
    const double n = static_cast<double>(batch.size());
    return clean_sum / n + adv.alpha * (adv_sum / n) + adv.beta_fr * (fr_sum / n);
}

ExampleLossGraph build_example_loss(const VideoExample& example, const ModelParams& params,
                                    const ModelConfig& config, Regime regime,
                                    const AdvConfig& adv, const Perturbation* perturbation,
                                    bool inputs_require_grad) {
    adv.validate();
    if (regime != Regime::non_art && perturbation == nullptr)
        throw ConfigError("art/a_art loss graph needs a perturbation");

    ExampleLossGraph out;
    Graph& g = out.graph;
    out.params = attach_params(g, params, config, /*trainable=*/true);
    out.x_video = g.leaf(example.video_frames, inputs_require_grad);
    out.x_audio = g.leaf(example.audio_frames, inputs_require_grad);
    Tensor y = example.label_vector(config.num_classes);

    out.clean = build_forward(g, out.params, out.x_video, out.x_audio, config);
    NodeId loss = g.bce(out.clean.probs, y);

    if (regime != Regime::non_art) {
        // x_adv = x + R keeps the input leaf on the adversarial path.
        NodeId xv_adv = g.add(out.x_video, g.constant(perturbation->video));
        NodeId xa_adv = g.add(out.x_audio, g.constant(perturbation->audio));
        out.adversarial = build_forward(g, out.params, xv_adv, xa_adv, config);
        NodeId adv_loss = g.bce(out.adversarial.probs, y);
        loss = g.add(loss, g.scale(adv_loss, adv.alpha));

        if (regime == Regime::a_art) {
            NodeId dv = g.add(out.clean.attn_avg_video, g.scale(out.adversarial.attn_avg_video, -1.0));
            NodeId da = g.add(out.clean.attn_avg_audio, g.scale(out.adversarial.attn_avg_audio, -1.0));
            NodeId fr = g.add(g.frobenius_norm(dv), g.frobenius_norm(da));
            loss = g.add(loss, g.scale(fr, adv.beta_fr));
        }
    }
    out.loss = loss;
    return out;
}

}  // namespace aart

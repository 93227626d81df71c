#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aart/graph.hpp"
#include "aart/tensor.hpp"

namespace aart {

// Two-modality single-layer multi-head-attention classifier: each modality is
// projected into the model dimension, runs through one block of scaled
// dot-product attention, is mean-pooled over frames, and the pooled vectors
// are concatenated and fed to a per-class sigmoid classifier.
struct ModelConfig {
    std::size_t num_classes = 20;
    std::size_t video_dim = 64;
    std::size_t audio_dim = 16;
    std::size_t model_dim = 32;   // divisible by num_heads
    std::size_t num_heads = 8;
    std::size_t max_frames = 30;
    std::uint64_t seed = 1;
    bool positional = false;  // learned positional embeddings, off by default

    std::size_t head_dim() const { return model_dim / num_heads; }
    void validate() const;
};

struct ModalityParams {
    Tensor w_in;              // D_m x d
    Tensor w_q, w_k, w_v;     // d x d, heads combined column-wise
    Tensor pos;               // T_max x d when positional embeddings are on
};

struct ModelParams {
    ModalityParams video;
    ModalityParams audio;
    Tensor w_cls;  // 2d x K
    Tensor b_cls;  // K

    std::vector<Tensor*> tensors();  // fixed serialization order
    std::vector<const Tensor*> tensors() const;
};

struct ForwardOutput {
    Tensor probs;            // K, sigmoid(logits)
    Tensor logits;           // K
    Tensor attn_video;       // T x T, head-averaged
    Tensor attn_audio;       // T x T
    Tensor per_head_video;   // H x T x T
    Tensor per_head_audio;   // H x T x T
};

// Scaled-uniform init: every weight uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
// biases zero. Deterministic given config.seed.
ModelParams init_params(const ModelConfig& config);

ForwardOutput forward(const Tensor& x_video, const Tensor& x_audio, const ModelParams& params,
                      const ModelConfig& config);

// Elementwise mean over the head axis of an H x T x T stack.
Tensor average_attention(const Tensor& per_head);

// ---- graph plumbing shared with the losses/training modules ----

constexpr NodeId kNoNode = static_cast<NodeId>(-1);

struct ParamNodes {
    NodeId video_w_in = kNoNode, video_w_q = kNoNode, video_w_k = kNoNode, video_w_v = kNoNode;
    NodeId audio_w_in = kNoNode, audio_w_q = kNoNode, audio_w_k = kNoNode, audio_w_v = kNoNode;
    NodeId video_pos = kNoNode, audio_pos = kNoNode;
    NodeId w_cls = kNoNode, b_cls = kNoNode;

    std::vector<NodeId> all() const;
};

struct ForwardNodes {
    NodeId logits = kNoNode;
    NodeId probs = kNoNode;
    NodeId attn_avg_video = kNoNode;
    NodeId attn_avg_audio = kNoNode;
    std::vector<NodeId> heads_video;
    std::vector<NodeId> heads_audio;
};

// Adds all parameters as leaves (in serialization order).
ParamNodes attach_params(Graph& g, const ModelParams& params, const ModelConfig& config,
                         bool trainable);

// Builds the full forward pass on existing input nodes. Parameters may be
// shared between several forward passes in the same graph (clean +
// adversarial branches).
ForwardNodes build_forward(Graph& g, const ParamNodes& p, NodeId x_video, NodeId x_audio,
                           const ModelConfig& config);

ForwardOutput extract_output(const Graph& g, const ForwardNodes& f, const ModelConfig& config);

// ---- checkpoint file ("AAT1") ----
// magic "AAT1", then little-endian u32 num_classes, video_dim, audio_dim,
// model_dim, num_heads, max_frames, u64 seed, u8 positional flag, then each
// weight tensor in serialization order as (u8 rank, u32 extents..., f32 data).
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const ModelConfig& config);
std::pair<ModelParams, ModelConfig> load_checkpoint(const std::string& path);

}  // namespace aart

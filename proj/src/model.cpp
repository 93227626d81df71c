#include "aart/model.hpp"

#include <cmath>

#include "aart/binio.hpp"
#include "aart/rng.hpp"

namespace aart {

void ModelConfig::validate() const {
    if (num_classes == 0 || video_dim == 0 || audio_dim == 0 || model_dim == 0 ||
        num_heads == 0 || max_frames == 0) {
        throw ConfigError("ModelConfig: all dimensions must be >= 1");
    }
    if (model_dim % num_heads != 0) {
        throw ConfigError("ModelConfig: model_dim " + std::to_string(model_dim) +
                          " not divisible by num_heads " + std::to_string(num_heads));
    }
}

std::vector<Tensor*> ModelParams::tensors() {
    std::vector<Tensor*> out = {&video.w_in, &video.w_q, &video.w_k, &video.w_v,
                                &audio.w_in, &audio.w_q, &audio.w_k, &audio.w_v};
    if (video.pos.numel() > 0) out.push_back(&video.pos);
    if (audio.pos.numel() > 0) out.push_back(&audio.pos);
    out.push_back(&w_cls);
    out.push_back(&b_cls);
    return out;
}

std::vector<const Tensor*> ModelParams::tensors() const {
    auto mut = const_cast<ModelParams*>(this)->tensors();
    return std::vector<const Tensor*>(mut.begin(), mut.end());
}

namespace {

Tensor uniform_init(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in) {
    Tensor t(std::move(shape));
    const float s = 1.0f / std::sqrt(static_cast<float>(fan_in));
    for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) = rng.uniform_f32(-s, s);
    return t;
}

ModalityParams init_modality(Rng& rng, std::size_t input_dim, const ModelConfig& cfg) {
    ModalityParams m;
    m.w_in = uniform_init(rng, {input_dim, cfg.model_dim}, input_dim);
    m.w_q = uniform_init(rng, {cfg.model_dim, cfg.model_dim}, cfg.model_dim);
    m.w_k = uniform_init(rng, {cfg.model_dim, cfg.model_dim}, cfg.model_dim);
    m.w_v = uniform_init(rng, {cfg.model_dim, cfg.model_dim}, cfg.model_dim);
    return m;
}

// Column-selection constant for head h: d x head_dim 0/1 matrix. Realizes the
// per-head split of the combined projections inside the fixed op vocabulary.
Tensor head_selector(const ModelConfig& cfg, std::size_t head) {
    Tensor s({cfg.model_dim, cfg.head_dim()});
    for (std::size_t j = 0; j < cfg.head_dim(); ++j) s.at2(head * cfg.head_dim() + j, j) = 1.0f;
    return s;
}

// Row-selection constant picking the first t rows of a T_max x d table.
Tensor row_selector(std::size_t t, std::size_t t_max) {
    Tensor s({t, t_max});
    for (std::size_t i = 0; i < t; ++i) s.at2(i, i) = 1.0f;
    return s;
}

struct ModalityNodes {
    NodeId attn_avg = kNoNode;
    NodeId pooled = kNoNode;
    std::vector<NodeId> heads;
};

ModalityNodes build_modality(Graph& g, NodeId x, NodeId w_in, NodeId w_q, NodeId w_k, NodeId w_v,
                             NodeId pos, const ModelConfig& cfg) {
    const std::size_t t = g.value(x).dim(0);
    NodeId h = g.matmul(x, w_in);  // T x d
    if (pos != kNoNode) {
        h = g.add(h, g.matmul(g.constant(row_selector(t, cfg.max_frames)), pos));
    }
    const NodeId q = g.matmul(h, w_q);
    const NodeId k = g.matmul(h, w_k);
    const NodeId v = g.matmul(h, w_v);

    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim()));
    ModalityNodes out;
    std::vector<NodeId> head_outputs;
    NodeId attn_sum = kNoNode;
    for (std::size_t head = 0; head < cfg.num_heads; ++head) {
        const NodeId sel = g.constant(head_selector(cfg, head));
        const NodeId qh = g.matmul(q, sel);
        const NodeId kh = g.matmul(k, sel);
        const NodeId vh = g.matmul(v, sel);
        const NodeId scores = g.scale(g.matmul(qh, g.transpose(kh)), inv_sqrt_dh);
        const NodeId attn = g.row_softmax(scores);  // T x T, row-stochastic
        out.heads.push_back(attn);
        head_outputs.push_back(g.matmul(attn, vh));
        attn_sum = head == 0 ? attn : g.add(attn_sum, attn);
    }
    out.attn_avg = g.scale(attn_sum, 1.0 / static_cast<double>(cfg.num_heads));
    const NodeId attended = cfg.num_heads == 1 ? head_outputs[0] : g.concat(head_outputs, 1);
    out.pooled = g.mean_axis(attended, 0);  // d
    return out;
}

}  // namespace

ParamNodes attach_params(Graph& g, const ModelParams& params, const ModelConfig& config,
                         bool trainable) {
    ParamNodes p;
    p.video_w_in = g.leaf(params.video.w_in, trainable);
    p.video_w_q = g.leaf(params.video.w_q, trainable);
    p.video_w_k = g.leaf(params.video.w_k, trainable);
    p.video_w_v = g.leaf(params.video.w_v, trainable);
    p.audio_w_in = g.leaf(params.audio.w_in, trainable);
    p.audio_w_q = g.leaf(params.audio.w_q, trainable);
    p.audio_w_k = g.leaf(params.audio.w_k, trainable);
    p.audio_w_v = g.leaf(params.audio.w_v, trainable);
    if (config.positional) {
        p.video_pos = g.leaf(params.video.pos, trainable);
        p.audio_pos = g.leaf(params.audio.pos, trainable);
    }
    p.w_cls = g.leaf(params.w_cls, trainable);
    p.b_cls = g.leaf(params.b_cls, trainable);
    return p;
}

std::vector<NodeId> ParamNodes::all() const {
    std::vector<NodeId> ids = {video_w_in, video_w_q, video_w_k, video_w_v,
                               audio_w_in, audio_w_q, audio_w_k, audio_w_v};
    if (video_pos != kNoNode) ids.push_back(video_pos);
    if (audio_pos != kNoNode) ids.push_back(audio_pos);
    ids.push_back(w_cls);
    ids.push_back(b_cls);
    return ids;
}

ForwardNodes build_forward(Graph& g, const ParamNodes& p, NodeId x_video, NodeId x_audio,
                           const ModelConfig& config) {
    config.validate();
    const Tensor& xv = g.value(x_video);
    const Tensor& xa = g.value(x_audio);
    if (xv.rank() != 2 || xa.rank() != 2) {
        throw ShapeError("forward: inputs must be rank 2, got " + xv.shape_string() + " and " +
                         xa.shape_string());
    }
    if (xv.dim(1) != config.video_dim || xa.dim(1) != config.audio_dim) {
        throw ShapeError("forward: feature dims " + xv.shape_string() + "/" + xa.shape_string() +
                         " do not match config");
    }
    if (xv.dim(0) != xa.dim(0)) {
        throw ShapeError("forward: video frames " + std::to_string(xv.dim(0)) +
                         " != audio frames " + std::to_string(xa.dim(0)));
    }
    if (xv.dim(0) > config.max_frames) {
        throw ShapeError("forward: " + std::to_string(xv.dim(0)) + " frames exceed max_frames " +
                         std::to_string(config.max_frames));
    }

    const ModalityNodes video =
        build_modality(g, x_video, p.video_w_in, p.video_w_q, p.video_w_k, p.video_w_v,
                       p.video_pos, config);
    const ModalityNodes audio =
        build_modality(g, x_audio, p.audio_w_in, p.audio_w_q, p.audio_w_k, p.audio_w_v,
                       p.audio_pos, config);

    ForwardNodes f;
    const NodeId z = g.concat({video.pooled, audio.pooled}, 0);  // 2d
    f.logits = g.add(g.matmul(z, p.w_cls), p.b_cls);             // K
    f.probs = g.sigmoid(f.logits);
    f.attn_avg_video = video.attn_avg;
    f.attn_avg_audio = audio.attn_avg;
    f.heads_video = video.heads;
    f.heads_audio = audio.heads;
    return f;
}

ForwardOutput extract_output(const Graph& g, const ForwardNodes& f, const ModelConfig& config) {
    ForwardOutput out;
    out.logits = g.value(f.logits);
    out.probs = g.value(f.probs);
    out.attn_video = g.value(f.attn_avg_video);
    out.attn_audio = g.value(f.attn_avg_audio);

    const std::size_t t = out.attn_video.dim(0);
    auto stack = [&](const std::vector<NodeId>& heads) {
        Tensor s({config.num_heads, t, t});
        for (std::size_t h = 0; h < heads.size(); ++h) {
            const Tensor& a = g.value(heads[h]);
            for (std::size_t i = 0; i < t; ++i)
                for (std::size_t j = 0; j < t; ++j) s.at3(h, i, j) = a.at2(i, j);
        }
        return s;
    };
    out.per_head_video = stack(f.heads_video);
    out.per_head_audio = stack(f.heads_audio);
    return out;
}

ModelParams init_params(const ModelConfig& config) {
    config.validate();
    Rng rng(config.seed);
    ModelParams p;
    p.video = init_modality(rng, config.video_dim, config);
    p.audio = init_modality(rng, config.audio_dim, config);
    if (config.positional) {
        p.video.pos = uniform_init(rng, {config.max_frames, config.model_dim}, config.model_dim);
        p.audio.pos = uniform_init(rng, {config.max_frames, config.model_dim}, config.model_dim);
    }
    p.w_cls = uniform_init(rng, {2 * config.model_dim, config.num_classes}, 2 * config.model_dim);
    p.b_cls = Tensor::zeros({config.num_classes});
    return p;
}

ForwardOutput forward(const Tensor& x_video, const Tensor& x_audio, const ModelParams& params,
                      const ModelConfig& config) {
    Graph g;
    const ParamNodes p = attach_params(g, params, config, /*trainable=*/false);
    const NodeId xv = g.constant(x_video);
    const NodeId xa = g.constant(x_audio);
    const ForwardNodes f = build_forward(g, p, xv, xa, config);
    return extract_output(g, f, config);
}

Tensor average_attention(const Tensor& per_head) {
    if (per_head.rank() != 3) {
        throw ShapeError("average_attention: expected H x T x T, got " + per_head.shape_string());
    }
    const std::size_t h = per_head.dim(0), t = per_head.dim(1);
    if (per_head.dim(2) != t) {
        throw ShapeError("average_attention: maps must be square, got " + per_head.shape_string());
    }
    Tensor out({t, t});
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = 0; j < t; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < h; ++k) acc += static_cast<double>(per_head.at3(k, i, j));
            out.at2(i, j) = static_cast<float>(acc / static_cast<double>(h));
        }
    }
    return out;
}

// ---- checkpoint io ----

namespace {
constexpr char kMagic[4] = {'A', 'A', 'T', '1'};

void write_tensor(ByteWriter& w, const Tensor& t) {
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t e : t.shape()) w.u32(static_cast<std::uint32_t>(e));
    w.f32_array(t.data(), t.numel());
}

Tensor read_tensor(ByteReader& r) {
    const std::uint8_t rank = r.u8();
    if (rank > 3) {
        throw IoError(r.path() + ": bad tensor rank " + std::to_string(rank) +
                      " at byte offset " + std::to_string(r.offset()));
    }
    std::vector<std::size_t> shape;
    for (std::uint8_t i = 0; i < rank; ++i) shape.push_back(r.u32());
    Tensor t(shape);
    r.f32_array(t.data(), t.numel());
    return t;
}
}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const ModelConfig& config) {
    ByteWriter w(path);
    w.bytes(kMagic, 4);
    w.u32(static_cast<std::uint32_t>(config.num_classes));
    w.u32(static_cast<std::uint32_t>(config.video_dim));
    w.u32(static_cast<std::uint32_t>(config.audio_dim));
    w.u32(static_cast<std::uint32_t>(config.model_dim));
    w.u32(static_cast<std::uint32_t>(config.num_heads));
    w.u32(static_cast<std::uint32_t>(config.max_frames));
    w.u64(config.seed);
    w.u8(config.positional ? 1 : 0);
    for (const Tensor* t : params.tensors()) write_tensor(w, *t);
    w.close();
}

std::pair<ModelParams, ModelConfig> load_checkpoint(const std::string& path) {
    ByteReader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError(path + ": bad magic at byte offset 0 (not an AAT1 checkpoint)");
    }
    ModelConfig config;
    config.num_classes = r.u32();
    config.video_dim = r.u32();
    config.audio_dim = r.u32();
    config.model_dim = r.u32();
    config.num_heads = r.u32();
    config.max_frames = r.u32();
    config.seed = r.u64();
    config.positional = r.u8() != 0;
    config.validate();

    ModelParams params;
    if (config.positional) {
        // placeholders so tensors() exposes the positional slots
        params.video.pos = Tensor({1});
        params.audio.pos = Tensor({1});
    }
    for (Tensor* t : params.tensors()) *t = read_tensor(r);
    if (!r.at_eof()) {
        throw IoError(path + ": trailing bytes after checkpoint payload at offset " +
                      std::to_string(r.offset()));
    }
    return {std::move(params), config};
}

}  // namespace aart

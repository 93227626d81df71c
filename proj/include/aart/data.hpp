#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aart/tensor.hpp"

namespace aart {

// One video: frame-wise features for both modalities plus ground-truth labels.
struct VideoExample {
    std::string id;
    Tensor video_frames;  // T x D_v
    Tensor audio_frames;  // T x D_a
    std::vector<std::uint32_t> labels;  // sorted, unique, non-empty

    std::size_t frames() const { return video_frames.dim(0); }
    // Multi-hot label vector of length num_classes.
    Tensor label_vector(std::size_t num_classes) const;
};

struct Dataset {
    std::size_t num_classes = 0;
    std::size_t video_dim = 0;
    std::size_t audio_dim = 0;
    std::vector<VideoExample> examples;

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
};

// Synthetic stand-in for frame-feature video data: every class owns a fixed
// random motif per modality; a video embeds the motifs of its labels at
// random non-overlapping temporal offsets on top of Gaussian background
// noise. Labels are therefore tied to temporal structure, which is what
// makes attention maps informative on this data.
struct SyntheticSpec {
    std::size_t num_classes = 20;
    std::size_t video_dim = 64;
    std::size_t audio_dim = 16;
    std::size_t min_frames = 10;
    std::size_t max_frames = 30;
    std::size_t num_videos = 5000;
    std::size_t min_labels = 1;
    std::size_t max_labels = 2;
    float noise_std = 0.05f;
    std::size_t motif_length = 5;
    std::uint64_t seed = 1;

    void validate() const;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

// Per-class motifs for a spec, in generation order (test hook for the
// matched-filter sanity check). [class] -> {video motif, audio motif}.
struct ClassMotif {
    Tensor video;  // motif_length x D_v
    Tensor audio;  // motif_length x D_a
};
std::vector<ClassMotif> synthetic_motifs(const SyntheticSpec& spec);

// ---- binary dataset file ("AVD1") ----
// magic "AVD1", u8 version=1, little-endian u32 num_videos, num_classes,
// video_dim, audio_dim; per video: u16 id length + UTF-8 id, u32 T,
// u16 label count + u32 label indices, f32 video frames row-major,
// f32 audio frames row-major.
void write_dataset(const std::string& path, const Dataset& dataset);
Dataset read_dataset(const std::string& path);

// Debugging export: one JSON object per line with base64 feature payloads.
void write_dataset_jsonl(const std::string& path, const Dataset& dataset);

struct Splits {
    Dataset train, val, test;
};

// Deterministic disjoint exhaustive split. Fractions must sum to 1 (1e-9).
Splits split(const Dataset& dataset, double train_frac, double val_frac, double test_frac,
             std::uint64_t seed);

}  // namespace aart

#include "aart/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "aart/binio.hpp"
#include "aart/errors.hpp"
#include "aart/rng.hpp"

namespace aart {
namespace {

// Motif entries are drawn N(0, kMotifStd^2) against N(0, noise_std^2)
// background. With the defaults this puts a unit-epsilon perturbation at
// roughly 5-15% of an example's feature norm, so gradient attacks in the
// epsilon ranges used here are strong but not saturating.
constexpr float kMotifStd = 0.35f;

constexpr std::uint32_t kDatasetMagic = 0x31445641u;  // "AVD1" little-endian
constexpr std::uint8_t kDatasetVersion = 1;

Tensor random_matrix(Rng& rng, std::size_t rows, std::size_t cols, float std_dev) {
    Tensor t({rows, cols});
    for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) = rng.normal_f32(0.0f, std_dev);
    return t;
}

// Samples one offset uniformly from the offsets that keep [o, o+len) inside
// [0, frames) and disjoint from the occupied intervals.
bool place_interval(Rng& rng, std::size_t frames, std::size_t len,
                    const std::vector<std::pair<std::size_t, std::size_t>>& taken,
                    std::size_t& out_offset) {
    std::vector<std::size_t> valid;
    for (std::size_t o = 0; o + len <= frames; ++o) {
        bool free = true;
        for (const auto& [b, e] : taken) {
            if (o < e && b < o + len) {
                free = false;
                break;
            }
        }
        if (free) valid.push_back(o);
    }
    if (valid.empty()) return false;
    out_offset = valid[rng.below(valid.size())];
    return true;
}

std::string encode_base64(const float* values, std::size_t count) {
    static const char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    const auto* bytes = reinterpret_cast<const unsigned char*>(values);
    std::size_t n = count * sizeof(float);
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    for (std::size_t i = 0; i < n; i += 3) {
        std::uint32_t chunk = std::uint32_t(bytes[i]) << 16;
        if (i + 1 < n) chunk |= std::uint32_t(bytes[i + 1]) << 8;
        if (i + 2 < n) chunk |= std::uint32_t(bytes[i + 2]);
        out.push_back(table[(chunk >> 18) & 63]);
        out.push_back(table[(chunk >> 12) & 63]);
        out.push_back(i + 1 < n ? table[(chunk >> 6) & 63] : '=');
        out.push_back(i + 2 < n ? table[chunk & 63] : '=');
    }
    return out;
}

}  // namespace

Tensor VideoExample::label_vector(std::size_t num_classes) const {
    Tensor y({num_classes});
    for (std::uint32_t k : labels) {
        if (k >= num_classes)
            throw ConfigError("label index " + std::to_string(k) + " out of range for " +
                              std::to_string(num_classes) + " classes");
        y.at(k) = 1.0f;
    }
    return y;
}

void SyntheticSpec::validate() const {
    if (num_classes == 0 || video_dim == 0 || audio_dim == 0 || num_videos == 0)
        throw ConfigError("synthetic spec: sizes must be positive");
    if (min_frames == 0 || min_frames > max_frames)
        throw ConfigError("synthetic spec: need 0 < min_frames <= max_frames");
    if (min_labels == 0 || min_labels > max_labels)
        throw ConfigError("synthetic spec: need 0 < min_labels <= max_labels");
    if (max_labels > num_classes)
        throw ConfigError("synthetic spec: max_labels exceeds num_classes");
    if (motif_length == 0 || motif_length > min_frames)
        throw ConfigError("synthetic spec: need 0 < motif_length <= min_frames");
    if (!(noise_std >= 0.0f) || !std::isfinite(noise_std))
        throw ConfigError("synthetic spec: noise_std must be non-negative and finite");
}

std::vector<ClassMotif> synthetic_motifs(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(Rng::mix(spec.seed, 0x6d6f7469));  // motif stream
    std::vector<ClassMotif> motifs;
    motifs.reserve(spec.num_classes);
    for (std::size_t k = 0; k < spec.num_classes; ++k) {
        ClassMotif m;
        m.video = random_matrix(rng, spec.motif_length, spec.video_dim, kMotifStd);
        m.audio = random_matrix(rng, spec.motif_length, spec.audio_dim, kMotifStd);
        motifs.push_back(std::move(m));
    }
    return motifs;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const auto motifs = synthetic_motifs(spec);
    Rng rng(Rng::mix(spec.seed, 0x76696465));  // video stream

    Dataset ds;
    ds.num_classes = spec.num_classes;
    ds.video_dim = spec.video_dim;
    ds.audio_dim = spec.audio_dim;
    ds.examples.reserve(spec.num_videos);

    for (std::size_t v = 0; v < spec.num_videos; ++v) {
        VideoExample ex;
        char buf[24];
        std::snprintf(buf, sizeof(buf), "synth-%06zu", v);
        ex.id = buf;

        std::size_t frames = spec.min_frames + rng.below(spec.max_frames - spec.min_frames + 1);
        std::size_t want = spec.min_labels + rng.below(spec.max_labels - spec.min_labels + 1);

        // Sample `want` distinct classes (partial Fisher-Yates over 0..K-1).
        std::vector<std::uint32_t> pool(spec.num_classes);
        for (std::size_t k = 0; k < spec.num_classes; ++k) pool[k] = std::uint32_t(k);
        for (std::size_t i = 0; i < want; ++i)
            std::swap(pool[i], pool[i + rng.below(spec.num_classes - i)]);
        std::vector<std::uint32_t> chosen(pool.begin(), pool.begin() + std::ptrdiff_t(want));

        // Non-overlapping offsets, one per label; resample the whole layout
        // on a dead end, hard error after 100 attempts.
        std::vector<std::size_t> offsets(want);
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            std::vector<std::pair<std::size_t, std::size_t>> taken;
            placed = true;
            for (std::size_t i = 0; i < want; ++i) {
                std::size_t off = 0;
                if (!place_interval(rng, frames, spec.motif_length, taken, off)) {
                    placed = false;
                    break;
                }
                offsets[i] = off;
                taken.emplace_back(off, off + spec.motif_length);
            }
        }
        if (!placed)
            throw ConfigError("cannot place " + std::to_string(want) + " motifs of length " +
                              std::to_string(spec.motif_length) + " in " + std::to_string(frames) +
                              " frames after 100 attempts");

        ex.video_frames = random_matrix(rng, frames, spec.video_dim, spec.noise_std);
        ex.audio_frames = random_matrix(rng, frames, spec.audio_dim, spec.noise_std);
        for (std::size_t i = 0; i < want; ++i) {
            const ClassMotif& m = motifs[chosen[i]];
            for (std::size_t r = 0; r < spec.motif_length; ++r) {
                for (std::size_t c = 0; c < spec.video_dim; ++c)
                    ex.video_frames.at2(offsets[i] + r, c) += m.video.at2(r, c);
                for (std::size_t c = 0; c < spec.audio_dim; ++c)
                    ex.audio_frames.at2(offsets[i] + r, c) += m.audio.at2(r, c);
            }
        }

        std::sort(chosen.begin(), chosen.end());
        ex.labels = std::move(chosen);
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

void write_dataset(const std::string& path, const Dataset& dataset) {
    ByteWriter w(path);
    w.u32(kDatasetMagic);
    w.u8(kDatasetVersion);
    w.u32(std::uint32_t(dataset.examples.size()));
    w.u32(std::uint32_t(dataset.num_classes));
    w.u32(std::uint32_t(dataset.video_dim));
    w.u32(std::uint32_t(dataset.audio_dim));
    for (const auto& ex : dataset.examples) {
        if (ex.id.size() > 0xffff) throw IoError("video id longer than 65535 bytes");
        if (ex.labels.empty()) throw IoError("video '" + ex.id + "' has no labels");
        if (ex.video_frames.rank() != 2 || ex.audio_frames.rank() != 2 ||
            ex.video_frames.dim(0) != ex.audio_frames.dim(0) ||
            ex.video_frames.dim(1) != dataset.video_dim ||
            ex.audio_frames.dim(1) != dataset.audio_dim)
            throw IoError("video '" + ex.id + "' has inconsistent frame shapes");
        w.u16(std::uint16_t(ex.id.size()));
        w.bytes(ex.id.data(), ex.id.size());
        w.u32(std::uint32_t(ex.frames()));
        if (ex.labels.size() > 0xffff) throw IoError("too many labels on video '" + ex.id + "'");
        w.u16(std::uint16_t(ex.labels.size()));
        for (std::uint32_t k : ex.labels) w.u32(k);
        w.f32_array(ex.video_frames.data(), ex.video_frames.numel());
        w.f32_array(ex.audio_frames.data(), ex.audio_frames.numel());
    }
    w.close();
}

Dataset read_dataset(const std::string& path) {
    ByteReader r(path);
    if (r.u32() != kDatasetMagic) throw IoError(path + ": bad magic, not an AVD1 dataset");
    std::uint8_t version = r.u8();
    if (version != kDatasetVersion)
        throw IoError(path + ": unsupported dataset version " + std::to_string(version));
    std::uint32_t count = r.u32();
    Dataset ds;
    ds.num_classes = r.u32();
    ds.video_dim = r.u32();
    ds.audio_dim = r.u32();
    if (ds.num_classes == 0 || ds.video_dim == 0 || ds.audio_dim == 0)
        throw IoError(path + ": header has zero-sized dimensions");
    ds.examples.reserve(count);
    for (std::uint32_t v = 0; v < count; ++v) {
        VideoExample ex;
        std::uint16_t id_len = r.u16();
        ex.id.resize(id_len);
        r.bytes(ex.id.data(), id_len);
        std::uint32_t frames = r.u32();
        if (frames == 0) throw IoError(path + ": video '" + ex.id + "' has zero frames");
        std::uint16_t label_count = r.u16();
        if (label_count == 0) throw IoError(path + ": video '" + ex.id + "' has no labels");
        ex.labels.resize(label_count);
        for (auto& k : ex.labels) {
            k = r.u32();
            if (k >= ds.num_classes)
                throw IoError(path + ": label index " + std::to_string(k) +
                              " out of range on video '" + ex.id + "'");
        }
        ex.video_frames = Tensor({frames, ds.video_dim});
        r.f32_array(ex.video_frames.data(), ex.video_frames.numel());
        ex.audio_frames = Tensor({frames, ds.audio_dim});
        r.f32_array(ex.audio_frames.data(), ex.audio_frames.numel());
        ds.examples.push_back(std::move(ex));
    }
    if (!r.at_eof())
        throw IoError(path + ": trailing bytes after video " + std::to_string(count) +
                      " (offset " + std::to_string(r.offset()) + ")");
    return ds;
}

void write_dataset_jsonl(const std::string& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (const auto& ex : dataset.examples) {
        out << "{\"id\":\"" << ex.id << "\",\"frames\":" << ex.frames() << ",\"labels\":[";
        for (std::size_t i = 0; i < ex.labels.size(); ++i) {
            if (i) out << ',';
            out << ex.labels[i];
        }
        out << "],\"video_b64\":\""
            << encode_base64(ex.video_frames.data(), ex.video_frames.numel())
            << "\",\"audio_b64\":\""
            << encode_base64(ex.audio_frames.data(), ex.audio_frames.numel()) << "\"}\n";
    }
    if (!out) throw IoError("write to '" + path + "' failed");
}

Splits split(const Dataset& dataset, double train_frac, double val_frac, double test_frac,
             std::uint64_t seed) {
    if (dataset.empty()) throw ConfigError("cannot split an empty dataset");
    if (train_frac < 0 || val_frac < 0 || test_frac < 0)
        throw ConfigError("split fractions must be non-negative");
    if (std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");

    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(Rng::mix(seed, 0x73706c69));  // split stream
    rng.shuffle(order);

    std::size_t n = dataset.size();
    std::size_t n_train = std::size_t(std::llround(train_frac * double(n)));
    std::size_t n_val = std::size_t(std::llround(val_frac * double(n)));
    if (n_train > n) n_train = n;
    if (n_train + n_val > n) n_val = n - n_train;

    Splits s;
    for (Dataset* part : {&s.train, &s.val, &s.test}) {
        part->num_classes = dataset.num_classes;
        part->video_dim = dataset.video_dim;
        part->audio_dim = dataset.audio_dim;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const VideoExample& ex = dataset.examples[order[i]];
        if (i < n_train)
            s.train.examples.push_back(ex);
        else if (i < n_train + n_val)
            s.val.examples.push_back(ex);
        else
            s.test.examples.push_back(ex);
    }
    return s;
}

}  // namespace aart

#include "aart/attack_eval.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "aart/errors.hpp"
#include "aart/parallel.hpp"
#include "aart/textio.hpp"

namespace aart {
namespace {

Tensor add_tensors(const Tensor& a, const Tensor& b) {
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) += b.at(i);
    return out;
}

std::size_t argmax_lowest(const Tensor& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.numel(); ++i)
        if (v.at(i) > v.at(best)) best = i;
    return best;
}

double squared_distance(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        double d = double(a.at(i)) - double(b.at(i));
        acc += d * d;
    }
    return acc;
}

}  // namespace

Dataset make_adversarial_testset(const Dataset& dataset, const ModelParams& params,
                                 const ModelConfig& config, double epsilon, unsigned threads) {
    Dataset out = dataset;
    parallel_for(out.size(), threads, [&](std::size_t i) {
        VideoExample& ex = out.examples[i];
        Perturbation r = fgsm_perturbation(ex, params, config, epsilon);
        ex.video_frames = add_tensors(ex.video_frames, r.video);
        ex.audio_frames = add_tensors(ex.audio_frames, r.audio);
    });
    return out;
}

AttentionMseReport attention_mse(const Dataset& dataset, const ModelParams& params,
                                 const ModelConfig& config, double epsilon, unsigned threads) {
    if (dataset.empty()) throw ConfigError("attention mse over an empty dataset");
    struct Pair {
        double video = 0.0, audio = 0.0;
    };
    std::vector<Pair> slots(dataset.size());
    parallel_for(dataset.size(), threads, [&](std::size_t i) {
        const VideoExample& ex = dataset.examples[i];
        ForwardOutput clean = forward(ex.video_frames, ex.audio_frames, params, config);
        Perturbation r = fgsm_perturbation(ex, params, config, epsilon);
        ForwardOutput pert = forward(add_tensors(ex.video_frames, r.video),
                                     add_tensors(ex.audio_frames, r.audio), params, config);
        const double t2 = double(ex.frames()) * double(ex.frames());
        slots[i].video = squared_distance(clean.attn_video, pert.attn_video) / t2;
        slots[i].audio = squared_distance(clean.attn_audio, pert.attn_audio) / t2;
    });

    AttentionMseReport rep;
    rep.per_example.reserve(slots.size());
    for (const Pair& p : slots) {
        rep.mean_video += p.video;
        rep.mean_audio += p.audio;
        rep.per_example.push_back(0.5 * (p.video + p.audio));
        rep.mean += rep.per_example.back();
    }
    rep.mean /= double(slots.size());
    rep.mean_video /= double(slots.size());
    rep.mean_audio /= double(slots.size());
    return rep;
}

void DeepFoolOptions::validate() const {
    if (max_iter == 0) throw ConfigError("deepfool: max_iter must be positive");
    if (!(overshoot >= 0.0) || !std::isfinite(overshoot))
        throw ConfigError("deepfool: overshoot must be finite and >= 0");
    if (num_classes < 2) throw ConfigError("deepfool: need at least 2 candidate classes");
}

DeepFoolResult deepfool(const VideoExample& example, const ModelParams& params,
                        const ModelConfig& config, const DeepFoolOptions& options) {
    options.validate();
    const std::size_t nv = example.video_frames.numel();
    const std::size_t na = example.audio_frames.numel();

    // Accumulated perturbation without the overshoot factor, in double.
    std::vector<double> acc_v(nv, 0.0), acc_a(na, 0.0);
    const double os = 1.0 + options.overshoot;

    auto perturbed = [&](const Tensor& base, const std::vector<double>& acc) {
        Tensor t = base;
        for (std::size_t i = 0; i < t.numel(); ++i)
            t.at(i) = float(double(t.at(i)) + os * acc[i]);
        return t;
    };

    std::size_t k0 = 0;
    std::vector<std::size_t> candidates;
    DeepFoolResult result;

    for (std::size_t step = 0; step <= options.max_iter; ++step) {
        Graph g;
        ParamNodes p = attach_params(g, params, config, /*trainable=*/false);
        NodeId xv = g.leaf(perturbed(example.video_frames, acc_v), true);
        NodeId xa = g.leaf(perturbed(example.audio_frames, acc_a), true);
        ForwardNodes f = build_forward(g, p, xv, xa, config);
        const Tensor& logits = g.value(f.logits);

        if (step == 0) {
            k0 = argmax_lowest(logits);
            // Highest original logits, top-1 first; ties break on class index.
            std::vector<std::size_t> order(logits.numel());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (logits.at(a) != logits.at(b)) return logits.at(a) > logits.at(b);
                return a < b;
            });
            std::size_t take = std::min(options.num_classes, order.size());
            for (std::size_t i = 0; i < take; ++i)
                if (order[i] != k0) candidates.push_back(order[i]);
        } else if (argmax_lowest(logits) != k0) {
            result.converged = true;
            break;
        }
        if (step == options.max_iter) break;

        // Nearest candidate boundary under the linearization at this point.
        double best_score = 0.0, best_margin = 0.0, best_norm2 = 0.0;
        GradientMap best_grads;
        bool found = false;
        for (std::size_t c : candidates) {
            Tensor sel({logits.numel()});
            sel.at(c) = 1.0f;
            sel.at(k0) = -1.0f;
            NodeId margin = g.matmul(f.logits, g.constant(std::move(sel)));
            GradientMap grads = g.backward(margin, {xv, xa});
            double norm2 = 0.0;
            for (const auto& [id, t] : grads)
                for (std::size_t i = 0; i < t.numel(); ++i)
                    norm2 += double(t.at(i)) * double(t.at(i));
            if (norm2 < 1e-24) continue;  // boundary direction vanishes
            double margin_abs = std::fabs(g.scalar_value(margin));
            double score = margin_abs / std::sqrt(norm2);
            if (!found || score < best_score) {
                found = true;
                best_score = score;
                best_margin = margin_abs;
                best_norm2 = norm2;
                best_grads = std::move(grads);
            }
        }
        if (!found) break;  // flat in every candidate direction

        const double factor = best_margin / best_norm2;
        const Tensor& gv = best_grads.at(xv);
        const Tensor& ga = best_grads.at(xa);
        for (std::size_t i = 0; i < nv; ++i) acc_v[i] += factor * double(gv.at(i));
        for (std::size_t i = 0; i < na; ++i) acc_a[i] += factor * double(ga.at(i));
        result.iterations = step + 1;
    }

    result.r_video = Tensor(example.video_frames.shape());
    result.r_audio = Tensor(example.audio_frames.shape());
    for (std::size_t i = 0; i < nv; ++i) result.r_video.at(i) = float(os * acc_v[i]);
    for (std::size_t i = 0; i < na; ++i) result.r_audio.at(i) = float(os * acc_a[i]);
    return result;
}

RobustnessReport average_robustness(const Dataset& dataset, const ModelParams& params,
                                    const ModelConfig& config, const DeepFoolOptions& options,
                                    double mse_epsilon, unsigned threads) {
    if (dataset.empty()) throw ConfigError("robustness over an empty dataset");
    options.validate();

    AttentionMseReport mse = attention_mse(dataset, params, config, mse_epsilon, threads);

    std::vector<RobustnessReport::Row> rows(dataset.size());
    parallel_for(dataset.size(), threads, [&](std::size_t i) {
        const VideoExample& ex = dataset.examples[i];
        DeepFoolResult r = deepfool(ex, params, config, options);
        double r_norm = std::sqrt(r.r_video.l2_norm() * r.r_video.l2_norm() +
                                  r.r_audio.l2_norm() * r.r_audio.l2_norm());
        double x_norm = std::sqrt(ex.video_frames.l2_norm() * ex.video_frames.l2_norm() +
                                  ex.audio_frames.l2_norm() * ex.audio_frames.l2_norm());
        RobustnessReport::Row row;
        row.id = ex.id;
        row.rho = x_norm > 0.0 ? r_norm / x_norm : 0.0;
        row.iterations = r.iterations;
        row.converged = r.converged;
        row.attention_mse = mse.per_example[i];
        rows[i] = std::move(row);
    });

    RobustnessReport rep;
    rep.rows = std::move(rows);
    std::size_t converged = 0;
    double rho_sum = 0.0;
    for (const auto& row : rep.rows) {
        rep.per_example_rho.push_back(row.rho);
        if (row.converged) {
            ++converged;
            rho_sum += row.rho;
            ++rep.iterations_histogram[row.iterations];
        }
    }
    if (converged == 0)
        throw NumericError("DeepFool converged on no example; rho_tot undefined");
    rep.rho_tot = rho_sum / double(converged);
    rep.fooled_fraction = double(converged) / double(rep.rows.size());
    return rep;
}

void write_robustness_csv(const std::string& path, const RobustnessReport& report) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(report.rows.size());
    for (const auto& r : report.rows)
        rows.push_back({r.id, format_double(r.rho), std::to_string(r.iterations),
                        r.converged ? "1" : "0", format_double(r.attention_mse)});
    write_csv(path, {"id", "rho", "iterations", "converged", "attention_mse"}, rows);
}

void write_robustness_summary_json(const std::string& path, const RobustnessReport& report) {
    nlohmann::json histogram = nlohmann::json::object();
    for (const auto& [iters, count] : report.iterations_histogram)
        histogram[std::to_string(iters)] = count;
    std::size_t converged = 0;
    double mse_sum = 0.0;
    for (const auto& r : report.rows) {
        if (r.converged) ++converged;
        mse_sum += r.attention_mse;
    }
    nlohmann::json j{
        {"rho_tot", report.rho_tot},
        {"fooled_fraction", report.fooled_fraction},
        {"num_examples", report.rows.size()},
        {"num_converged", converged},
        {"mean_attention_mse", report.rows.empty() ? 0.0 : mse_sum / double(report.rows.size())},
        {"iterations_histogram", histogram},
    };
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace aart

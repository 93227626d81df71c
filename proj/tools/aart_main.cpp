#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aart/attack_eval.hpp"
#include "aart/data.hpp"
#include "aart/errors.hpp"
#include "aart/evaluate.hpp"
#include "aart/losses.hpp"
#include "aart/model.hpp"
#include "aart/svg.hpp"
#include "aart/textio.hpp"
#include "aart/training.hpp"

namespace {

using namespace aart;

constexpr const char* kVersion = "1.0.0";

struct Global {
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string out_dir = ".";
};

std::string out_path(const Global& g, const std::string& name) {
    std::filesystem::create_directories(g.out_dir);
    return (std::filesystem::path(g.out_dir) / name).string();
}

void note_artifact(const std::string& path) { std::cout << "wrote " << path << "\n"; }

struct SplitFlags {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
    std::uint64_t seed = 1;
};

void add_split_flags(CLI::App* cmd, SplitFlags& s) {
    cmd->add_option("--train-frac", s.train, "Train split fraction")->capture_default_str();
    cmd->add_option("--val-frac", s.val, "Validation split fraction")->capture_default_str();
    cmd->add_option("--test-frac", s.test, "Test split fraction")->capture_default_str();
    cmd->add_option("--split-seed", s.seed, "Split shuffle seed")->capture_default_str();
}

Dataset select_split(const Dataset& full, const SplitFlags& s, const std::string& which) {
    if (which == "all") return full;
    Splits parts = split(full, s.train, s.val, s.test, s.seed);
    if (which == "train") return parts.train;
    if (which == "val") return parts.val;
    if (which == "test") return parts.test;
    throw ConfigError("unknown split '" + which + "'");
}

std::size_t longest_video(const Dataset& data) {
    std::size_t t = 1;
    for (const VideoExample& ex : data.examples) t = std::max(t, ex.frames());
    return t;
}

void check_compatible(const Dataset& data, const ModelConfig& config) {
    if (data.num_classes != config.num_classes || data.video_dim != config.video_dim ||
        data.audio_dim != config.audio_dim)
        throw ConfigError("dataset shape (classes " + std::to_string(data.num_classes) +
                          ", video dim " + std::to_string(data.video_dim) + ", audio dim " +
                          std::to_string(data.audio_dim) + ") does not match the checkpoint");
}

struct ModelFlags {
    std::size_t model_dim = 32;
    std::size_t heads = 8;
    bool positional = false;
};

void add_model_flags(CLI::App* cmd, ModelFlags& m) {
    cmd->add_option("--model-dim", m.model_dim, "Attention model dimension")
        ->capture_default_str();
    cmd->add_option("--heads", m.heads, "Attention heads")->capture_default_str();
    cmd->add_flag("--positional", m.positional, "Learned positional embeddings");
}

struct TrainFlags {
    std::string regime = "non_art";
    AdvConfig adv;
    double lr = 0.0002;
    std::size_t batch_size = 64;
    std::size_t eval_every = 200;
    std::size_t early_stop_patience = 5;
    std::size_t plateau_patience = 3;
    double plateau_factor = 0.1;
    std::size_t max_iterations = 5000;
};

void add_train_flags(CLI::App* cmd, TrainFlags& t) {
    cmd->add_option("--regime", t.regime, "Training regime: non_art, art or a_art")
        ->check(CLI::IsMember({"non_art", "art", "a_art"}))
        ->capture_default_str();
    cmd->add_option("--epsilon", t.adv.epsilon, "FGSM perturbation norm")->capture_default_str();
    cmd->add_option("--alpha", t.adv.alpha, "Adversarial loss weight")->capture_default_str();
    cmd->add_option("--beta-fr", t.adv.beta_fr, "Attention regularizer weight")
        ->capture_default_str();
    cmd->add_option("--lr", t.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--batch-size", t.batch_size, "Batch size")->capture_default_str();
    cmd->add_option("--eval-every", t.eval_every, "Iterations between validation evals")
        ->capture_default_str();
    cmd->add_option("--early-stop-patience", t.early_stop_patience,
                    "Evals without improvement before stopping")
        ->capture_default_str();
    cmd->add_option("--plateau-patience", t.plateau_patience,
                    "Evals without improvement before an lr cut")
        ->capture_default_str();
    cmd->add_option("--plateau-factor", t.plateau_factor, "Lr multiplier at each cut")
        ->capture_default_str();
    cmd->add_option("--max-iterations", t.max_iterations, "Iteration budget")
        ->capture_default_str();
}

TrainConfig train_config_from(const TrainFlags& t, const Global& g) {
    TrainConfig tc;
    tc.regime = parse_regime(t.regime);
    tc.adv = t.adv;
    tc.lr = t.lr;
    tc.batch_size = t.batch_size;
    tc.eval_every = t.eval_every;
    tc.early_stop_patience = t.early_stop_patience;
    tc.plateau_patience = t.plateau_patience;
    tc.plateau_factor = t.plateau_factor;
    tc.max_iterations = t.max_iterations;
    tc.seed = g.seed;
    tc.threads = g.threads;
    return tc;
}

ModelConfig model_config_from(const Dataset& full, const ModelFlags& m, const Global& g) {
    ModelConfig mc;
    mc.num_classes = full.num_classes;
    mc.video_dim = full.video_dim;
    mc.audio_dim = full.audio_dim;
    mc.model_dim = m.model_dim;
    mc.num_heads = m.heads;
    mc.max_frames = longest_video(full);
    mc.seed = g.seed;
    mc.positional = m.positional;
    mc.validate();
    return mc;
}

nlohmann::json manifest_json(const std::string& dataset_path, const SplitFlags& s,
                             const ModelConfig& mc, const TrainConfig& tc,
                             const std::string& checkpoint_path, const std::string& report_path,
                             const TrainReport& report) {
    return nlohmann::json{
        {"tool_version", kVersion},
        {"command", "train"},
        {"dataset", dataset_path},
        {"split",
         {{"train", s.train}, {"val", s.val}, {"test", s.test}, {"seed", s.seed}}},
        {"model",
         {{"num_classes", mc.num_classes},
          {"video_dim", mc.video_dim},
          {"audio_dim", mc.audio_dim},
          {"model_dim", mc.model_dim},
          {"num_heads", mc.num_heads},
          {"max_frames", mc.max_frames},
          {"seed", mc.seed},
          {"positional", mc.positional}}},
        {"train",
         {{"regime", regime_name(tc.regime)},
          {"epsilon", tc.adv.epsilon},
          {"alpha", tc.adv.alpha},
          {"beta_fr", tc.adv.beta_fr},
          {"lr", tc.lr},
          {"batch_size", tc.batch_size},
          {"eval_every", tc.eval_every},
          {"early_stop_patience", tc.early_stop_patience},
          {"plateau_patience", tc.plateau_patience},
          {"plateau_factor", tc.plateau_factor},
          {"max_iterations", tc.max_iterations},
          {"seed", tc.seed}}},
        {"artifacts", {{"checkpoint", checkpoint_path}, {"report", report_path}}},
        {"results",
         {{"iterations", report.iterations},
          {"stop_reason", report.stop_reason},
          {"best_iteration", report.best_iteration},
          {"best_val_gap", report.best_val_gap}}},
    };
}

// Column means ("attention received per frame") or row entropies of a
// row-stochastic T x T map.
std::vector<double> attention_profile(const Tensor& attention, bool row_entropy) {
    const std::size_t t = attention.dim(0);
    std::vector<double> out(t, 0.0);
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = 0; j < t; ++j) {
            const double p = attention.at(i * t + j);
            if (row_entropy) {
                if (p > 1e-12) out[i] -= p * std::log(p);
            } else {
                out[j] += p / double(t);
            }
        }
    }
    return out;
}

std::string trimmed(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Plain key=value defaults for a subcommand; '#' starts a comment line.
// A key never overrides the same option given explicitly on the command line.
void apply_config_file(CLI::App* cmd, const std::string& path) {
    if (path.empty()) return;
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
    std::istringstream in(read_text_file(path));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trimmed(line);
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
        const std::string key = trimmed(line.substr(0, eq));
        const std::string value = trimmed(line.substr(eq + 1));
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (!opt)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown option '" +
                              key + "'");
        if (opt->count() > 0) continue;
        opt->add_result(value)->run_callback();
    }
}

void print_metrics(const MetricsSummary& m) {
    std::cout << "GAP " << format_double(m.gap) << "\n"
              << "PERR " << format_double(m.perr) << "\n"
              << "Hit@1 " << format_double(m.hit_at_1) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attention-based video classifier with adversarial training and evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Global g;
    app.add_option("--seed", g.seed, "Master seed (data, init, shuffling)")
        ->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads, 0 = hardware")
        ->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "Directory for output artifacts")
        ->capture_default_str();

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset file");
    synth->fallthrough();
    SyntheticSpec spec;
    std::string synth_out, synth_jsonl;
    synth->add_option("--out", synth_out, "Output dataset path")->required();
    synth->add_option("--classes", spec.num_classes, "Label vocabulary size")
        ->capture_default_str();
    synth->add_option("--video-dim", spec.video_dim, "Video feature dimension")
        ->capture_default_str();
    synth->add_option("--audio-dim", spec.audio_dim, "Audio feature dimension")
        ->capture_default_str();
    synth->add_option("--min-frames", spec.min_frames, "Minimum frames per video")
        ->capture_default_str();
    synth->add_option("--max-frames", spec.max_frames, "Maximum frames per video")
        ->capture_default_str();
    synth->add_option("--videos", spec.num_videos, "Number of videos")->capture_default_str();
    synth->add_option("--min-labels", spec.min_labels, "Minimum labels per video")
        ->capture_default_str();
    synth->add_option("--max-labels", spec.max_labels, "Maximum labels per video")
        ->capture_default_str();
    synth->add_option("--noise-std", spec.noise_std, "Background noise level")
        ->capture_default_str();
    synth->add_option("--motif-length", spec.motif_length, "Frames per class motif")
        ->capture_default_str();
    synth->add_option("--jsonl", synth_jsonl, "Optional JSONL debug export path");
    synth->callback([&] {
        spec.seed = g.seed;
        Dataset data = generate_synthetic(spec);
        write_dataset(synth_out, data);
        note_artifact(synth_out);
        if (!synth_jsonl.empty()) {
            write_dataset_jsonl(synth_jsonl, data);
            note_artifact(synth_jsonl);
        }
    });

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
    train_cmd->fallthrough();
    std::string train_data, train_config_path;
    SplitFlags train_split;
    ModelFlags model_flags;
    TrainFlags train_flags;
    train_cmd->add_option("--data", train_data, "Dataset file")->required();
    train_cmd->add_option("--config", train_config_path,
                          "Key=value defaults (option names without --); explicit flags win");
    add_split_flags(train_cmd, train_split);
    add_model_flags(train_cmd, model_flags);
    add_train_flags(train_cmd, train_flags);
    train_cmd->callback([&] {
        apply_config_file(train_cmd, train_config_path);
        Dataset full = read_dataset(train_data);
        Splits parts = split(full, train_split.train, train_split.val, train_split.test,
                             train_split.seed);
        ModelConfig mc = model_config_from(full, model_flags, g);
        TrainConfig tc = train_config_from(train_flags, g);
        TrainResult res = train(tc, mc, parts.train, parts.val);

        const std::string ckpt = out_path(g, "checkpoint.aat");
        const std::string report = out_path(g, "train_report.csv");
        const std::string manifest = out_path(g, "manifest.json");
        save_checkpoint(ckpt, res.params, mc);
        write_train_report_csv(report, res.report);
        for (const std::string& p : {ckpt, report})
            if (!std::filesystem::exists(p)) throw IoError("artifact missing: " + p);
        write_text_file(manifest,
                        manifest_json(train_data, train_split, mc, tc, ckpt, report,
                                      res.report)
                                .dump(2) +
                            "\n");
        std::cout << "regime " << regime_name(tc.regime) << "\n"
                  << "iterations " << res.report.iterations << "\n"
                  << "stop_reason " << res.report.stop_reason << "\n"
                  << "best_iteration " << res.report.best_iteration << "\n"
                  << "best_val_gap " << format_double(res.report.best_val_gap) << "\n";
        note_artifact(ckpt);
        note_artifact(report);
        note_artifact(manifest);
    });

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "Report GAP/PERR/Hit@1 for a checkpoint");
    eval_cmd->fallthrough();
    std::string eval_ckpt, eval_data, eval_split = "test", eval_out;
    SplitFlags eval_split_flags;
    double eval_eps = 0.0;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
    eval_cmd->add_option("--data", eval_data, "Dataset file")->required();
    eval_cmd->add_option("--split", eval_split, "Split to evaluate")
        ->check(CLI::IsMember({"train", "val", "test", "all"}))
        ->capture_default_str();
    add_split_flags(eval_cmd, eval_split_flags);
    auto* adv_opt = eval_cmd->add_option("--adversarial", eval_eps,
                                         "Evaluate under an FGSM perturbation of this norm");
    eval_cmd->add_option("--out", eval_out, "Optional metrics CSV path");
    eval_cmd->callback([&] {
        auto [params, mc] = load_checkpoint(eval_ckpt);
        Dataset full = read_dataset(eval_data);
        check_compatible(full, mc);
        Dataset part = select_split(full, eval_split_flags, eval_split);
        if (*adv_opt) part = make_adversarial_testset(part, params, mc, eval_eps, g.threads);
        MetricsSummary m = evaluate(part, params, mc, g.threads);
        print_metrics(m);
        if (!eval_out.empty()) {
            write_csv(eval_out, {"gap", "perr", "hit_at_1"},
                      {{format_double(m.gap), format_double(m.perr),
                        format_double(m.hit_at_1)}});
            note_artifact(eval_out);
        }
    });

    // ---- attack ----
    auto* attack_cmd =
        app.add_subcommand("attack", "Write an FGSM-perturbed copy of a dataset");
    attack_cmd->fallthrough();
    std::string attack_ckpt, attack_data, attack_out, attack_split = "all";
    SplitFlags attack_split_flags;
    double attack_eps = 0.5;
    attack_cmd->add_option("--checkpoint", attack_ckpt, "Checkpoint file")->required();
    attack_cmd->add_option("--data", attack_data, "Dataset file")->required();
    attack_cmd->add_option("--out", attack_out, "Output dataset path")->required();
    attack_cmd->add_option("--epsilon", attack_eps, "Perturbation norm per modality")
        ->capture_default_str();
    attack_cmd->add_option("--split", attack_split, "Split to perturb")
        ->check(CLI::IsMember({"train", "val", "test", "all"}))
        ->capture_default_str();
    add_split_flags(attack_cmd, attack_split_flags);
    attack_cmd->callback([&] {
        auto [params, mc] = load_checkpoint(attack_ckpt);
        Dataset full = read_dataset(attack_data);
        check_compatible(full, mc);
        Dataset part = select_split(full, attack_split_flags, attack_split);
        Dataset adv = make_adversarial_testset(part, params, mc, attack_eps, g.threads);
        write_dataset(attack_out, adv);
        note_artifact(attack_out);
    });

    // ---- robustness ----
    auto* robust_cmd =
        app.add_subcommand("robustness", "DeepFool average robustness and attention MSE");
    robust_cmd->fallthrough();
    std::string robust_ckpt, robust_data, robust_split = "test";
    SplitFlags robust_split_flags;
    DeepFoolOptions fool;
    double mse_eps = 0.5;
    std::size_t robust_limit = 0;
    robust_cmd->add_option("--checkpoint", robust_ckpt, "Checkpoint file")->required();
    robust_cmd->add_option("--data", robust_data, "Dataset file")->required();
    robust_cmd->add_option("--split", robust_split, "Split to evaluate")
        ->check(CLI::IsMember({"train", "val", "test", "all"}))
        ->capture_default_str();
    add_split_flags(robust_cmd, robust_split_flags);
    robust_cmd->add_option("--max-iter", fool.max_iter, "DeepFool iteration cap")
        ->capture_default_str();
    robust_cmd->add_option("--overshoot", fool.overshoot, "DeepFool overshoot")
        ->capture_default_str();
    robust_cmd->add_option("--top-classes", fool.num_classes, "Candidate classes")
        ->capture_default_str();
    robust_cmd->add_option("--mse-epsilon", mse_eps, "FGSM norm for the attention MSE column")
        ->capture_default_str();
    robust_cmd->add_option("--limit", robust_limit, "Evaluate only the first N examples, 0 = all")
        ->capture_default_str();
    robust_cmd->callback([&] {
        auto [params, mc] = load_checkpoint(robust_ckpt);
        Dataset full = read_dataset(robust_data);
        check_compatible(full, mc);
        Dataset part = select_split(full, robust_split_flags, robust_split);
        if (robust_limit > 0 && robust_limit < part.size())
            part.examples.resize(robust_limit);
        RobustnessReport rep =
            average_robustness(part, params, mc, fool, mse_eps, g.threads);
        const std::string csv = out_path(g, "robustness.csv");
        const std::string summary = out_path(g, "robustness_summary.json");
        write_robustness_csv(csv, rep);
        write_robustness_summary_json(summary, rep);
        std::cout << "rho_tot " << format_double(rep.rho_tot) << "\n"
                  << "fooled_fraction " << format_double(rep.fooled_fraction) << "\n";
        note_artifact(csv);
        note_artifact(summary);
    });

    // ---- sweep ----
    auto* sweep_cmd =
        app.add_subcommand("sweep", "Train across a hyperparameter grid and plot val GAP");
    sweep_cmd->fallthrough();
    std::string sweep_data, sweep_param, sweep_config_path;
    std::vector<double> sweep_grid;
    SplitFlags sweep_split;
    ModelFlags sweep_model;
    TrainFlags sweep_train;
    sweep_train.regime = "art";
    sweep_cmd->add_option("--data", sweep_data, "Dataset file")->required();
    sweep_cmd->add_option("--config", sweep_config_path,
                          "Key=value defaults (option names without --); explicit flags win");
    sweep_cmd->add_option("--param", sweep_param, "Swept parameter: epsilon or alpha")
        ->check(CLI::IsMember({"epsilon", "alpha"}))
        ->required();
    sweep_cmd->add_option("--grid", sweep_grid, "Grid values")
        ->required()
        ->expected(-1)
        ->delimiter(',');
    add_split_flags(sweep_cmd, sweep_split);
    add_model_flags(sweep_cmd, sweep_model);
    add_train_flags(sweep_cmd, sweep_train);
    sweep_cmd->callback([&] {
        apply_config_file(sweep_cmd, sweep_config_path);
        Dataset full = read_dataset(sweep_data);
        Splits parts =
            split(full, sweep_split.train, sweep_split.val, sweep_split.test, sweep_split.seed);
        ModelConfig mc = model_config_from(full, sweep_model, g);
        TrainConfig tc = train_config_from(sweep_train, g);
        std::vector<SweepPoint> points =
            sweep(tc, mc, sweep_param, sweep_grid, parts.train, parts.val);

        const std::string csv = out_path(g, "sweep.csv");
        write_sweep_csv(csv, points);

        PlotPanel panel;
        panel.title = "validation GAP vs " + sweep_param;
        panel.x_label = sweep_param;
        panel.y_label = "validation GAP";
        panel.log_x = sweep_param == "epsilon";
        PlotSeries series;
        series.label = regime_name(tc.regime);
        for (const SweepPoint& p : points) {
            if (p.status != "ok") continue;
            if (p.value <= 0.0) panel.log_x = false;
            series.x.push_back(p.value);
            series.y.push_back(p.val_gap);
        }
        panel.series.push_back(std::move(series));
        const std::string svg = out_path(g, "sweep.svg");
        write_svg_plot(svg, {panel});

        for (const SweepPoint& p : points)
            std::cout << p.param << " " << format_double(p.value) << " " << p.status << " "
                      << format_double(p.val_gap) << "\n";
        note_artifact(csv);
        note_artifact(svg);
    });

    // ---- plot-attention ----
    auto* plot_cmd = app.add_subcommand(
        "plot-attention", "Clean vs adversarial attention profile for one video");
    plot_cmd->fallthrough();
    std::string plot_ckpt, plot_data, plot_split = "test", plot_id;
    SplitFlags plot_split_flags;
    double plot_eps = 0.5;
    bool row_entropy = false;
    plot_cmd->add_option("--checkpoint", plot_ckpt, "Checkpoint file")->required();
    plot_cmd->add_option("--data", plot_data, "Dataset file")->required();
    plot_cmd->add_option("--split", plot_split, "Split to search for the video")
        ->check(CLI::IsMember({"train", "val", "test", "all"}))
        ->capture_default_str();
    add_split_flags(plot_cmd, plot_split_flags);
    plot_cmd->add_option("--video-id", plot_id, "Video id, default first of the split");
    plot_cmd->add_option("--epsilon", plot_eps, "FGSM norm for the adversarial curve")
        ->capture_default_str();
    plot_cmd->add_flag("--row-entropy", row_entropy,
                       "Plot per-frame attention entropy instead of column means");
    plot_cmd->callback([&] {
        auto [params, mc] = load_checkpoint(plot_ckpt);
        Dataset full = read_dataset(plot_data);
        check_compatible(full, mc);
        Dataset part = select_split(full, plot_split_flags, plot_split);
        if (part.empty()) throw ConfigError("selected split is empty");
        const VideoExample* ex = &part.examples.front();
        if (!plot_id.empty()) {
            ex = nullptr;
            for (const VideoExample& e : part.examples)
                if (e.id == plot_id) ex = &e;
            if (!ex) throw ConfigError("video id '" + plot_id + "' not in the selected split");
        }

        ForwardOutput clean = forward(ex->video_frames, ex->audio_frames, params, mc);
        Perturbation r = fgsm_perturbation(*ex, params, mc, plot_eps);
        Tensor xv = ex->video_frames, xa = ex->audio_frames;
        for (std::size_t i = 0; i < xv.numel(); ++i) xv.at(i) += r.video.at(i);
        for (std::size_t i = 0; i < xa.numel(); ++i) xa.at(i) += r.audio.at(i);
        ForwardOutput adv = forward(xv, xa, params, mc);

        std::vector<double> vc = attention_profile(clean.attn_video, row_entropy);
        std::vector<double> va = attention_profile(adv.attn_video, row_entropy);
        std::vector<double> ac = attention_profile(clean.attn_audio, row_entropy);
        std::vector<double> aa = attention_profile(adv.attn_audio, row_entropy);

        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < vc.size(); ++i)
            rows.push_back({std::to_string(i), format_double(vc[i]), format_double(va[i]),
                            format_double(ac[i]), format_double(aa[i])});
        const std::string csv = out_path(g, "attention_profile.csv");
        write_csv(csv,
                  {"frame", "video_clean", "video_adversarial", "audio_clean",
                   "audio_adversarial"},
                  rows);

        const std::string measure = row_entropy ? "row entropy" : "column mean";
        std::vector<double> frames(vc.size());
        for (std::size_t i = 0; i < frames.size(); ++i) frames[i] = double(i);
        PlotPanel video_panel, audio_panel;
        video_panel.title = "video attention profile, " + ex->id;
        audio_panel.title = "audio attention profile, " + ex->id;
        for (PlotPanel* p : {&video_panel, &audio_panel}) {
            p->x_label = "frame";
            p->y_label = measure;
        }
        video_panel.series.push_back({"clean", frames, vc});
        video_panel.series.push_back({"adversarial", frames, va});
        audio_panel.series.push_back({"clean", frames, ac});
        audio_panel.series.push_back({"adversarial", frames, aa});
        const std::string svg = out_path(g, "attention_profile.svg");
        write_svg_plot(svg, {video_panel, audio_panel});
        note_artifact(csv);
        note_artifact(svg);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

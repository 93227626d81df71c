#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <span>
#include <vector>

#include "aart/data.hpp"
#include "aart/errors.hpp"
#include "aart/losses.hpp"
#include "aart/model.hpp"
#include "aart/rng.hpp"
#include "aart/training.hpp"

using namespace aart;

namespace {

ModelConfig small_config() {
    ModelConfig cfg;
    cfg.num_classes = 4;
    cfg.video_dim = 6;
    cfg.audio_dim = 3;
    cfg.model_dim = 4;
    cfg.num_heads = 2;
    cfg.max_frames = 6;
    cfg.seed = 9;
    return cfg;
}

Tensor random_frames(Rng& rng, std::size_t t, std::size_t d) {
    Tensor x({t, d});
    for (std::size_t i = 0; i < x.numel(); ++i) x.at(i) = rng.normal_f32(0.0f, 1.0f);
    return x;
}

VideoExample random_example(Rng& rng, const ModelConfig& cfg, std::size_t t) {
    VideoExample ex;
    ex.id = "ex";
    ex.video_frames = random_frames(rng, t, cfg.video_dim);
    ex.audio_frames = random_frames(rng, t, cfg.audio_dim);
    std::uint32_t first = static_cast<std::uint32_t>(rng.below(cfg.num_classes));
    ex.labels = {first};
    if (rng.uniform01() < 0.5) {
        std::uint32_t second = static_cast<std::uint32_t>(rng.below(cfg.num_classes));
        if (second != first) {
            ex.labels.push_back(second);
            if (ex.labels[0] > ex.labels[1]) std::swap(ex.labels[0], ex.labels[1]);
        }
    }
    return ex;
}

Tensor add2(const Tensor& a, const Tensor& b) {
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) += b.at(i);
    return out;
}

double mean_clean_ce(std::span<const VideoExample> batch, const ModelParams& params,
                     const ModelConfig& cfg) {
    double acc = 0.0;
    for (const VideoExample& ex : batch) {
        ForwardOutput out = forward(ex.video_frames, ex.audio_frames, params, cfg);
        acc += classification_loss(out.probs, ex.label_vector(cfg.num_classes));
    }
    return acc / static_cast<double>(batch.size());
}

double example_loss_value(const VideoExample& ex, const ModelParams& params,
                          const ModelConfig& cfg, Regime regime, const AdvConfig& adv,
                          const Perturbation* r) {
    ExampleLossGraph built = build_example_loss(ex, params, cfg, regime, adv, r, false);
    return built.graph.scalar_value(built.loss);
}

}  // namespace

TEST_CASE("classification loss pinned values") {
    SUBCASE("probs equal to clamped labels give a near-zero loss") {
        Tensor p({2}, {1e-7f, 1.0f - 1e-7f});
        Tensor y({2}, {0.0f, 1.0f});
        double loss = classification_loss(p, y);
        CHECK(loss >= 0.0);
        CHECK(loss < 1e-6);
    }
    SUBCASE("p = 0.5 everywhere gives ln 2 for any labels") {
        Tensor p = Tensor::full({5}, 0.5f);
        Tensor y({5}, {1.0f, 0.0f, 1.0f, 1.0f, 0.0f});
        CHECK(classification_loss(p, y) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("K=3 hand-evaluated value") {
        Tensor p({3}, {0.9f, 0.2f, 0.5f});
        Tensor y({3}, {1.0f, 0.0f, 1.0f});
        const double expected = -(std::log(static_cast<double>(p.at(0))) +
                                  std::log(1.0 - static_cast<double>(p.at(1))) +
                                  std::log(static_cast<double>(p.at(2)))) /
                                3.0;
        double loss = classification_loss(p, y);
        CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
        CHECK(loss == doctest::Approx(0.3405).epsilon(2e-4));
    }
    SUBCASE("length mismatch throws") {
        CHECK_THROWS_AS(classification_loss(Tensor::full({3}, 0.5f), Tensor::full({4}, 1.0f)),
                        ShapeError);
    }
    SUBCASE("graph bce op computes the same value") {
        Rng rng(21);
        for (int trial = 0; trial < 10; ++trial) {
            Tensor p({7});
            Tensor y({7});
            for (std::size_t i = 0; i < 7; ++i) {
                p.at(i) = rng.uniform_f32(0.001f, 0.999f);
                y.at(i) = rng.below(2) ? 1.0f : 0.0f;
            }
            Graph g;
            NodeId loss = g.bce(g.leaf(p, true), y);
            CHECK(g.scalar_value(loss) ==
                  doctest::Approx(classification_loss(p, y)).epsilon(1e-12));
        }
    }
}

TEST_CASE("regime names round-trip and reject unknown values") {
    CHECK(parse_regime("non_art") == Regime::non_art);
    CHECK(parse_regime("art") == Regime::art);
    CHECK(parse_regime("a_art") == Regime::a_art);
    for (Regime r : {Regime::non_art, Regime::art, Regime::a_art})
        CHECK(parse_regime(regime_name(r)) == r);
    CHECK_THROWS_AS(parse_regime("fgsm"), ConfigError);
}

TEST_CASE("AdvConfig validation") {
    AdvConfig ok;
    ok.validate();
    AdvConfig bad = ok;
    bad.epsilon = -0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ok;
    bad.alpha = std::nan("");
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ok;
    bad.beta_fr = -1e-9;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("fgsm perturbation with epsilon 0 is the zero tensor") {
    ModelConfig cfg = small_config();
    ModelParams params = init_params(cfg);
    Rng rng(4);
    VideoExample ex = random_example(rng, cfg, 4);
    Perturbation r = fgsm_perturbation(ex, params, cfg, 0.0);
    CHECK(r.video == Tensor::zeros({4, cfg.video_dim}));
    CHECK(r.audio == Tensor::zeros({4, cfg.audio_dim}));
    CHECK_FALSE(r.video_degenerate);
    CHECK_FALSE(r.audio_degenerate);
    CHECK_THROWS_AS(fgsm_perturbation(ex, params, cfg, -0.1), ConfigError);
}

TEST_CASE("fgsm perturbation norm equals epsilon per modality") {
    ModelConfig cfg = small_config();
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        cfg.seed = 100 + static_cast<std::uint64_t>(trial);
        ModelParams params = init_params(cfg);
        VideoExample ex = random_example(rng, cfg, 2 + rng.below(4));
        for (double eps : {0.1, 0.5, 1.0}) {
            Perturbation r = fgsm_perturbation(ex, params, cfg, eps);
            REQUIRE_FALSE(r.video_degenerate);
            REQUIRE_FALSE(r.audio_degenerate);
            CHECK(std::fabs(r.video.l2_norm() - eps) <= 1e-5);
            CHECK(std::fabs(r.audio.l2_norm() - eps) <= 1e-5);
        }
    }
}

TEST_CASE("fgsm perturbation is deterministic") {
    ModelConfig cfg = small_config();
    ModelParams params = init_params(cfg);
    Rng rng(5);
    VideoExample ex = random_example(rng, cfg, 5);
    Perturbation a = fgsm_perturbation(ex, params, cfg, 0.5);
    Perturbation b = fgsm_perturbation(ex, params, cfg, 0.5);
    CHECK(a.video == b.video);
    CHECK(a.audio == b.audio);
}

TEST_CASE("zeroed input projection makes that modality's gradient degenerate") {
    ModelConfig cfg = small_config();
    ModelParams params = init_params(cfg);
    params.video.w_in = Tensor::zeros({cfg.video_dim, cfg.model_dim});
    Rng rng(6);
    VideoExample ex = random_example(rng, cfg, 3);
    Perturbation r = fgsm_perturbation(ex, params, cfg, 0.5);
    CHECK(r.video_degenerate);
    CHECK(r.video == Tensor::zeros({3, cfg.video_dim}));
    CHECK_FALSE(r.audio_degenerate);
    CHECK(std::fabs(r.audio.l2_norm() - 0.5) <= 1e-5);
}

TEST_CASE("fgsm direction matches the hand-derived toy gradient") {
    // One frame, one head, one model dim: the attention block reduces to
    // z_m = (x_m . w_in_m) * w_v_m, so the input gradient has the closed form
    // (p - y) * w_cls_m * w_v_m * w_in_m.
    ModelConfig cfg;
    cfg.num_classes = 1;
    cfg.video_dim = 2;
    cfg.audio_dim = 2;
    cfg.model_dim = 1;
    cfg.num_heads = 1;
    cfg.max_frames = 4;

    ModelParams p;
    p.video.w_in = Tensor({2, 1}, {1.0f, 2.0f});
    p.video.w_q = Tensor({1, 1}, {0.3f});
    p.video.w_k = Tensor({1, 1}, {-0.4f});
    p.video.w_v = Tensor({1, 1}, {0.5f});
    p.audio.w_in = Tensor({2, 1}, {0.2f, -0.1f});
    p.audio.w_q = Tensor({1, 1}, {0.6f});
    p.audio.w_k = Tensor({1, 1}, {0.1f});
    p.audio.w_v = Tensor({1, 1}, {0.8f});
    p.w_cls = Tensor({2, 1}, {0.7f, 0.4f});
    p.b_cls = Tensor({1}, {0.1f});

    VideoExample ex;
    ex.id = "toy";
    ex.video_frames = Tensor({1, 2}, {1.0f, 0.25f});
    ex.audio_frames = Tensor({1, 2}, {0.2f, 0.3f});
    ex.labels = {0};

    const double zv = (1.0 * 1.0 + 0.25 * 2.0) * 0.5;
    const double za = (0.2 * 0.2 + 0.3 * -0.1) * 0.8;
    const double logit = 0.7 * zv + 0.4 * za + 0.1;
    const double prob = 1.0 / (1.0 + std::exp(-logit));
    const double dl = prob - 1.0;  // y = 1

    const double gv[2] = {dl * 0.7 * 0.5 * 1.0, dl * 0.7 * 0.5 * 2.0};
    const double ga[2] = {dl * 0.4 * 0.8 * 0.2, dl * 0.4 * 0.8 * -0.1};
    const double nv = std::hypot(gv[0], gv[1]);
    const double na = std::hypot(ga[0], ga[1]);

    const double eps = 0.5;
    Perturbation r = fgsm_perturbation(ex, p, cfg, eps);
    REQUIRE_FALSE(r.video_degenerate);
    REQUIRE_FALSE(r.audio_degenerate);
    for (int i = 0; i < 2; ++i) {
        CHECK(static_cast<double>(r.video.at(i)) ==
              doctest::Approx(eps * gv[i] / nv).epsilon(2e-5));
        CHECK(static_cast<double>(r.audio.at(i)) ==
              doctest::Approx(eps * ga[i] / na).epsilon(2e-5));
    }
    CHECK(std::fabs(r.video.l2_norm() - eps) <= 1e-5);
}

TEST_CASE("adversarial loss degenerate cases and component oracle") {
    ModelConfig cfg = small_config();
    ModelParams params = init_params(cfg);
    Rng rng(17);
    std::vector<VideoExample> batch;
    for (int i = 0; i < 6; ++i) batch.push_back(random_example(rng, cfg, 3 + rng.below(3)));

    const double clean = mean_clean_ce(batch, params, cfg);

    SUBCASE("epsilon 0 collapses to (1 + alpha) times the clean loss") {
        AdvConfig adv;
        adv.epsilon = 0.0;
        adv.alpha = 0.7;
        CHECK(adversarial_loss(batch, params, cfg, adv) ==
              doctest::Approx((1.0 + adv.alpha) * clean).epsilon(1e-12));
    }
    SUBCASE("alpha 0 collapses to the clean loss exactly") {
        AdvConfig adv;
        adv.epsilon = 0.5;
        adv.alpha = 0.0;
        CHECK(adversarial_loss(batch, params, cfg, adv) == clean);
    }
    SUBCASE("value equals the sum of independently computed terms") {
        AdvConfig adv;
        adv.epsilon = 0.5;
        adv.alpha = 1.0;
        double adv_term = 0.0;
        for (const VideoExample& ex : batch) {
            Perturbation r = fgsm_perturbation(ex, params, cfg, adv.epsilon);
            ForwardOutput out = forward(add2(ex.video_frames, r.video),
                                        add2(ex.audio_frames, r.audio), params, cfg);
            adv_term += classification_loss(out.probs, ex.label_vector(cfg.num_classes));
        }
        adv_term /= static_cast<double>(batch.size());
        CHECK(adversarial_loss(batch, params, cfg, adv) ==
              doctest::Approx(clean + adv.alpha * adv_term).epsilon(1e-6));
    }
    SUBCASE("empty batch throws") {
        CHECK_THROWS_AS(adversarial_loss({}, params, cfg, AdvConfig{}), ConfigError);
    }
}

TEST_CASE("attention regularizer pinned values and plain-loop oracle") {
    SUBCASE("identical outputs give zero") {
        ForwardOutput a;
        a.attn_video = Tensor({2, 2}, {0.5f, 0.5f, 0.25f, 0.75f});
        a.attn_audio = Tensor({2, 2}, {1.0f, 0.0f, 0.0f, 1.0f});
        CHECK(attention_regularizer(a, a) == 0.0);
    }
    SUBCASE("permuted identity differing in one modality gives 2") {
        ForwardOutput clean, adv;
        clean.attn_video = Tensor({2, 2}, {1.0f, 0.0f, 0.0f, 1.0f});
        adv.attn_video = Tensor({2, 2}, {0.0f, 1.0f, 1.0f, 0.0f});
        clean.attn_audio = Tensor({2, 2}, {0.5f, 0.5f, 0.5f, 0.5f});
        adv.attn_audio = clean.attn_audio;
        CHECK(attention_regularizer(clean, adv) == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("random pair matches the sqrt-of-squared-differences loop") {
        Rng rng(40);
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t t = 2 + rng.below(4);
            ForwardOutput clean, adv;
            clean.attn_video = random_frames(rng, t, t);
            clean.attn_audio = random_frames(rng, t, t);
            adv.attn_video = random_frames(rng, t, t);
            adv.attn_audio = random_frames(rng, t, t);
            auto fr = [](const Tensor& a, const Tensor& b) {
                double acc = 0.0;
                for (std::size_t i = 0; i < a.numel(); ++i) {
                    const double d =
                        static_cast<double>(a.at(i)) - static_cast<double>(b.at(i));
                    acc += d * d;
                }
                return std::sqrt(acc);
            };
            const double expected = fr(clean.attn_video, adv.attn_video) +
                                    fr(clean.attn_audio, adv.attn_audio);
            CHECK(attention_regularizer(clean, adv) ==
                  doctest::Approx(expected).epsilon(1e-12));
        }
    }
    SUBCASE("frame-count mismatch throws") {
        ForwardOutput clean, adv;
        clean.attn_video = Tensor({2, 2}, {1.0f, 0.0f, 0.0f, 1.0f});
        clean.attn_audio = clean.attn_video;
        adv.attn_video = Tensor({3, 3});
        adv.attn_audio = Tensor({3, 3});
        CHECK_THROWS_AS(attention_regularizer(clean, adv), ShapeError);
    }
}

TEST_CASE("total loss degenerate cases and component oracle") {
    ModelConfig cfg = small_config();
    ModelParams params = init_params(cfg);
    Rng rng(23);
    std::vector<VideoExample> batch;
    for (int i = 0; i < 6; ++i) batch.push_back(random_example(rng, cfg, 3 + rng.below(3)));

    SUBCASE("beta 0 equals the adversarial loss exactly") {
        AdvConfig adv;
        adv.beta_fr = 0.0;
        CHECK(total_loss(batch, params, cfg, adv) == adversarial_loss(batch, params, cfg, adv));
    }
    SUBCASE("epsilon 0 removes the regularizer") {
        AdvConfig adv;
        adv.epsilon = 0.0;
        const double clean = mean_clean_ce(batch, params, cfg);
        CHECK(total_loss(batch, params, cfg, adv) ==
              doctest::Approx((1.0 + adv.alpha) * clean).epsilon(1e-12));
    }
    SUBCASE("defaults equal the sum of separately computed components") {
        AdvConfig adv;
        double clean_term = 0.0, adv_term = 0.0, fr_term = 0.0;
        for (const VideoExample& ex : batch) {
            Tensor y = ex.label_vector(cfg.num_classes);
            ForwardOutput clean = forward(ex.video_frames, ex.audio_frames, params, cfg);
            clean_term += classification_loss(clean.probs, y);
            Perturbation r = fgsm_perturbation(ex, params, cfg, adv.epsilon);
            ForwardOutput pert = forward(add2(ex.video_frames, r.video),
                                         add2(ex.audio_frames, r.audio), params, cfg);
            adv_term += classification_loss(pert.probs, y);
            fr_term += attention_regularizer(clean, pert);
        }
        const double n = static_cast<double>(batch.size());
        const double expected =
            clean_term / n + adv.alpha * (adv_term / n) + adv.beta_fr * (fr_term / n);
        CHECK(total_loss(batch, params, cfg, adv) == doctest::Approx(expected).epsilon(1e-6));
    }
    SUBCASE("loss nesting holds for nonnegative weights") {
        AdvConfig adv;
        CHECK(total_loss(batch, params, cfg, adv) >= adversarial_loss(batch, params, cfg, adv));
        CHECK(adversarial_loss(batch, params, cfg, adv) >= mean_clean_ce(batch, params, cfg));
    }
}

TEST_CASE("example loss graph matches the scalar loss paths") {
    ModelConfig cfg = small_config();
    ModelParams params = init_params(cfg);
    Rng rng(29);
    std::vector<VideoExample> batch;
    for (int i = 0; i < 5; ++i) batch.push_back(random_example(rng, cfg, 3 + rng.below(3)));
    AdvConfig adv;

    SUBCASE("non_art equals the clean classification loss") {
        for (const VideoExample& ex : batch) {
            ForwardOutput out = forward(ex.video_frames, ex.audio_frames, params, cfg);
            const double expected =
                classification_loss(out.probs, ex.label_vector(cfg.num_classes));
            CHECK(example_loss_value(ex, params, cfg, Regime::non_art, adv, nullptr) ==
                  doctest::Approx(expected).epsilon(1e-12));
        }
    }
    SUBCASE("art batch mean equals adversarial_loss") {
        double acc = 0.0;
        for (const VideoExample& ex : batch) {
            Perturbation r = fgsm_perturbation(ex, params, cfg, adv.epsilon);
            acc += example_loss_value(ex, params, cfg, Regime::art, adv, &r);
        }
        CHECK(acc / static_cast<double>(batch.size()) ==
              doctest::Approx(adversarial_loss(batch, params, cfg, adv)).epsilon(1e-12));
    }
    SUBCASE("a_art batch mean equals total_loss") {
        double acc = 0.0;
        for (const VideoExample& ex : batch) {
            Perturbation r = fgsm_perturbation(ex, params, cfg, adv.epsilon);
            acc += example_loss_value(ex, params, cfg, Regime::a_art, adv, &r);
        }
        CHECK(acc / static_cast<double>(batch.size()) ==
              doctest::Approx(total_loss(batch, params, cfg, adv)).epsilon(1e-6));
    }
    SUBCASE("art and a_art need a perturbation") {
        CHECK_THROWS_AS(build_example_loss(batch[0], params, cfg, Regime::art, adv, nullptr,
                                           false),
                        ConfigError);
    }
}

TEST_CASE("a_art loss gradients match finite differences with R held fixed") {
    ModelConfig cfg = small_config();
    ModelParams params = init_params(cfg);
    Rng rng(37);
    VideoExample ex = random_example(rng, cfg, 5);
    AdvConfig adv;
    Perturbation r = fgsm_perturbation(ex, params, cfg, adv.epsilon);

    ExampleLossGraph built =
        build_example_loss(ex, params, cfg, Regime::a_art, adv, &r, /*inputs_require_grad=*/true);
    std::vector<NodeId> wrt = built.params.all();
    wrt.push_back(built.x_video);
    wrt.push_back(built.x_audio);
    GradientMap analytic = built.graph.backward(built.loss, wrt);

    const double h = 1e-3;
    double max_err = 0.0;
    auto fd_check = [&](Tensor& target, const Tensor& grad) {
        for (std::size_t i = 0; i < target.numel(); ++i) {
            const float x0 = target.at(i);
            const float xp = static_cast<float>(static_cast<double>(x0) + h);
            const float xm = static_cast<float>(static_cast<double>(x0) - h);
            target.at(i) = xp;
            const double lp = example_loss_value(ex, params, cfg, Regime::a_art, adv, &r);
            target.at(i) = xm;
            const double lm = example_loss_value(ex, params, cfg, Regime::a_art, adv, &r);
            target.at(i) = x0;
            const double cd =
                (lp - lm) / (static_cast<double>(xp) - static_cast<double>(xm));
            const double err = std::fabs(static_cast<double>(grad.at(i)) - cd) /
                               std::max(1.0, std::fabs(cd));
            max_err = std::max(max_err, err);
        }
    };

    std::vector<Tensor*> tensors = params.tensors();
    for (std::size_t j = 0; j < tensors.size(); ++j) fd_check(*tensors[j], analytic.at(wrt[j]));
    fd_check(ex.video_frames, analytic.at(built.x_video));
    fd_check(ex.audio_frames, analytic.at(built.x_audio));
    CHECK(max_err < 1e-3);
}

TEST_CASE("fgsm attack does not decrease the loss of a trained model") {
    SyntheticSpec spec;
    spec.num_classes = 6;
    spec.video_dim = 12;
    spec.audio_dim = 6;
    spec.min_frames = 6;
    spec.max_frames = 10;
    spec.num_videos = 240;
    spec.motif_length = 3;
    spec.seed = 7;
    Dataset data = generate_synthetic(spec);
    Splits parts = split(data, 0.8, 0.2, 0.0, 11);

    ModelConfig model;
    model.num_classes = spec.num_classes;
    model.video_dim = spec.video_dim;
    model.audio_dim = spec.audio_dim;
    model.model_dim = 8;
    model.num_heads = 2;
    model.max_frames = spec.max_frames;
    model.seed = 13;

    TrainConfig tc;
    tc.regime = Regime::non_art;
    tc.lr = 0.003;
    tc.batch_size = 16;
    tc.eval_every = 50;
    tc.max_iterations = 150;
    tc.seed = 3;
    TrainResult result = train(tc, model, parts.train, parts.val);

    std::span<const VideoExample> probe(parts.val.examples.data(),
                                        std::min<std::size_t>(parts.val.size(), 40));
    const double clean = mean_clean_ce(probe, result.params, model);
    for (double eps : {0.1, 0.5, 1.0}) {
        double adv = 0.0;
        for (const VideoExample& ex : probe) {
            Perturbation r = fgsm_perturbation(ex, result.params, model, eps);
            ForwardOutput out = forward(add2(ex.video_frames, r.video),
                                        add2(ex.audio_frames, r.audio), result.params, model);
            adv += classification_loss(out.probs, ex.label_vector(model.num_classes));
        }
        adv /= static_cast<double>(probe.size());
        CHECK(adv >= clean);
    }
}

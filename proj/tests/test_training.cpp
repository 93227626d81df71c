#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "aart/data.hpp"
#include "aart/errors.hpp"
#include "aart/textio.hpp"
#include "aart/training.hpp"

using namespace aart;

namespace {

ModelConfig small_model() {
    ModelConfig cfg;
    cfg.num_classes = 3;
    cfg.video_dim = 6;
    cfg.audio_dim = 3;
    cfg.model_dim = 4;
    cfg.num_heads = 2;
    cfg.max_frames = 10;
    cfg.seed = 2;
    return cfg;
}

Dataset small_data(std::uint64_t seed, std::size_t videos) {
    SyntheticSpec spec;
    spec.num_classes = 3;
    spec.video_dim = 6;
    spec.audio_dim = 3;
    spec.min_frames = 7;
    spec.max_frames = 10;
    spec.num_videos = videos;
    spec.motif_length = 3;
    spec.seed = seed;
    return generate_synthetic(spec);
}

TrainConfig fast_config() {
    TrainConfig tc;
    tc.lr = 0.001;
    tc.batch_size = 8;
    tc.eval_every = 10;
    tc.max_iterations = 30;
    tc.seed = 6;
    tc.threads = 1;
    return tc;
}

ModelParams toy_params() {
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
    return p;
}

std::vector<Tensor> zero_grads(const ModelParams& p) {
    std::vector<Tensor> g;
    for (const Tensor* t : p.tensors()) g.emplace_back(t->shape());
    return g;
}

bool same_params(const ModelParams& a, const ModelParams& b) {
    auto ta = a.tensors(), tb = b.tensors();
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i)
        if (!(*ta[i] == *tb[i])) return false;
    return true;
}

}  // namespace

TEST_CASE("adam leaves parameters unchanged under zero gradients") {
    ModelParams p = toy_params();
    ModelParams original = toy_params();
    AdamState state = AdamState::init(p);
    for (int i = 0; i < 3; ++i) adam_step(p, zero_grads(p), state, 0.01);
    CHECK(same_params(p, original));
    CHECK(state.step == 3);
}

TEST_CASE("first adam step matches the scalar hand calculation") {
    ModelParams p = toy_params();
    std::vector<Tensor> grads = zero_grads(p);
    const double g = 0.5;
    grads.back() = Tensor({1}, {static_cast<float>(g)});  // b_cls slot

    AdamState state = AdamState::init(p);
    const double lr = 0.01;
    adam_step(p, grads, state, lr);

    const double mi = (1.0 - AdamState::kBeta1) * g;
    const double vi = (1.0 - AdamState::kBeta2) * g * g;
    const double bc1 = 1.0 - AdamState::kBeta1;
    const double bc2 = 1.0 - AdamState::kBeta2;
    const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + AdamState::kEps);
    const float expected = static_cast<float>(static_cast<double>(0.1f) - update);
    CHECK(p.b_cls.at(0) == expected);
    // Bias correction makes the first-step magnitude essentially lr.
    CHECK(update == doctest::Approx(lr).epsilon(1e-6));

    ModelParams original = toy_params();
    CHECK(p.video.w_in == original.video.w_in);
    CHECK(p.w_cls == original.w_cls);
}

TEST_CASE("adam rejects mismatched gradients") {
    ModelParams p = toy_params();
    AdamState state = AdamState::init(p);
    std::vector<Tensor> grads = zero_grads(p);
    grads.pop_back();
    CHECK_THROWS_AS(adam_step(p, grads, state, 0.01), ConfigError);
    grads = zero_grads(p);
    grads[0] = Tensor({3, 1});
    CHECK_THROWS_AS(adam_step(p, grads, state, 0.01), ShapeError);
}

TEST_CASE("train config validation") {
    TrainConfig tc = fast_config();
    CHECK_NOTHROW(tc.validate());
    TrainConfig bad = tc;
    bad.lr = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = tc;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = tc;
    bad.eval_every = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = tc;
    bad.plateau_factor = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = tc;
    bad.early_stop_patience = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("max_iterations 0 returns the initial parameters and no history") {
    ModelConfig model = small_model();
    Dataset train_set = small_data(3, 40);
    Dataset val_set = small_data(4, 16);
    TrainConfig tc = fast_config();
    tc.max_iterations = 0;
    TrainResult res = train(tc, model, train_set, val_set);
    CHECK(same_params(res.params, init_params(model)));
    CHECK(res.report.history.empty());
    CHECK(res.report.iterations == 0);
    CHECK(res.report.stop_reason == "max_iterations");
}

TEST_CASE("training rejects empty splits") {
    ModelConfig model = small_model();
    Dataset data = small_data(3, 20);
    CHECK_THROWS_AS(train(fast_config(), model, Dataset{}, data), ConfigError);
    CHECK_THROWS_AS(train(fast_config(), model, data, Dataset{}), ConfigError);
}

TEST_CASE("training is deterministic, including across thread counts") {
    ModelConfig model = small_model();
    Dataset train_set = small_data(3, 60);
    Dataset val_set = small_data(4, 24);
    TrainConfig tc = fast_config();
    tc.regime = Regime::a_art;

    TrainResult a = train(tc, model, train_set, val_set);
    TrainResult b = train(tc, model, train_set, val_set);
    tc.threads = 2;
    TrainResult c = train(tc, model, train_set, val_set);

    for (const TrainResult* other : {&b, &c}) {
        CHECK(same_params(a.params, other->params));
        REQUIRE(a.report.history.size() == other->report.history.size());
        for (std::size_t i = 0; i < a.report.history.size(); ++i) {
            CHECK(a.report.history[i].iteration == other->report.history[i].iteration);
            CHECK(a.report.history[i].val_gap == other->report.history[i].val_gap);
            CHECK(a.report.history[i].lr == other->report.history[i].lr);
            CHECK(a.report.history[i].train_loss == other->report.history[i].train_loss);
        }
        REQUIRE(a.report.iteration_losses.size() == other->report.iteration_losses.size());
        for (std::size_t i = 0; i < a.report.iteration_losses.size(); ++i)
            CHECK(a.report.iteration_losses[i] == other->report.iteration_losses[i]);
    }
}

TEST_CASE("history is strictly increasing and ends with a terminal eval") {
    ModelConfig model = small_model();
    Dataset train_set = small_data(3, 60);
    Dataset val_set = small_data(4, 24);
    TrainConfig tc = fast_config();
    tc.max_iterations = 25;  // not a multiple of eval_every
    TrainResult res = train(tc, model, train_set, val_set);

    REQUIRE(res.report.history.size() == 3);
    CHECK(res.report.history[0].iteration == 10);
    CHECK(res.report.history[1].iteration == 20);
    CHECK(res.report.history[2].iteration == 25);
    CHECK(res.report.iterations == 25);
    CHECK(res.report.stop_reason == "max_iterations");
    CHECK(res.report.iteration_losses.size() == 25);

    double max_gap = 0.0;
    for (const EvalPoint& p : res.report.history) max_gap = std::max(max_gap, p.val_gap);
    CHECK(res.report.best_val_gap >= max_gap - 1e-6);
    bool found = false;
    for (const EvalPoint& p : res.report.history)
        if (p.iteration == res.report.best_iteration && p.val_gap == res.report.best_val_gap)
            found = true;
    CHECK(found);
    for (std::size_t i = 1; i < res.report.history.size(); ++i) {
        CHECK(res.report.history[i].iteration > res.report.history[i - 1].iteration);
        CHECK(res.report.history[i].lr <= res.report.history[i - 1].lr);
    }
}

TEST_CASE("a never-improving run stops and cuts the rate on schedule") {
    // Every video carries all classes as labels, so any scores give GAP 1.0
    // and no eval after the first can improve by 1e-6.
    ModelConfig model = small_model();
    SyntheticSpec spec;
    spec.num_classes = 3;
    spec.video_dim = 6;
    spec.audio_dim = 3;
    spec.min_frames = 9;
    spec.max_frames = 10;
    spec.num_videos = 50;
    spec.min_labels = spec.max_labels = 3;
    spec.motif_length = 3;
    spec.seed = 8;
    model.max_frames = spec.max_frames;
    Dataset train_set = generate_synthetic(spec);
    spec.seed = 9;
    spec.num_videos = 20;
    Dataset val_set = generate_synthetic(spec);

    TrainConfig tc = fast_config();
    tc.max_iterations = 1000;
    tc.early_stop_patience = 5;
    tc.plateau_patience = 3;

    TrainResult res = train(tc, model, train_set, val_set);
    // First eval improves from nothing; exactly early_stop_patience more follow.
    REQUIRE(res.report.history.size() == 6);
    CHECK(res.report.stop_reason == "early_stop");
    CHECK(res.report.iterations == 60);
    CHECK(res.report.best_iteration == 10);
    CHECK(res.report.best_val_gap == 1.0);
    // The cut lands after plateau_patience non-improving evals: evals 5 and 6
    // run at exactly plateau_factor times the initial rate.
    for (int i = 0; i < 4; ++i) CHECK(res.report.history[i].lr == tc.lr);
    CHECK(res.report.history[4].lr == tc.plateau_factor * tc.lr);
    CHECK(res.report.history[5].lr == tc.plateau_factor * tc.lr);
}

TEST_CASE("art with epsilon 0 tracks (1 + alpha) times the non_art loss") {
    ModelConfig model = small_model();
    Dataset train_set = small_data(3, 60);
    Dataset val_set = small_data(4, 24);

    TrainConfig base = fast_config();
    base.regime = Regime::non_art;
    TrainResult plain = train(base, model, train_set, val_set);

    TrainConfig art = base;
    art.regime = Regime::art;
    art.adv.epsilon = 0.0;
    art.adv.alpha = 1.0;
    TrainResult reg = train(art, model, train_set, val_set);

    REQUIRE(plain.report.iteration_losses.size() == reg.report.iteration_losses.size());
    for (std::size_t i = 0; i < plain.report.iteration_losses.size(); ++i) {
        const double expected = 2.0 * plain.report.iteration_losses[i];
        CHECK(std::fabs(reg.report.iteration_losses[i] - expected) /
                  std::max(1.0, expected) <=
              1e-5);
    }
}

TEST_CASE("a_art with beta 0 is bitwise identical to art") {
    ModelConfig model = small_model();
    Dataset train_set = small_data(3, 60);
    Dataset val_set = small_data(4, 24);

    TrainConfig art = fast_config();
    art.regime = Regime::art;
    TrainConfig aart = art;
    aart.regime = Regime::a_art;
    aart.adv.beta_fr = 0.0;

    TrainResult a = train(art, model, train_set, val_set);
    TrainResult b = train(aart, model, train_set, val_set);
    CHECK(same_params(a.params, b.params));
    REQUIRE(a.report.iteration_losses.size() == b.report.iteration_losses.size());
    for (std::size_t i = 0; i < a.report.iteration_losses.size(); ++i)
        CHECK(a.report.iteration_losses[i] == b.report.iteration_losses[i]);
}

TEST_CASE("an absurd learning rate reports divergence with the iteration") {
    ModelConfig model = small_model();
    Dataset train_set = small_data(3, 40);
    Dataset val_set = small_data(4, 16);
    TrainConfig tc = fast_config();
    tc.lr = 1e20;
    CHECK_THROWS_WITH_AS(train(tc, model, train_set, val_set),
                         doctest::Contains("diverged"), NumericError);
}

TEST_CASE("sweep of a single grid point matches a standalone run") {
    ModelConfig model = small_model();
    Dataset train_set = small_data(3, 60);
    Dataset val_set = small_data(4, 24);
    TrainConfig base = fast_config();
    base.regime = Regime::art;

    std::vector<SweepPoint> points = sweep(base, model, "epsilon", {0.5}, train_set, val_set);
    REQUIRE(points.size() == 1);
    CHECK(points[0].status == "ok");
    CHECK(points[0].param == "epsilon");
    CHECK(points[0].value == 0.5);

    TrainConfig solo = base;
    solo.adv.epsilon = 0.5;
    TrainResult res = train(solo, model, train_set, val_set);
    CHECK(points[0].val_gap == res.report.best_val_gap);
    CHECK(points[0].best_iteration == res.report.best_iteration);
}

TEST_CASE("alpha sweep emits one row per grid value in order") {
    ModelConfig model = small_model();
    Dataset train_set = small_data(3, 40);
    Dataset val_set = small_data(4, 16);
    TrainConfig base = fast_config();
    base.regime = Regime::a_art;
    base.max_iterations = 10;

    const std::vector<double> grid = {0.25, 1.0, 4.0};
    std::vector<SweepPoint> points = sweep(base, model, "alpha", grid, train_set, val_set);
    REQUIRE(points.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(points[i].param == "alpha");
        CHECK(points[i].value == grid[i]);
        CHECK(points[i].status == "ok");
    }
}

TEST_CASE("sweep marks failed grid points and keeps going") {
    ModelConfig model = small_model();
    Dataset train_set = small_data(3, 40);
    Dataset val_set = small_data(4, 16);
    TrainConfig base = fast_config();
    base.regime = Regime::art;
    base.max_iterations = 10;

    std::vector<SweepPoint> points =
        sweep(base, model, "epsilon", {-1.0, 0.5}, train_set, val_set);
    REQUIRE(points.size() == 2);
    CHECK(points[0].status.rfind("error:", 0) == 0);
    CHECK(points[1].status == "ok");

    CHECK_THROWS_AS(sweep(base, model, "lr", {0.1}, train_set, val_set), ConfigError);
    CHECK_THROWS_AS(sweep(base, model, "epsilon", {}, train_set, val_set), ConfigError);
}

TEST_CASE("report and sweep tables round-trip through their CSV files") {
    ModelConfig model = small_model();
    Dataset train_set = small_data(3, 40);
    Dataset val_set = small_data(4, 16);
    TrainConfig tc = fast_config();
    tc.max_iterations = 20;
    TrainResult res = train(tc, model, train_set, val_set);

    const std::string report_path = "test_report.csv";
    write_train_report_csv(report_path, res.report);
    std::string text = read_text_file(report_path);
    REQUIRE(text.rfind("iteration,val_gap,lr,train_loss\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    CHECK(lines == res.report.history.size() + 1);
    std::remove(report_path.c_str());

    std::vector<SweepPoint> points = sweep(tc, model, "epsilon", {0.5}, train_set, val_set);
    const std::string sweep_path = "test_sweep.csv";
    write_sweep_csv(sweep_path, points);
    text = read_text_file(sweep_path);
    REQUIRE(text.rfind("param,value,val_gap,best_iteration,status\n", 0) == 0);
    CHECK(text.find("epsilon,0.5,") != std::string::npos);
    std::remove(sweep_path.c_str());
}

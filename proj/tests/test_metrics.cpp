#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "aart/errors.hpp"
#include "aart/metrics.hpp"
#include "aart/rng.hpp"
#include "oracles.hpp"

using namespace aart;

namespace {

// Random prediction set with unique zero-padded ids. Quantized scores force
// score ties so the deterministic tie-break paths are exercised.
PredictionSet random_set(Rng& rng, std::size_t videos, std::size_t classes, bool quantized) {
    PredictionSet preds(videos);
    for (std::size_t v = 0; v < videos; ++v) {
        char id[16];
        std::snprintf(id, sizeof(id), "v%04zu", v);
        preds[v].id = id;
        preds[v].scores.resize(classes);
        for (auto& s : preds[v].scores)
            s = quantized ? static_cast<float>(rng.below(9)) / 8.0f : rng.uniform_f32(0.0f, 1.0f);
        const std::size_t n = 1 + rng.below(3);
        while (preds[v].labels.size() < n) {
            auto c = static_cast<std::uint32_t>(rng.below(classes));
            if (std::find(preds[v].labels.begin(), preds[v].labels.end(), c) ==
                preds[v].labels.end())
                preds[v].labels.push_back(c);
        }
        std::sort(preds[v].labels.begin(), preds[v].labels.end());
    }
    return preds;
}

}  // namespace

TEST_CASE("perfect single-label predictions score 1.0 on all metrics") {
    PredictionSet preds(5);
    for (std::size_t v = 0; v < 5; ++v) {
        preds[v].id = "p" + std::to_string(v);
        preds[v].scores.assign(6, 0.0f);
        preds[v].scores[v] = 1.0f;
        preds[v].labels = {static_cast<std::uint32_t>(v)};
    }
    CHECK(gap(preds) == 1.0);
    CHECK(perr(preds) == 1.0);
    CHECK(hit_at_1(preds) == 1.0);
}

TEST_CASE("all-equal scores rank by class index, giving the hand AP") {
    PredictionSet preds(1);
    preds[0].id = "only";
    preds[0].scores.assign(4, 0.5f);
    preds[0].labels = {2};
    // Tie-broken order is 0,1,2,3; the single positive sits at rank 3.
    CHECK(gap(preds, 4) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("labels pushed out of the top-k pool count as misses") {
    PredictionSet preds(1);
    preds[0].id = "v";
    preds[0].scores = {0.9f, 0.8f, 0.7f, 0.6f, 0.1f};
    preds[0].labels = {4};
    CHECK(gap(preds, 2) == 0.0);
    CHECK(gap(preds, 5) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("perr counts hits among the top-n ranked classes") {
    PredictionSet preds(1);
    preds[0].id = "v";
    preds[0].scores = {0.9f, 0.1f, 0.2f, 0.3f, 0.15f, 0.8f};
    preds[0].labels = {0, 1};
    CHECK(perr(preds) == 0.5);
}

TEST_CASE("hit_at_1 is zero when the argmax is never a true label") {
    PredictionSet preds(3);
    for (std::size_t v = 0; v < 3; ++v) {
        preds[v].id = "v" + std::to_string(v);
        preds[v].scores = {0.9f, 0.2f, 0.1f};
        preds[v].labels = {1};
    }
    CHECK(hit_at_1(preds) == 0.0);
}

TEST_CASE("metrics match brute-force references on random prediction sets") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        PredictionSet preds = random_set(rng, 200, 20, trial % 2 == 0);
        const double g = gap(preds);
        const double p = perr(preds);
        const double h = hit_at_1(preds);
        CHECK(std::fabs(g - oracle::gap(preds, 20)) <= 1e-9);
        CHECK(std::fabs(p - oracle::perr(preds)) <= 1e-12);
        CHECK(h == oracle::hit_at_1(preds));
        CHECK(g >= 0.0);
        CHECK(g <= 1.0);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(h >= 0.0);
        CHECK(h <= 1.0);
    }
}

TEST_CASE("perr equals hit_at_1 when every video has exactly one label") {
    Rng rng(78);
    PredictionSet preds = random_set(rng, 150, 12, true);
    for (auto& p : preds) p.labels.resize(1);
    CHECK(perr(preds) == hit_at_1(preds));
}

TEST_CASE("metrics are invariant under video reordering") {
    Rng rng(79);
    PredictionSet preds = random_set(rng, 100, 10, true);
    PredictionSet shuffled = preds;
    rng.shuffle(shuffled);
    CHECK(gap(shuffled) == gap(preds));
    CHECK(perr(shuffled) == doctest::Approx(perr(preds)).epsilon(1e-12));
    CHECK(hit_at_1(shuffled) == hit_at_1(preds));
}

TEST_CASE("gap is invariant under a strictly monotone score rescale") {
    Rng rng(80);
    // Quantized scores keep s/2 + 1/4 exactly representable, so the rescale
    // preserves ties as well as the strict order.
    PredictionSet preds = random_set(rng, 120, 10, true);
    PredictionSet scaled = preds;
    for (auto& p : scaled)
        for (auto& s : p.scores) s = s / 2.0f + 0.25f;
    CHECK(gap(scaled) == gap(preds));
}

TEST_CASE("prediction set validation") {
    CHECK_THROWS_AS(gap({}), ConfigError);
    CHECK_THROWS_AS(perr({}), ConfigError);
    CHECK_THROWS_AS(hit_at_1({}), ConfigError);

    PredictionSet ok(1);
    ok[0].id = "v";
    ok[0].scores = {0.5f, 0.5f};
    ok[0].labels = {0};
    CHECK_NOTHROW(gap(ok));
    CHECK_THROWS_AS(gap(ok, 0), ConfigError);

    PredictionSet bad = ok;
    bad[0].scores[1] = 1.5f;
    CHECK_THROWS_AS(gap(bad), ConfigError);
    bad = ok;
    bad[0].scores[0] = std::nanf("");
    CHECK_THROWS_AS(perr(bad), ConfigError);
    bad = ok;
    bad[0].labels = {7};
    CHECK_THROWS_AS(hit_at_1(bad), ConfigError);
    bad = ok;
    bad[0].labels.clear();
    CHECK_THROWS_AS(gap(bad), ConfigError);
}

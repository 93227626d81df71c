#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace aart {

// Deterministic RNG: mt19937_64 (sequence fixed by the standard) with
// hand-rolled distributions, since std::uniform_real_distribution and
// std::normal_distribution are implementation-defined. Same seed gives
// the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    float uniform_f32(float lo, float hi) {
        return static_cast<float>(uniform(static_cast<double>(lo), static_cast<double>(hi)));
    }

    // Unbiased integer in [0, n) via rejection sampling.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        // Guard log(0).
        while (u1 <= 0.0) u1 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        has_spare_ = true;
        return mag * std::cos(two_pi * u2);
    }

    float normal_f32(float mean, float stddev) {
        return static_cast<float>(static_cast<double>(mean) +
                                  static_cast<double>(stddev) * normal());
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derives an independent child seed; used for per-epoch shuffles etc.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t key) {
        // splitmix64 finalizer over the combined value
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (key + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace aart

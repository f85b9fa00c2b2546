#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace imrl {

// xoshiro256++ with explicit bit-to-double conversion. Distribution sampling
// is done by hand (never std::*_distribution) so that a (config, seed) pair
// produces the same byte stream on every platform and an RNG state can be
// checkpointed and restored exactly. Copyable value type: snapshot = copy.
class RngStream {
public:
    RngStream() : RngStream(0, "default") {}

    RngStream(std::uint64_t seed, std::string_view stream_name) {
        std::uint64_t x = seed ^ fnv1a(stream_name);
        for (auto& word : state_) word = splitmix64(x);
        has_cached_normal_ = false;
        cached_normal_ = 0.0;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1]; safe as a log() argument.
    double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the pair's second value is cached.
    double normal() {
        if (has_cached_normal_) {
            has_cached_normal_ = false;
            return cached_normal_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double theta = 2.0 * kPi * uniform();
        cached_normal_ = r * std::sin(theta);
        has_cached_normal_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n). n = 0 is a caller bug; returns 0.
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    // State access for checkpointing.
    struct State {
        std::uint64_t words[4];
        bool has_cached_normal;
        double cached_normal;
    };
    State save() const {
        State s{};
        for (int i = 0; i < 4; ++i) s.words[i] = state_[i];
        s.has_cached_normal = has_cached_normal_;
        s.cached_normal = cached_normal_;
        return s;
    }
    void restore(const State& s) {
        for (int i = 0; i < 4; ++i) state_[i] = s.words[i];
        has_cached_normal_ = s.has_cached_normal;
        cached_normal_ = s.cached_normal;
    }

    static std::uint64_t fnv1a(std::string_view text) {
        std::uint64_t h = 14695981039346656037ull;
        for (unsigned char c : text) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

private:
    static constexpr double kPi = 3.14159265358979323846;

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_[4];
    bool has_cached_normal_;
    double cached_normal_;
};

/// The per-seed streams of one training run. Ablation variants built from the
/// same seed consume identical env randomness because each concern draws from
/// its own stream.
struct RngBundle {
    RngStream env;
    RngStream policy;
    RngStream augmentation;
    RngStream buffer;

    explicit RngBundle(std::uint64_t seed = 0)
        : env(seed, "env"),
          policy(seed, "policy"),
          augmentation(seed, "augmentation"),
          buffer(seed, "buffer") {}
};

} // namespace imrl

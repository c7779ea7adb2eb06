#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace beliefroute {

/// Seeded random stream with cheap derivation of independent substreams.
///
/// The same (seed, stream_id) always reproduces the same draw sequence, so
/// any component of a run can be replayed in isolation. Substreams are
/// derived from the parent's identity only, never from its draw position;
/// handing out substreams does not perturb the parent.
///
/// Bit-identical sequences are guaranteed per build, not across standard
/// library implementations (the distributions are stdlib ones).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_(stream_id) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(seed),
            static_cast<std::uint32_t>(seed >> 32),
            static_cast<std::uint32_t>(stream_id),
            static_cast<std::uint32_t>(stream_id >> 32),
        };
        engine_.seed(seq);
    }

    /// Derive the child stream with the given index. Deterministic in
    /// (seed, parent stream_id, child index).
    [[nodiscard]] RngStream substream(std::uint64_t child) const {
        return RngStream(seed_, mix(stream_, child));
    }

    /// Named substream; the name is hashed (FNV-1a) into a child index.
    [[nodiscard]] RngStream substream(std::string_view name) const {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : name) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return substream(h);
    }

    /// Uniform draw in [0, 1).
    double uniform01() {
        ++draws_;
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    /// Bernoulli trial with success probability p.
    bool bernoulli(double p) { return uniform01() < p; }

    /// Gamma(shape, 1) draw.
    double gamma(double shape) {
        ++draws_;
        return std::gamma_distribution<double>(shape, 1.0)(engine_);
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        ++draws_;
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }

    /// Standard normal draw.
    double normal() {
        ++draws_;
        std::normal_distribution<double> d(0.0, 1.0);
        return d(engine_);
    }

    /// Number of primitive draws consumed so far.
    [[nodiscard]] std::uint64_t draws() const { return draws_; }

    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] std::uint64_t stream_id() const { return stream_; }

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        // splitmix64 finalizer over the combined words
        std::uint64_t z = a + 0x9E3779B97F4A7C15ull + b * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t draws_ = 0;
};

}  // namespace beliefroute

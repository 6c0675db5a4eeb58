#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace offat {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seeded generator with platform-independent draws.
///
/// std::mt19937_64 output is fully specified by the standard; the bounded
/// and real-valued draws below are written out so that traces stay
/// byte-identical across standard library implementations. A generator
/// built with `Rng::system()` pulls key material from the OS CSPRNG instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng system();

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in the inclusive range [lo, hi].
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);

    /// Uniform real in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool secure() const noexcept { return secure_; }

    /// Fills `out` with random bytes (OS CSPRNG when secure()).
    void fill(std::span<std::uint8_t> out);

private:
    std::mt19937_64 engine_;
    bool secure_ = false;
};

}  // namespace offat

#include "offat/rng.hpp"

#include <limits>

#include <openssl/rand.h>

#include "offat/error.hpp"

namespace offat {

Rng Rng::system() {
    std::uint64_t seed = 0;
    if (RAND_bytes(reinterpret_cast<unsigned char*>(&seed), sizeof seed) != 1) {
        seed = std::random_device{}();
    }
    Rng rng(seed);
    rng.secure_ = true;
    return rng;
}

std::uint64_t Rng::uniform(std::uint64_t lo, std::uint64_t hi) {
    if (lo > hi) throw Error(Errc::InvalidArgument, "empty range");
    const std::uint64_t span = hi - lo;
    if (span == std::numeric_limits<std::uint64_t>::max()) return engine_();
    const std::uint64_t n = span + 1;
    // Reject the short tail so every residue is equally likely.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return lo + x % n;
}

void Rng::fill(std::span<std::uint8_t> out) {
    if (secure_ && RAND_bytes(out.data(), static_cast<int>(out.size())) == 1) return;
    std::size_t i = 0;
    while (i < out.size()) {
        std::uint64_t word = engine_();
        for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
            out[i] = static_cast<std::uint8_t>(word >> (8 * b));
        }
    }
}

}  // namespace offat

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "offat/device_id.hpp"

namespace offat {

class Rng;

/// 256-bit group pre-shared key, rendered as 64 hex digits.
struct GroupKey {
    std::array<std::uint8_t, 32> bytes{};

    bool operator==(const GroupKey&) const = default;

    std::string hex() const;
    static GroupKey generate(Rng& rng);
};

/// Case-insensitive. Throws Errc::BadLength or Errc::BadDigit.
GroupKey parse_psk(std::string_view hex);

inline constexpr std::size_t kNonceBytes = 12;
inline constexpr std::size_t kTagBytes = 16;

/// Travels in the clear but is bound to the ciphertext as associated data.
struct SealedHeader {
    DeviceId sender;
    std::uint64_t seq = 0;
    std::uint8_t kind = 0;

    bool operator==(const SealedHeader&) const = default;

    std::array<std::uint8_t, 25> aad() const;
};

struct SealedFrame {
    SealedHeader header;
    std::array<std::uint8_t, kNonceBytes> nonce{};
    std::vector<std::uint8_t> ciphertext;  // includes the trailing tag

    bool operator==(const SealedFrame&) const = default;
};

/// Sender-unique 4-byte prefix followed by a 64-bit counter. Owned by the
/// sender and never reset while the device lives, so a key reused across
/// group sessions still never sees a repeated nonce from this sender.
class NonceState {
public:
    explicit NonceState(const DeviceId& sender);

    /// Throws Errc::NonceExhausted once the counter would wrap.
    std::array<std::uint8_t, kNonceBytes> next();

    std::uint64_t counter() const noexcept { return counter_; }
    /// Test hook for the exhaustion path.
    void set_counter(std::uint64_t value) noexcept { counter_ = value; }

private:
    std::array<std::uint8_t, 4> prefix_{};
    std::uint64_t counter_ = 0;
};

/// AES-256-GCM over plaintext with the header as associated data.
SealedFrame seal(const GroupKey& key, const SealedHeader& header,
                 std::span<const std::uint8_t> plaintext, NonceState& nonce_state);

/// Throws Errc::AuthenticationFailure when the tag does not verify.
std::pair<SealedHeader, std::vector<std::uint8_t>> open(const GroupKey& key, const SealedFrame& sealed);

}  // namespace offat

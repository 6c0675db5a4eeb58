#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace offat {

class Rng;

/// 16-byte opaque identifier. Stands in for the MAC device ID and is also
/// the shape of invitation tokens.
template <typename Tag>
struct Id16 {
    std::array<std::uint8_t, 16> bytes{};

    auto operator<=>(const Id16&) const = default;

    std::string hex() const;
    static Id16 from_hex(std::string_view text);
    static Id16 random(Rng& rng);
};

struct DeviceTag {};
struct InvitationTag {};
using DeviceId = Id16<DeviceTag>;
using InvitationId = Id16<InvitationTag>;

/// Deterministic id from an arbitrary label (first 16 bytes of SHA-256).
DeviceId device_id_from_label(std::string_view label);

}  // namespace offat

template <typename Tag>
struct std::hash<offat::Id16<Tag>> {
    std::size_t operator()(const offat::Id16<Tag>& id) const noexcept {
        std::size_t h = 0;
        for (auto b : id.bytes) h = h * 131 + b;
        return h;
    }
};

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "offat/device_id.hpp"
#include "offat/security.hpp"

namespace offat {

inline constexpr std::array<std::uint8_t, 4> kWireMagic{'O', 'F', 'A', 'T'};
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kMaxDatagramBytes = 65'507;

enum class FrameType : std::uint8_t {
    Beacon = 0,
    Probe = 1,
    Invite = 2,
    InviteResponse = 3,
    GroupSealed = 4,
};

struct BeaconFrame {
    DeviceId device;
    std::string ssid;
    std::uint8_t listen_channel = 0;
    bool operator==(const BeaconFrame&) const = default;
};

struct ProbeFrame {
    DeviceId device;
    std::uint8_t channel = 0;
    std::string ssid;
    bool operator==(const ProbeFrame&) const = default;
};

struct InviteFrame {
    InvitationId invitation;
    DeviceId from;
    std::uint8_t go_intent = 0;
    std::string ssid;
    bool operator==(const InviteFrame&) const = default;
};

struct GroupCredentials {
    GroupKey psk;
    std::uint8_t group_address = 0;
    bool operator==(const GroupCredentials&) const = default;
};

struct InviteResponseFrame {
    InvitationId invitation;
    bool accept = false;
    std::uint8_t go_intent = 0;
    std::optional<GroupCredentials> credentials;  // only from the eventual owner
    bool operator==(const InviteResponseFrame&) const = default;
};

using WireFrame = std::variant<BeaconFrame, ProbeFrame, InviteFrame, InviteResponseFrame, SealedFrame>;

FrameType frame_type(const WireFrame& frame) noexcept;
const char* frame_type_name(FrameType type) noexcept;

/// Big-endian layout, "OFAT" magic + version 1 + type byte + body.
std::vector<std::uint8_t> encode_frame(const WireFrame& frame);

/// Throws Errc::MalformedFrame on bad magic/version/type, truncation,
/// trailing bytes or out-of-range length fields.
WireFrame decode_frame(std::span<const std::uint8_t> bytes);

}  // namespace offat
